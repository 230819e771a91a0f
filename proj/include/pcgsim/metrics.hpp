#ifndef PCGSIM_METRICS_HPP
#define PCGSIM_METRICS_HPP

#include "pcgsim/dynamics.hpp"
#include "pcgsim/hilbert.hpp"

namespace pcg {

/// Normalized Choi representation of a channel; trace deficit equals the
/// basis-averaged leakage out of the computational subspace.
struct ChoiState {
    int d = 0;
    Matrix rho;  // d^2 x d^2, Hermitian, eigenvalues >= -1e-7
    double trace() const { return rho.trace().real(); }
    double purity() const { return (rho * rho).trace().real(); }
};

/// rho_E = (1/d) sum_ij |i><j| (x) E(|i><j|), Hermitized.
ChoiState choi(const ProcessMap& map);

/// Choi state of conjugation by a unitary (pure).
ChoiState choi_of_unitary(const Matrix& u);

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2. Negative
/// eigenvalues within 1e-10 are clamped to zero.
double state_fidelity(const Matrix& rho, const Matrix& sigma);

/// Fidelity of a state against a pure target: <psi| rho |psi>.
double state_fidelity(const Matrix& rho, const Vector& psi);

/// Process fidelity of a simulated channel against an ideal unitary: the
/// ideal Choi state is pure, so this is <psi_ideal| rho_sim |psi_ideal>.
double process_fidelity(const ChoiState& sim, const Matrix& ideal_unitary);

/// Population outside the computational subspace at the end of a run.
double leakage(const EvolutionResult& result);

}  // namespace pcg

#endif
