#include "pcgsim/metrics.hpp"

#include <cmath>

namespace pcg {

ChoiState choi(const ProcessMap& map) {
    const int d = map.d;
    if (d == 0 || static_cast<int>(map.outputs.size()) != d * d) {
        throw std::invalid_argument("choi: incomplete process map");
    }
    ChoiState state;
    state.d = d;
    state.rho = Matrix::Zero(d * d, d * d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            const Matrix& block = map.e(i, j);
            if (block.rows() != d) throw std::invalid_argument("choi: missing map entry");
            // first factor is the input copy: row index i*d + r
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) state.rho(i * d + r, j * d + c) = block(r, c);
        }
    }
    state.rho /= static_cast<double>(d);
    state.rho = 0.5 * (state.rho + state.rho.adjoint()).eval();
    return state;
}

ChoiState choi_of_unitary(const Matrix& u) {
    const int d = static_cast<int>(u.rows());
    Vector psi(d * d);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) psi(i * d + k) = u(k, i) / std::sqrt(static_cast<double>(d));
    ChoiState state;
    state.d = d;
    state.rho = psi * psi.adjoint();
    return state;
}

namespace {

Matrix psd_sqrt(const Matrix& a) {
    auto [evals, evecs] = eig_hermitian(a, 1e-7);
    RealVector clamped = evals;
    for (int i = 0; i < clamped.size(); ++i) {
        if (clamped(i) < 0.0) {
            if (clamped(i) < -1e-7) {
                throw std::invalid_argument("state_fidelity: matrix is not PSD");
            }
            clamped(i) = 0.0;
        }
        clamped(i) = std::sqrt(clamped(i));
    }
    return evecs * clamped.asDiagonal() * evecs.adjoint();
}

}  // namespace

double state_fidelity(const Matrix& rho, const Matrix& sigma) {
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) {
        throw std::invalid_argument("state_fidelity: dimension mismatch");
    }
    const Matrix sq = psd_sqrt(rho);
    Matrix inner = sq * sigma * sq;
    inner = 0.5 * (inner + inner.adjoint()).eval();
    auto [evals, evecs] = eig_hermitian(inner, 1e-7);
    double sum = 0.0;
    for (int i = 0; i < evals.size(); ++i) {
        sum += std::sqrt(std::max(0.0, evals(i)));
    }
    return sum * sum;
}

double state_fidelity(const Matrix& rho, const Vector& psi) {
    if (rho.rows() != psi.size()) throw std::invalid_argument("state_fidelity: dim mismatch");
    return (psi.adjoint() * rho * psi)(0, 0).real();
}

double process_fidelity(const ChoiState& sim, const Matrix& ideal_unitary) {
    const int d = static_cast<int>(ideal_unitary.rows());
    if (sim.d != d) throw std::invalid_argument("process_fidelity: dimension mismatch");
    Vector psi(d * d);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k)
            psi(i * d + k) = ideal_unitary(k, i) / std::sqrt(static_cast<double>(d));
    return state_fidelity(sim.rho, psi);
}

double leakage(const EvolutionResult& result) { return result.leakage; }

}  // namespace pcg
