#ifndef PCGSIM_CIRCUIT_HPP
#define PCGSIM_CIRCUIT_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcgsim/hilbert.hpp"

namespace pcg {

// Quantization of the concatenated ring-modulator circuit: one four-junction
// ring per qubit, all sharing the central ancilla mode. Mode ordering is
// q1..qN, t1..tN (ring common modes), p (ancilla). Energies are handled
// internally as angular frequencies in rad/ns; user-facing values are linear
// frequencies in GHz, converted exactly once at the interface.

/// Charging-energy prefactor: E_C [GHz] = kChargingGHzfF / C [fF].
constexpr double kChargingGHzfF = 19.370229324659118;

struct CircuitParams {
    int n_qubits = 2;
    std::vector<double> c_qubit_fF;                // C_i, one per qubit
    double c_ancilla_fF = 0.0;                     // C_P
    std::vector<double> c_junction_fF;             // C_Ji, one per ring
    std::vector<std::array<double, 4>> ej_ghz;     // E_Jik, four junctions per ring
    std::vector<double> flux;                      // Phi_xi in units of Phi0

    void validate() const;
    /// Equal junction energies within each ring.
    static CircuitParams symmetric(int n_qubits, std::vector<double> c_qubit_fF,
                                   double c_ancilla_fF, std::vector<double> c_junction_fF,
                                   std::vector<double> ej_ghz, std::vector<double> flux);
    /// Reference two-qubit device: C1 = C2 = 22 fF, CP = 19 fF, CJ = 4 fF,
    /// EJ1 = 10 GHz, EJ2 = 11 GHz.
    static CircuitParams reference_two_qubit();
    /// Reference four-qubit device: EJ = {13, 13, 12, 12} GHz,
    /// C = {13, 15, 13, 15} fF, CP = 13 fF, CJ = 4 fF.
    static CircuitParams reference_four_qubit();
};

struct ChargingEnergies {
    std::vector<double> qubit;  // E_Ci, rad/ns
    std::vector<double> theta;  // ~E_Ci, rad/ns
    double ancilla = 0.0;       // E_CP, rad/ns
};

/// E_Ci = 1/(8(C_i + C_Ji)), E_CP = 1/(8(C_P + sum_i C_Ji)), ~E_Ci = 1/(8 C_Ji)
/// in units 2e = hbar = 1, returned as rad/ns.
ChargingEnergies charging_energies(const CircuitParams& params);

/// The potential as a sum of cosines: V(x) = -sum_k E_k cos(s_k . x + d_k).
/// Junction k of ring i contributes signs on (q_i, p, t_i) from the ring
/// bond orientation table {(+,+,-), (+,-,+), (-,+,+), (-,-,-)} and offset
/// pi * Phi_xi / 2.
struct CosineTerm {
    double energy = 0.0;            // rad/ns
    std::vector<double> signs;      // one per mode
    double offset = 0.0;
};

struct PotentialModel {
    int n_modes = 0;
    std::vector<CosineTerm> terms;

    double value(const RealVector& x) const;
    RealVector gradient(const RealVector& x) const;
    RealMatrix hessian(const RealVector& x) const;
};

PotentialModel potential_model(const CircuitParams& params);

/// Classical minimum reached from the origin (gradient descent with a Newton
/// polish). Throws if the walk does not converge.
RealVector find_potential_minimum(const PotentialModel& model);

/// Degree-<=4 polynomial coefficient table in the mode displacements around
/// an expansion point. Keys are per-mode exponent vectors.
struct PotentialSeries {
    int n_modes = 0;
    std::map<std::vector<uint8_t>, double> coeffs;  // rad/ns

    double coeff(const std::vector<uint8_t>& exponents) const;
    /// Coefficient of the squared displacement of one mode.
    double quadratic_coeff(int mode) const;
};

PotentialSeries potential_series(const CircuitParams& params,
                                 const std::optional<RealVector>& expansion_point = std::nullopt);
PotentialSeries series_of_model(const PotentialModel& model, const RealVector& point);

struct Truncation {
    int qubit = 4;    // lowest N+2 levels with N = 2 retained
    int theta = 3;
    int ancilla = 5;
};

enum class LocalOp : int { kPhi1 = 1, kPhi2, kPhi3, kPhi4, kQ2 };

struct QuantizedMode {
    std::string label;
    int dim = 0;
    double omega = 0.0;  // rad/ns
    double zeta = 0.0;   // characteristic impedance
    double e_c = 0.0;    // kinetic coefficient, rad/ns
};

struct HamiltonianTerm {
    double coeff = 0.0;
    std::vector<std::pair<int, int>> factors;  // (mode index, LocalOp)
};

/// Truncated quartic Hamiltonian as a term list over per-mode operators,
/// split implicitly into the number-basis diagonal H_D and the off-diagonal
/// remainder H_X. Dense forms are materialized on demand under a cap.
class QuarticHamiltonian {
  public:
    std::vector<QuantizedMode> modes;
    std::vector<HamiltonianTerm> terms;

    HilbertSpace space() const;
    int total_dim() const;
    const RealMatrix& local_op(int mode, int op) const;

    /// H_D entry for a product state.
    double diagonal_energy(const std::vector<int>& levels) const;

    Matrix dense_total(int dim_cap = 2000) const;
    Matrix dense_diagonal(int dim_cap = 2000) const;
    Matrix dense_offdiagonal(int dim_cap = 2000) const;

    mutable std::vector<std::array<RealMatrix, 6>> op_cache;
};

/// Promote the polynomial to ladder operators. Per mode, with kinetic
/// coefficient E_C and quadratic potential coefficient k (so the potential
/// carries k/2 phi^2): omega = sqrt(2 k E_C), zeta = sqrt(2 E_C / k).
/// Throws if any mode's quadratic coefficient is not positive.
QuarticHamiltonian quantize(const CircuitParams& params, const Truncation& truncation = {});
QuarticHamiltonian quantize_series(const PotentialSeries& series, const ChargingEnergies& charging,
                                   int n_qubits, const Truncation& truncation = {});

enum class SpectrumMethod { kRwa, kSw2, kExact };

struct SpectrumResult {
    SpectrumMethod method = SpectrumMethod::kSw2;
    int n_qubits = 0;
    std::vector<std::vector<int>> labels;
    std::vector<double> energies;  // rad/ns
    int degenerate_skips = 0;      // second-order pairs skipped near degeneracy

    double energy(const std::vector<int>& label) const;
};

/// Retained level set: every qubit configuration with n_i in {0,1}, ancilla
/// n_P in {0,1,2}, ring modes in the ground state, plus the single-excitation
/// labels of each ring mode.
std::vector<std::vector<int>> retained_labels(int n_qubits);

/// rwa: H_D eigenvalues on the retained set. sw2: second-order corrections
/// E_a + sum_b |<a|H_X|b>|^2 / (E_a - E_b) over the full truncated space.
/// exact: dense diagonalization with labels assigned by maximum overlap.
SpectrumResult spectrum(const QuarticHamiltonian& h, SpectrumMethod method,
                        const std::vector<std::vector<int>>& labels = {}, int exact_dim_cap = 2000);

/// User-facing effective parameters in GHz.
struct EffectiveParams {
    std::vector<double> omega_qubit_ghz;
    std::vector<double> omega_theta_ghz;
    double omega_ancilla_ghz = 0.0;  // conditional ancilla frequency, all qubits in |0>
    double alpha_ghz = 0.0;
    std::vector<double> g_ghz;
    std::vector<std::vector<double>> g_zz_ghz;  // [i][j], i < j, zero elsewhere
};

EffectiveParams effective_params(const SpectrumResult& spec);

struct FluxOptimization {
    std::vector<double> flux;        // Phi_xi / Phi0
    EffectiveParams effective;
    double g_spread_ghz = 0.0;       // |max g_i - min g_i|
    int evaluations = 0;
    bool converged = false;
};

/// Minimize the sample variance of the couplings g_i over the flux biases,
/// each restricted to [-0.25, 0.25]; derivative-free simplex search with
/// restarts, evaluated at the sw2 level.
FluxOptimization optimize_flux(const CircuitParams& params, int budget = 500,
                               uint64_t restart_seed = 7);

struct DisorderResult {
    std::vector<double> flux_values;
    RealMatrix mean_g_ghz;                  // n_flux x n_qubits
    RealMatrix std_g_ghz;                   // n_flux x n_qubits
    std::vector<RealMatrix> sample_g_ghz;   // per sample, n_flux x n_qubits
    std::vector<double> retuned_spread_ghz; // per sample (empty if not retuned)
    int rejected = 0;
};

/// Seeded junction-disorder ensemble: every junction energy drawn from
/// Normal(E_ideal, sigma_rel * E_ideal); each sample is expanded around its
/// own potential minimum and evaluated at the sw2 level across the flux
/// sweep (applied to ring 1). Samples whose quadratic form is not positive
/// definite anywhere on the sweep are rejected and redrawn. Fully
/// reproducible from the seed, independent of threading.
DisorderResult disorder_ensemble(const CircuitParams& params, double sigma_rel, int n_samples,
                                 uint64_t seed, const std::vector<double>& flux_sweep,
                                 bool retune = false, int retune_budget = 240, int threads = 1);

/// Deterministic splitmix64-based stream with Box-Muller gaussians.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}
    uint64_t next_u64();
    double uniform();   // [0, 1)
    double gaussian();  // standard normal

  private:
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace pcg

#endif
