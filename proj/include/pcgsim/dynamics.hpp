#ifndef PCGSIM_DYNAMICS_HPP
#define PCGSIM_DYNAMICS_HPP

#include <functional>
#include <optional>
#include <vector>

#include "pcgsim/gates.hpp"
#include "pcgsim/hilbert.hpp"
#include "pcgsim/pulses.hpp"

namespace pcg {

// Driven open-system dynamics in the frame rotating at the drive carrier and
// the qubit frequencies. The retained Hamiltonian is
//   H(t) = Delta(Z) n_P + (alpha/2) n_P(n_P-1) + g_zz Z1 Z2 + c(t) b_P^dag + h.c.
// with Delta = -(g/2) sum Z_i and c(t) = -sum_k (Omega_k(t)/2) e^{i(-mu_k t + phi_k(t))}
// over the drive tones (mu_k = detuning from the ancilla frequency). Only the
// fast carrier-frequency terms are dropped; everything slower, including the
// AC-Stark and leakage physics, is kept.

/// One drive tone: detuning from the ancilla frequency plus amplitude and
/// phase samples on the integrator's half-step grid.
struct Tone {
    double detuning = 0.0;            // rad/ns
    std::vector<double> omega;        // amplitude samples, rad/ns
    std::vector<double> phase;        // phase samples (size 1 means constant)
};

struct DriveProgram {
    double total_time = 0.0;  // ns
    double dt = 0.01;         // ns
    int n_steps = 0;
    std::vector<Tone> tones;
    // Terminal integrals of the compensation-frame generator.
    double int_delta_q = 0.0;
    double int_delta_p1 = 0.0;
    double int_delta_p3 = 0.0;
    double chi = 0.0;  // per pi-pulse Stark phase, two-tone drive only

    /// Drive coefficient of b_P^dag at time t (sum over tones).
    Complex drive_coefficient(double t) const;
};

/// Device in the effective frame: n two-level qubits, one three-level ancilla.
struct DeviceModel {
    int n_qubits = 2;
    double g = 0.0;      // rad/ns
    double alpha = 0.0;  // rad/ns
    double g_zz = 0.0;   // parasitic Z1Z2 coefficient (two qubits), rad/ns
    double gamma_rel_qubit = 0.0;    // 1/ns
    double gamma_phi_qubit = 0.0;    // 1/ns (rate of L = n, i.e. 2/T_phi)
    double gamma_rel_ancilla = 0.0;
    double gamma_phi_ancilla = 0.0;

    HilbertSpace space() const { return qubit_ancilla_space(n_qubits, 3); }
    int dim() const { return (1 << n_qubits) * 3; }
    int comp_dim() const { return (1 << n_qubits) * 2; }

    /// T1 and pure-dephasing times in microseconds applied to every mode;
    /// dephasing rate 2/T_phi so nearest-level coherences decay at 1/T_phi.
    void set_noise(double t1_us, double tphi_us);

    /// Delta for a qubit configuration of the given Hamming weight.
    double delta_of_weight(int weight) const {
        return -0.5 * g * (n_qubits - 2 * weight);
    }
};

DeviceModel device_from_effective(const EffectiveModel& model);

/// Program builders. Amplitudes are pi-area calibrated from the envelope.
DriveProgram pcf_program_2q(const DeviceModel& model, double gate_time, double taper,
                            double base_phase, Scheme scheme, double dt);
DriveProgram pcf_program_4q(const DeviceModel& model, double gate_time, double taper,
                            double phi, Scheme scheme, double dt);
/// Two back-to-back flips realizing the parity-controlled phase gate;
/// pulse phases follow the two-pulse recipe with the executed-pulse chi.
DriveProgram pcp_program_4q(const DeviceModel& model, double pulse_time, double taper,
                            double phi, Scheme scheme, double dt);
/// No drive at all, for the given duration.
DriveProgram idle_program(double total_time, double dt);
/// Always-on tone at a fixed detuning; a nonzero taper ramps it on and off
/// adiabatically (flat top in between).
DriveProgram cw_tone_program(double total_time, double dt, double detuning, double amplitude,
                             double taper = 0.3);

/// Dense rotating-frame Hamiltonian of the driven device at time t.
Operator drive_hamiltonian(const DeviceModel& model, const DriveProgram& program, double t);
Operator drive_hamiltonian_2q(const DeviceModel& model, const DriveProgram& program, double t);
Operator drive_hamiltonian_4q(const DeviceModel& model, const DriveProgram& program, double t);

struct EvolveOptions {
    double dt = 0.01;               // ns
    bool store_populations = false;
    int store_stride = 25;          // steps between stored samples
    bool use_blocked = true;        // qubit-label blocked fast path
    double trace_tol = 1e-7;
};

struct EvolutionResult {
    DensityMatrix final_state;
    double trace_drift = 0.0;
    double leakage = 0.0;  // ancilla n_P = 2 population at final time
    std::vector<double> times;
    std::vector<std::vector<double>> populations;  // basis-state populations per stored time
};

/// Generic fixed-step RK4 GKSL propagation (dense). The state is symmetrized
/// each step; throws if the trace drifts beyond options.trace_tol.
struct CollapseTerm {
    Matrix op;
    double rate = 0.0;
};
using HamiltonianFn = std::function<Matrix(double)>;
EvolutionResult gksl_evolve(const DensityMatrix& rho0, const HamiltonianFn& h,
                            const std::vector<CollapseTerm>& collapse, double t_final,
                            const EvolveOptions& options);

/// Device propagation under a drive program (blocked fast path by default;
/// set options.use_blocked = false for the dense reference path).
EvolutionResult evolve_device(const DeviceModel& model, const DriveProgram& program,
                              const DensityMatrix& rho0, const EvolveOptions& options);

/// The simulated channel on the computational subspace (qubits x two lowest
/// ancilla levels), indexed by input basis pairs.
struct ProcessMap {
    int d = 0;
    std::vector<Matrix> outputs;          // d*d entries, E(|i><j|) each d x d
    std::vector<double> basis_leakage;    // per diagonal input
    const Matrix& e(int i, int j) const { return outputs[i * d + j]; }
    Matrix& e(int i, int j) { return outputs[i * d + j]; }
    double average_leakage() const;
};

ProcessMap simulate_channel(const DeviceModel& model, const DriveProgram& program,
                            const EvolveOptions& options, int threads = 1);

/// Terminal diagonal rotation from the simulation frame to the compensated
/// frame the gate is scored in: phase per (qubit config, ancilla level) from
/// the static Delta/anharmonicity terms plus the accumulated schedules.
RealVector frame_correction_phases(const DeviceModel& model, const DriveProgram& program);

/// Conjugate the channel by the terminal diagonal rotation (restricted to the
/// computational subspace).
ProcessMap frame_correction(const ProcessMap& map, const DeviceModel& model,
                            const DriveProgram& program);

/// Apply the same correction to a full device-space state.
DensityMatrix apply_frame_correction(const DensityMatrix& rho, const DeviceModel& model,
                                     const DriveProgram& program);

/// Effective Z1Z2 rate measured from the conditional phase of the four
/// computational qubit states over a probe window; optional always-on tone.
struct ZzProbeOptions {
    double window = 250.0;    // ns
    double dt = 0.02;         // ns
    double leakage_limit = 0.01;
};
double zz_phase_rate(const DeviceModel& model, const std::optional<DriveProgram>& tone,
                     const ZzProbeOptions& options = {});

/// Cancellation tone for the parasitic coupling: detuning -g/2 (or +g/2 when
/// the parasitic sign needs the opposite Stark slope) and amplitude found by
/// 1-D root bracketing on the measured residual rate.
struct CancellationTone {
    double detuning = 0.0;
    double amplitude = 0.0;
    double residual = 0.0;   // rad/ns
    double undriven = 0.0;   // rad/ns
    bool converged = false;
};
CancellationTone cancellation_tone(const DeviceModel& model, double probe_window = 250.0,
                                   double dt = 0.02);

}  // namespace pcg

#endif
