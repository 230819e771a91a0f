#ifndef PCGSIM_PULSES_HPP
#define PCGSIM_PULSES_HPP

#include <vector>

#include "pcgsim/hilbert.hpp"

namespace pcg {

/// Cosine-tapered flat-top pulse: ramps of width r*T/2 at both ends.
struct Envelope {
    double gate_time = 0.0;  // T, ns
    double taper = 0.5;      // r in [0, 1]
    double amplitude = 0.0;  // A, rad/ns
};

/// Envelope value at time t in [0, T]; throws outside that interval.
double tukey(double t, const Envelope& env);

/// Closed-form pulse area: A * T * (1 - r/2).
double tukey_area(const Envelope& env);

/// Amplitude making the pulse area exactly pi: A = pi / (T (1 - r/2)).
double calibrate_pi_amplitude(double gate_time, double taper);

enum class Scheme { kBasic, kAdvanced };

/// Drive-phase and virtual-rotation schedules sampled on the integrator's
/// half-step grid (spacing dt/2, 2*n_steps + 1 points). All cumulative
/// integrals are trapezoidal on that grid so that drive phase and
/// propagation are consistent to the same order.
struct StarkSchedule {
    int n_qubits = 2;
    double dt = 0.0;          // integrator step, ns
    std::vector<double> omega;   // envelope samples on the half grid
    std::vector<double> phase1;  // phi_1(t); the only phase for one tone
    std::vector<double> phase3;  // phi_3(t); empty for the single-tone case
    double chi = 0.0;            // integral of Omega^2/(24 g), two-tone only
    // Terminal integrals of the frame generator, for the end-of-gate
    // virtual rotation. delta_q applies as -(int_delta_q/2) sum Z_i.
    double int_delta_q = 0.0;
    double int_delta_p1 = 0.0;  // coefficient of n_P (P_- n_P for two qubits)
    double int_delta_p3 = 0.0;  // coefficient of P_3 n_P, two-tone only
};

/// Two-qubit schedules: delta_Q = -Omega^2/(4g), delta_P = -Omega^2/(2 alpha),
/// drive phase phi(t) = phi - int_0^t delta_P. Basic scheme keeps phi constant
/// and zero deltas.
StarkSchedule stark_schedule_2q(const Envelope& env, double g, double alpha, double base_phase,
                                double dt, Scheme scheme);

/// Four-qubit schedules: delta_Q = -Omega^2/(6g),
/// delta_P1 = -Omega^2/(4g) - Omega^2/(2a) - Omega^2/(2a - 4g),
/// delta_P3 = delta_Q + Omega^2/(8g) - Omega^2/(2a),
/// phi_i(t) = phi_i - int_0^t delta_Pi, chi = int Omega^2/(24g).
/// Throws near the 2 alpha = 4 g resonance.
StarkSchedule stark_schedule_4q(const Envelope& env, double g, double alpha, double phi1,
                                double phi3, double dt, Scheme scheme);

}  // namespace pcg

#endif
