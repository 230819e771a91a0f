#include "pcgsim/pulses.hpp"

#include <cmath>
#include <stdexcept>

namespace pcg {

double tukey(double t, const Envelope& env) {
    const double T = env.gate_time;
    const double r = env.taper;
    if (T <= 0.0) throw std::invalid_argument("tukey: gate_time must be positive");
    if (r < 0.0 || r > 1.0) throw std::invalid_argument("tukey: taper must be in [0, 1]");
    if (t < 0.0 || t > T) throw std::invalid_argument("tukey: t outside [0, T]");
    const double ramp = 0.5 * r * T;
    if (r > 0.0 && t < ramp) {
        return env.amplitude * 0.5 * (1.0 - std::cos(M_PI * t / ramp));
    }
    if (r > 0.0 && t > T - ramp) {
        return env.amplitude * 0.5 * (1.0 - std::cos(M_PI * (T - t) / ramp));
    }
    return env.amplitude;
}

double tukey_area(const Envelope& env) {
    return env.amplitude * env.gate_time * (1.0 - 0.5 * env.taper);
}

double calibrate_pi_amplitude(double gate_time, double taper) {
    if (gate_time <= 0.0) throw std::invalid_argument("calibrate_pi: gate_time must be positive");
    if (taper < 0.0 || taper > 1.0) throw std::invalid_argument("calibrate_pi: taper in [0, 1]");
    return M_PI / (gate_time * (1.0 - 0.5 * taper));
}

namespace {

struct Grid {
    int n_steps;
    std::vector<double> t;      // 2*n_steps + 1 half-grid times
    std::vector<double> omega;  // envelope samples
};

Grid sample_envelope(const Envelope& env, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("schedule: dt must be positive");
    Grid grid;
    grid.n_steps = std::max(1, static_cast<int>(std::llround(env.gate_time / dt)));
    const double step = env.gate_time / grid.n_steps;
    const int n_half = 2 * grid.n_steps + 1;
    grid.t.resize(n_half);
    grid.omega.resize(n_half);
    for (int k = 0; k < n_half; ++k) {
        grid.t[k] = 0.5 * step * k;
        grid.omega[k] = tukey(std::min(grid.t[k], env.gate_time), env);
    }
    return grid;
}

// Cumulative trapezoid of f over the half grid; returns samples of the
// running integral at every half-grid point.
std::vector<double> cumtrapz(const std::vector<double>& t, const std::vector<double>& f) {
    std::vector<double> out(f.size(), 0.0);
    for (size_t k = 1; k < f.size(); ++k) {
        out[k] = out[k - 1] + 0.5 * (f[k] + f[k - 1]) * (t[k] - t[k - 1]);
    }
    return out;
}

}  // namespace

StarkSchedule stark_schedule_2q(const Envelope& env, double g, double alpha, double base_phase,
                                double dt, Scheme scheme) {
    if (g == 0.0 || alpha == 0.0) {
        throw std::invalid_argument("stark_schedule_2q: g and alpha must be nonzero");
    }
    Grid grid = sample_envelope(env, dt);
    const size_t n = grid.t.size();

    StarkSchedule sched;
    sched.n_qubits = 2;
    sched.dt = env.gate_time / grid.n_steps;
    sched.omega = grid.omega;
    sched.phase1.assign(n, base_phase);
    if (scheme == Scheme::kBasic) return sched;

    std::vector<double> delta_q(n), delta_p(n);
    for (size_t k = 0; k < n; ++k) {
        const double w2 = grid.omega[k] * grid.omega[k];
        delta_q[k] = -w2 / (4.0 * g);
        delta_p[k] = -w2 / (2.0 * alpha);
    }
    const std::vector<double> int_p = cumtrapz(grid.t, delta_p);
    const std::vector<double> int_q = cumtrapz(grid.t, delta_q);
    for (size_t k = 0; k < n; ++k) sched.phase1[k] = base_phase - int_p[k];
    sched.int_delta_q = int_q.back();
    sched.int_delta_p1 = int_p.back();
    return sched;
}

StarkSchedule stark_schedule_4q(const Envelope& env, double g, double alpha, double phi1,
                                double phi3, double dt, Scheme scheme) {
    if (g == 0.0 || alpha == 0.0) {
        throw std::invalid_argument("stark_schedule_4q: g and alpha must be nonzero");
    }
    // delta_P1 has a pole where the ancilla 1->2 transition meets the
    // detuned tone, at 2*alpha = 4*g.
    if (std::abs(2.0 * alpha - 4.0 * g) < 1e-3 * std::max(std::abs(g), std::abs(alpha))) {
        throw std::invalid_argument(
            "stark_schedule_4q: 2*alpha - 4*g too close to zero (alpha = 2g resonance)");
    }
    Grid grid = sample_envelope(env, dt);
    const size_t n = grid.t.size();

    StarkSchedule sched;
    sched.n_qubits = 4;
    sched.dt = env.gate_time / grid.n_steps;
    sched.omega = grid.omega;
    sched.phase1.assign(n, phi1);
    sched.phase3.assign(n, phi3);

    std::vector<double> chi_rate(n);
    for (size_t k = 0; k < n; ++k) {
        chi_rate[k] = grid.omega[k] * grid.omega[k] / (24.0 * g);
    }
    sched.chi = cumtrapz(grid.t, chi_rate).back();
    if (scheme == Scheme::kBasic) {
        sched.chi = 0.0;
        return sched;
    }

    std::vector<double> delta_q(n), delta_p1(n), delta_p3(n);
    for (size_t k = 0; k < n; ++k) {
        const double w2 = grid.omega[k] * grid.omega[k];
        delta_q[k] = -w2 / (6.0 * g);
        delta_p1[k] = -w2 / (4.0 * g) - w2 / (2.0 * alpha) - w2 / (2.0 * alpha - 4.0 * g);
        delta_p3[k] = delta_q[k] + w2 / (8.0 * g) - w2 / (2.0 * alpha);
    }
    const std::vector<double> int_q = cumtrapz(grid.t, delta_q);
    const std::vector<double> int_p1 = cumtrapz(grid.t, delta_p1);
    const std::vector<double> int_p3 = cumtrapz(grid.t, delta_p3);
    for (size_t k = 0; k < n; ++k) {
        sched.phase1[k] = phi1 - int_p1[k];
        sched.phase3[k] = phi3 - int_p3[k];
    }
    sched.int_delta_q = int_q.back();
    sched.int_delta_p1 = int_p1.back();
    sched.int_delta_p3 = int_p3.back();
    return sched;
}

}  // namespace pcg
