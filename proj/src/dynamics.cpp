#include "pcgsim/dynamics.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <mutex>
#include <thread>

namespace pcg {

namespace {

const Complex kI(0.0, 1.0);

double tone_sample(const std::vector<double>& table, double half_step, double t) {
    if (table.size() == 1) return table[0];
    const double pos = t / half_step;
    const int n = static_cast<int>(table.size());
    int k = static_cast<int>(std::llround(pos));
    k = std::max(0, std::min(n - 1, k));
    if (std::abs(pos - k) < 1e-6) return table[k];
    const int k0 = std::max(0, std::min(n - 2, static_cast<int>(pos)));
    const double f = pos - k0;
    return (1.0 - f) * table[k0] + f * table[k0 + 1];
}

int popcount_int(int x) { return std::popcount(static_cast<unsigned>(x)); }

}  // namespace

Complex DriveProgram::drive_coefficient(double t) const {
    const double half_step = 0.5 * dt;
    Complex c(0.0, 0.0);
    for (const Tone& tone : tones) {
        const double omega = tone_sample(tone.omega, half_step, t);
        if (omega == 0.0) continue;
        const double phase = tone_sample(tone.phase, half_step, t);
        c += -0.5 * omega * std::exp(kI * (-tone.detuning * t + phase));
    }
    return c;
}

void DeviceModel::set_noise(double t1_us, double tphi_us) {
    gamma_rel_qubit = gamma_rel_ancilla = (t1_us > 0.0) ? 1.0 / (1000.0 * t1_us) : 0.0;
    gamma_phi_qubit = gamma_phi_ancilla = (tphi_us > 0.0) ? 2.0 / (1000.0 * tphi_us) : 0.0;
}

DeviceModel device_from_effective(const EffectiveModel& model) {
    DeviceModel dev;
    dev.n_qubits = model.n_qubits;
    dev.g = model.g;
    dev.alpha = model.alpha;
    dev.g_zz = model.g_zz;
    return dev;
}

DriveProgram pcf_program_2q(const DeviceModel& model, double gate_time, double taper,
                            double base_phase, Scheme scheme, double dt) {
    if (model.n_qubits != 2) throw std::invalid_argument("pcf_program_2q: model has n != 2");
    Envelope env{gate_time, taper, calibrate_pi_amplitude(gate_time, taper)};
    StarkSchedule sched = stark_schedule_2q(env, model.g, model.alpha, base_phase, dt, scheme);
    DriveProgram prog;
    prog.total_time = gate_time;
    prog.dt = sched.dt;
    prog.n_steps = static_cast<int>((sched.omega.size() - 1) / 2);
    prog.tones.push_back(Tone{0.0, sched.omega, sched.phase1});
    prog.int_delta_q = sched.int_delta_q;
    prog.int_delta_p1 = sched.int_delta_p1;
    return prog;
}

DriveProgram pcf_program_4q(const DeviceModel& model, double gate_time, double taper,
                            double phi, Scheme scheme, double dt) {
    if (model.n_qubits != 4) throw std::invalid_argument("pcf_program_4q: model has n != 4");
    Envelope env{gate_time, taper, calibrate_pi_amplitude(gate_time, taper)};
    StarkSchedule sched = stark_schedule_4q(env, model.g, model.alpha, phi, phi, dt, scheme);
    DriveProgram prog;
    prog.total_time = gate_time;
    prog.dt = sched.dt;
    prog.n_steps = static_cast<int>((sched.omega.size() - 1) / 2);
    // The -g-detuned tone is resonant with weight-1 configurations and
    // carries phi_1; the +g tone pairs with weight 3 and phi_3.
    prog.tones.push_back(Tone{-model.g, sched.omega, sched.phase1});
    prog.tones.push_back(Tone{+model.g, sched.omega, sched.phase3});
    prog.int_delta_q = sched.int_delta_q;
    prog.int_delta_p1 = sched.int_delta_p1;
    prog.int_delta_p3 = sched.int_delta_p3;
    prog.chi = sched.chi;
    return prog;
}

DriveProgram pcp_program_4q(const DeviceModel& model, double pulse_time, double taper,
                            double phi, Scheme scheme, double dt) {
    if (model.n_qubits != 4) throw std::invalid_argument("pcp_program_4q: model has n != 4");
    Envelope env{pulse_time, taper, calibrate_pi_amplitude(pulse_time, taper)};
    // chi of one pi-pulse; independent of the base phases.
    const double chi =
        stark_schedule_4q(env, model.g, model.alpha, 0.0, 0.0, dt, scheme).chi;
    // Phase-carrying pulse first in time, pi-phase pulse second.
    StarkSchedule a = stark_schedule_4q(env, model.g, model.alpha, phi - 2.0 * chi,
                                        phi + 2.0 * chi, dt, scheme);
    StarkSchedule b = stark_schedule_4q(env, model.g, model.alpha, M_PI, M_PI, dt, scheme);

    const int steps_a = static_cast<int>((a.omega.size() - 1) / 2);
    const int steps_b = static_cast<int>((b.omega.size() - 1) / 2);
    const size_t na = a.omega.size();
    const size_t nb = b.omega.size();
    const size_t n_total = 2 * (steps_a + steps_b) + 1;

    auto pad_first = [&](const std::vector<double>& v, double hold) {
        std::vector<double> out(n_total, hold);
        for (size_t k = 0; k < na; ++k) out[k] = v[k];
        for (size_t k = na; k < n_total; ++k) out[k] = hold;
        return out;
    };
    auto pad_second = [&](const std::vector<double>& v, double hold, double offset) {
        std::vector<double> out(n_total, hold);
        for (size_t k = 0; k + 1 < na; ++k) out[k] = hold;
        for (size_t k = 0; k < nb; ++k) out[na - 1 + k] = v[k] + offset;
        return out;
    };

    DriveProgram prog;
    prog.total_time = 2.0 * pulse_time;
    prog.dt = a.dt;
    prog.n_steps = steps_a + steps_b;
    prog.tones.push_back(Tone{-model.g, pad_first(a.omega, 0.0), pad_first(a.phase1, a.phase1.back())});
    prog.tones.push_back(Tone{+model.g, pad_first(a.omega, 0.0), pad_first(a.phase3, a.phase3.back())});
    // The second pulse's phase tables continue the globally accumulated
    // frame integrals, so they are offset by the first pulse's totals.
    prog.tones.push_back(
        Tone{-model.g, pad_second(b.omega, 0.0, 0.0), pad_second(b.phase1, b.phase1.front(), -a.int_delta_p1)});
    prog.tones.push_back(
        Tone{+model.g, pad_second(b.omega, 0.0, 0.0), pad_second(b.phase3, b.phase3.front(), -a.int_delta_p3)});
    prog.int_delta_q = a.int_delta_q + b.int_delta_q;
    prog.int_delta_p1 = a.int_delta_p1 + b.int_delta_p1;
    prog.int_delta_p3 = a.int_delta_p3 + b.int_delta_p3;
    prog.chi = chi;
    return prog;
}

DriveProgram idle_program(double total_time, double dt) {
    DriveProgram prog;
    prog.total_time = total_time;
    prog.dt = dt;
    prog.n_steps = std::max(1, static_cast<int>(std::llround(total_time / dt)));
    prog.dt = total_time / prog.n_steps;
    return prog;
}

DriveProgram cw_tone_program(double total_time, double dt, double detuning, double amplitude,
                             double taper) {
    DriveProgram prog = idle_program(total_time, dt);
    if (taper <= 0.0) {
        prog.tones.push_back(Tone{detuning, {amplitude}, {0.0}});
        return prog;
    }
    // adiabatic switch-on so probe states follow the dressed levels
    Envelope env{total_time, taper, amplitude};
    const int n_half = 2 * prog.n_steps + 1;
    std::vector<double> omega(n_half);
    for (int k = 0; k < n_half; ++k) {
        omega[k] = tukey(std::min(0.5 * prog.dt * k, total_time), env);
    }
    prog.tones.push_back(Tone{detuning, std::move(omega), {0.0}});
    return prog;
}

namespace {

// 3x3 ancilla block Hamiltonian for a qubit configuration of weight w.
Eigen::Matrix3cd ancilla_block(const DeviceModel& model, double delta, Complex c) {
    Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
    h(1, 1) = delta;
    h(2, 2) = 2.0 * delta + model.alpha;
    h(1, 0) = c;
    h(0, 1) = std::conj(c);
    h(2, 1) = std::sqrt(2.0) * c;
    h(1, 2) = std::sqrt(2.0) * std::conj(c);
    return h;
}

double zz_sign(int x, int n_qubits) {
    if (n_qubits != 2) return 0.0;
    return (popcount_int(x) % 2 == 0) ? 1.0 : -1.0;
}

}  // namespace

Operator drive_hamiltonian(const DeviceModel& model, const DriveProgram& program, double t) {
    const HilbertSpace space = model.space();
    const int nx = 1 << model.n_qubits;
    const Complex c = program.drive_coefficient(t);
    Matrix h = Matrix::Zero(space.total_dim(), space.total_dim());
    for (int x = 0; x < nx; ++x) {
        const Eigen::Matrix3cd block =
            ancilla_block(model, model.delta_of_weight(popcount_int(x)), c);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) h(3 * x + a, 3 * x + b) = block(a, b);
        const double zz = model.g_zz * zz_sign(x, model.n_qubits);
        for (int a = 0; a < 3; ++a) h(3 * x + a, 3 * x + a) += zz;
    }
    return Operator(space, std::move(h));
}

Operator drive_hamiltonian_2q(const DeviceModel& model, const DriveProgram& program, double t) {
    if (model.n_qubits != 2) throw std::invalid_argument("drive_hamiltonian_2q: n != 2");
    return drive_hamiltonian(model, program, t);
}

Operator drive_hamiltonian_4q(const DeviceModel& model, const DriveProgram& program, double t) {
    if (model.n_qubits != 4) throw std::invalid_argument("drive_hamiltonian_4q: n != 4");
    return drive_hamiltonian(model, program, t);
}

// ---------------------------------------------------------------------------
// Generic dense GKSL propagation
// ---------------------------------------------------------------------------

EvolutionResult gksl_evolve(const DensityMatrix& rho0, const HamiltonianFn& h,
                            const std::vector<CollapseTerm>& collapse, double t_final,
                            const EvolveOptions& options) {
    if (options.dt <= 0.0) throw std::invalid_argument("gksl_evolve: dt must be positive");
    const int dim = rho0.space.total_dim();
    const int n_steps = std::max(1, static_cast<int>(std::llround(t_final / options.dt)));
    const double dt = t_final / n_steps;

    struct Dissipator {
        Matrix l, l_dag, ldl;
        double rate;
    };
    std::vector<Dissipator> diss;
    for (const auto& term : collapse) {
        if (term.rate < 0.0) throw std::invalid_argument("gksl_evolve: negative rate");
        if (term.rate == 0.0) continue;
        diss.push_back({term.op, term.op.adjoint(), term.op.adjoint() * term.op, term.rate});
    }

    auto rhs = [&](double t, const Matrix& rho, Matrix& out) {
        const Matrix ht = h(t);
        out = -kI * (ht * rho - rho * ht);
        for (const auto& d : diss) {
            out += d.rate * (d.l * rho * d.l_dag -
                             0.5 * (d.ldl * rho + rho * d.ldl));
        }
    };

    Matrix rho = rho0.mat;
    const double trace0 = rho.trace().real();
    EvolutionResult result;

    Matrix k1(dim, dim), k2(dim, dim), k3(dim, dim), k4(dim, dim), tmp(dim, dim);
    for (int step = 0; step < n_steps; ++step) {
        const double t = step * dt;
        rhs(t, rho, k1);
        tmp = rho + (0.5 * dt) * k1;
        rhs(t + 0.5 * dt, tmp, k2);
        tmp = rho + (0.5 * dt) * k2;
        rhs(t + 0.5 * dt, tmp, k3);
        tmp = rho + dt * k3;
        rhs(t + dt, tmp, k4);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        rho = 0.5 * (rho + rho.adjoint()).eval();

        if (options.store_populations &&
            (step % options.store_stride == 0 || step == n_steps - 1)) {
            result.times.push_back(t + dt);
            std::vector<double> pops(dim);
            for (int i = 0; i < dim; ++i) pops[i] = rho(i, i).real();
            result.populations.push_back(std::move(pops));
        }
    }

    result.trace_drift = std::abs(rho.trace().real() - trace0);
    if (result.trace_drift > options.trace_tol) {
        throw std::runtime_error("gksl_evolve: trace drift " + std::to_string(result.trace_drift) +
                                 " exceeds tolerance; reduce dt");
    }
    const auto& modes = rho0.space.modes();
    if (!modes.empty() && modes.back().dim >= 3) {
        const int d_last = modes.back().dim;
        double leak = 0.0;
        for (int i = 0; i < dim; ++i) {
            if (i % d_last >= 2) leak += rho(i, i).real();
        }
        result.leakage = leak;
    }
    result.final_state = DensityMatrix(rho0.space, std::move(rho));
    return result;
}

// ---------------------------------------------------------------------------
// Blocked fast path: 3x3 ancilla blocks indexed by qubit-configuration pairs
// ---------------------------------------------------------------------------

namespace {

struct BlockSystem {
    const DeviceModel* model;
    const DriveProgram* program;
    int nx;
    std::vector<std::pair<int, int>> keys;  // (x, y) per slot
    std::vector<int> slot;                  // nx*nx lookup, -1 if inactive
    std::vector<int> mirror;                // slot of (y, x)
    std::vector<int> weight;                // per config
    std::vector<double> zz;                 // g_zz * sign per config
    // feeds[s] lists (source slot, rate) pairs
    std::vector<std::vector<std::pair<int, double>>> feeds;
    std::vector<double> scalar_decay;       // per slot
    std::vector<Eigen::Matrix3cd> h_cache;  // per weight, rebuilt per substep

    int slot_of(int x, int y) const { return slot[x * nx + y]; }

    void activate(int x, int y) {
        if (slot[x * nx + y] >= 0) return;
        slot[x * nx + y] = static_cast<int>(keys.size());
        keys.emplace_back(x, y);
        // close under relaxation feeds (toward lower weights) and mirroring
        activate(y, x);
        for (int i = 0; i < model->n_qubits; ++i) {
            const int m = 1 << i;
            if ((x & m) && (y & m)) activate(x & ~m, y & ~m);
        }
    }

    void finalize() {
        mirror.resize(keys.size());
        feeds.resize(keys.size());
        scalar_decay.resize(keys.size());
        const double g_rel = model->gamma_rel_qubit;
        const double g_phi = model->gamma_phi_qubit;
        for (size_t s = 0; s < keys.size(); ++s) {
            const auto [x, y] = keys[s];
            mirror[s] = slot_of(y, x);
            double dec = 0.0;
            for (int i = 0; i < model->n_qubits; ++i) {
                const int m = 1 << i;
                const int xi = (x & m) ? 1 : 0;
                const int yi = (y & m) ? 1 : 0;
                dec += 0.5 * g_rel * (xi + yi) + 0.5 * g_phi * (xi - yi) * (xi - yi);
                if (!xi && !yi) {
                    const int src = slot_of(x | m, y | m);
                    if (src >= 0) feeds[s].emplace_back(src, g_rel);
                }
            }
            scalar_decay[s] = dec;
        }
        h_cache.resize(model->n_qubits + 1);
    }

    void build_h(double t) {
        const Complex c = program->drive_coefficient(t);
        for (int w = 0; w <= model->n_qubits; ++w) {
            h_cache[w] = ancilla_block(*model, model->delta_of_weight(w), c);
        }
    }

    void rhs(const std::vector<Eigen::Matrix3cd>& b, std::vector<Eigen::Matrix3cd>& out) const {
        const double g_rel_p = model->gamma_rel_ancilla;
        const double g_phi_p = model->gamma_phi_ancilla;
        for (size_t s = 0; s < keys.size(); ++s) {
            const auto [x, y] = keys[s];
            const Eigen::Matrix3cd& bs = b[s];
            Eigen::Matrix3cd d = -kI * (h_cache[weight[x]] * bs - bs * h_cache[weight[y]]);
            const Complex phase_scalar = -kI * (zz[x] - zz[y]) - scalar_decay[s];
            d += phase_scalar * bs;
            if (g_rel_p > 0.0) {
                // b rho b^dag feeds down the ancilla ladder
                d(0, 0) += g_rel_p * bs(1, 1);
                d(0, 1) += g_rel_p * std::sqrt(2.0) * bs(1, 2);
                d(1, 0) += g_rel_p * std::sqrt(2.0) * bs(2, 1);
                d(1, 1) += g_rel_p * 2.0 * bs(2, 2);
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) d(i, j) -= 0.5 * g_rel_p * (i + j) * bs(i, j);
            }
            if (g_phi_p > 0.0) {
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j)
                        d(i, j) -= 0.5 * g_phi_p * (i - j) * (i - j) * bs(i, j);
            }
            for (const auto& [src, rate] : feeds[s]) d += rate * b[src];
            out[s] = d;
        }
    }
};

BlockSystem make_block_system(const DeviceModel& model, const DriveProgram& program,
                              const Matrix& rho0) {
    BlockSystem sys;
    sys.model = &model;
    sys.program = &program;
    sys.nx = 1 << model.n_qubits;
    sys.slot.assign(sys.nx * sys.nx, -1);
    sys.weight.resize(sys.nx);
    sys.zz.resize(sys.nx);
    for (int x = 0; x < sys.nx; ++x) {
        sys.weight[x] = popcount_int(x);
        sys.zz[x] = model.g_zz * zz_sign(x, model.n_qubits);
    }
    for (int x = 0; x < sys.nx; ++x) {
        for (int y = 0; y < sys.nx; ++y) {
            double norm = 0.0;
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 3; ++c) norm += std::abs(rho0(3 * x + a, 3 * y + c));
            if (norm > 0.0) sys.activate(x, y);
        }
    }
    sys.finalize();
    return sys;
}

EvolutionResult evolve_blocked(const DeviceModel& model, const DriveProgram& program,
                               const DensityMatrix& rho0, const EvolveOptions& options) {
    BlockSystem sys = make_block_system(model, program, rho0.mat);
    const size_t n_slots = sys.keys.size();
    std::vector<Eigen::Matrix3cd> b(n_slots), k1(n_slots), k2(n_slots), k3(n_slots), k4(n_slots),
        tmp(n_slots);
    for (size_t s = 0; s < n_slots; ++s) {
        const auto [x, y] = sys.keys[s];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) b[s](i, j) = rho0.mat(3 * x + i, 3 * y + j);
    }

    const int n_steps = program.n_steps;
    const double dt = program.dt;
    double trace0 = 0.0;
    for (size_t s = 0; s < n_slots; ++s) {
        const auto [x, y] = sys.keys[s];
        if (x == y) trace0 += b[s].trace().real();
    }

    EvolutionResult result;
    auto axpy = [&](std::vector<Eigen::Matrix3cd>& out, const std::vector<Eigen::Matrix3cd>& base,
                    double coeff, const std::vector<Eigen::Matrix3cd>& k) {
        for (size_t s = 0; s < n_slots; ++s) out[s] = base[s] + coeff * k[s];
    };

    for (int step = 0; step < n_steps; ++step) {
        const double t = step * dt;
        sys.build_h(t);
        sys.rhs(b, k1);
        axpy(tmp, b, 0.5 * dt, k1);
        sys.build_h(t + 0.5 * dt);
        sys.rhs(tmp, k2);
        axpy(tmp, b, 0.5 * dt, k2);
        sys.rhs(tmp, k3);
        axpy(tmp, b, dt, k3);
        sys.build_h(t + dt);
        sys.rhs(tmp, k4);
        for (size_t s = 0; s < n_slots; ++s) {
            b[s] += (dt / 6.0) * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
        }
        for (size_t s = 0; s < n_slots; ++s) tmp[s] = 0.5 * (b[s] + b[sys.mirror[s]].adjoint());
        std::swap(b, tmp);

        if (options.store_populations &&
            (step % options.store_stride == 0 || step == n_steps - 1)) {
            result.times.push_back(t + dt);
            std::vector<double> pops(3 * sys.nx, 0.0);
            for (size_t s = 0; s < n_slots; ++s) {
                const auto [x, y] = sys.keys[s];
                if (x != y) continue;
                for (int a = 0; a < 3; ++a) pops[3 * x + a] = b[s](a, a).real();
            }
            result.populations.push_back(std::move(pops));
        }
    }

    Matrix rho = Matrix::Zero(rho0.space.total_dim(), rho0.space.total_dim());
    double trace1 = 0.0, leak = 0.0;
    for (size_t s = 0; s < n_slots; ++s) {
        const auto [x, y] = sys.keys[s];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) rho(3 * x + i, 3 * y + j) = b[s](i, j);
        if (x == y) {
            trace1 += b[s].trace().real();
            leak += b[s](2, 2).real();
        }
    }
    result.trace_drift = std::abs(trace1 - trace0);
    if (result.trace_drift > options.trace_tol) {
        throw std::runtime_error("evolve_device: trace drift " +
                                 std::to_string(result.trace_drift) +
                                 " exceeds tolerance; reduce dt");
    }
    result.leakage = leak;
    result.final_state = DensityMatrix(rho0.space, std::move(rho));
    return result;
}

std::vector<CollapseTerm> device_collapse_terms(const DeviceModel& model) {
    const HilbertSpace space = model.space();
    std::vector<CollapseTerm> terms;
    Matrix b2(2, 2);
    b2 << 0, 1, 0, 0;
    Matrix n2(2, 2);
    n2 << 0, 0, 0, 1;
    for (int i = 1; i <= model.n_qubits; ++i) {
        const std::string label = "q" + std::to_string(i);
        terms.push_back({embed(space, label, b2).mat, model.gamma_rel_qubit});
        terms.push_back({embed(space, label, n2).mat, model.gamma_phi_qubit});
    }
    terms.push_back({embed(space, "p", ladder(3).cast<Complex>()).mat, model.gamma_rel_ancilla});
    terms.push_back({embed(space, "p", number_op(3).cast<Complex>()).mat, model.gamma_phi_ancilla});
    return terms;
}

void parallel_for(int n_tasks, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, n_tasks));
    if (threads == 1) {
        for (int i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<int> next(0);
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            try {
                for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

EvolutionResult evolve_device(const DeviceModel& model, const DriveProgram& program,
                              const DensityMatrix& rho0, const EvolveOptions& options) {
    if (rho0.space != model.space()) {
        throw std::invalid_argument("evolve_device: state space does not match model");
    }
    if (options.use_blocked) return evolve_blocked(model, program, rho0, options);
    EvolveOptions opts = options;
    opts.dt = program.dt;
    auto h = [&model, &program](double t) {
        return drive_hamiltonian(model, program, t).mat;
    };
    return gksl_evolve(rho0, h, device_collapse_terms(model), program.total_time, opts);
}

double ProcessMap::average_leakage() const {
    if (basis_leakage.empty()) return 0.0;
    double sum = 0.0;
    for (double v : basis_leakage) sum += v;
    return sum / static_cast<double>(basis_leakage.size());
}

ProcessMap simulate_channel(const DeviceModel& model, const DriveProgram& program,
                            const EvolveOptions& options, int threads) {
    const int d = model.comp_dim();
    const int dim = model.dim();
    const HilbertSpace space = model.space();

    ProcessMap map;
    map.d = d;
    map.outputs.assign(d * d, Matrix());
    map.basis_leakage.assign(d, 0.0);

    // comp index (x, a) -> full index 3x + a with the third ancilla level empty
    auto full_of = [](int comp) { return 3 * (comp / 2) + comp % 2; };

    auto truncate = [&](const Matrix& rho) {
        Matrix out(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out(i, j) = rho(full_of(i), full_of(j));
        return out;
    };

    struct Task {
        int i, j;
    };
    std::vector<Task> tasks;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) tasks.push_back({i, j});

    parallel_for(static_cast<int>(tasks.size()), threads, [&](int task_idx) {
        const auto [i, j] = tasks[task_idx];
        const int fi = full_of(i), fj = full_of(j);
        if (i == j) {
            Matrix rho0 = Matrix::Zero(dim, dim);
            rho0(fi, fi) = 1.0;
            EvolutionResult res = evolve_device(model, program, DensityMatrix(space, rho0), options);
            map.e(i, i) = truncate(res.final_state.mat);
            map.basis_leakage[i] = res.leakage;
        } else {
            // Hermitian pair (|i><j| + |j><i|)/sqrt2 and i(|i><j| - |j><i|)/sqrt2
            Matrix xr = Matrix::Zero(dim, dim), yr = Matrix::Zero(dim, dim);
            const double s = 1.0 / std::sqrt(2.0);
            xr(fi, fj) = s;
            xr(fj, fi) = s;
            yr(fi, fj) = kI * s;
            yr(fj, fi) = -kI * s;
            EvolutionResult rx = evolve_device(model, program, DensityMatrix(space, xr), options);
            EvolutionResult ry = evolve_device(model, program, DensityMatrix(space, yr), options);
            const Matrix ex = truncate(rx.final_state.mat);
            const Matrix ey = truncate(ry.final_state.mat);
            map.e(i, j) = s * (ex - kI * ey);
            map.e(j, i) = map.e(i, j).adjoint();
        }
    });
    return map;
}

RealVector frame_correction_phases(const DeviceModel& model, const DriveProgram& program) {
    const int nx = 1 << model.n_qubits;
    RealVector theta(3 * nx);
    const double t_total = program.total_time;
    for (int x = 0; x < nx; ++x) {
        const int w = popcount_int(x);
        const double delta = model.delta_of_weight(w);
        const double sum_z = static_cast<double>(model.n_qubits - 2 * w);
        for (int a = 0; a < 3; ++a) {
            double th = (delta * a + 0.5 * model.alpha * a * (a - 1)) * t_total;
            th -= 0.5 * program.int_delta_q * sum_z;
            // The ancilla-frame integrals act on the odd-parity blocks where
            // the schedules are defined; even-parity excited states are not
            // part of the compensated frame.
            if (model.n_qubits == 2) {
                if (w % 2 == 1) th += program.int_delta_p1 * a;
            } else {
                if (w == 1) th += program.int_delta_p1 * a;
                if (w == 3) th += program.int_delta_p3 * a;
            }
            theta(3 * x + a) = th;
        }
    }
    return theta;
}

ProcessMap frame_correction(const ProcessMap& map, const DeviceModel& model,
                            const DriveProgram& program) {
    const RealVector theta = frame_correction_phases(model, program);
    const int d = map.d;
    Vector dphase(d);
    for (int i = 0; i < d; ++i) dphase(i) = std::exp(kI * theta(3 * (i / 2) + i % 2));
    ProcessMap out = map;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Matrix& m = out.e(i, j);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) m(r, c) *= dphase(r) * std::conj(dphase(c));
        }
    return out;
}

DensityMatrix apply_frame_correction(const DensityMatrix& rho, const DeviceModel& model,
                                     const DriveProgram& program) {
    const RealVector theta = frame_correction_phases(model, program);
    const int dim = rho.space.total_dim();
    Matrix out = rho.mat;
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
            out(r, c) *= std::exp(kI * (theta(r) - theta(c)));
        }
    return DensityMatrix(rho.space, std::move(out));
}

double zz_phase_rate(const DeviceModel& model, const std::optional<DriveProgram>& tone,
                     const ZzProbeOptions& options) {
    if (model.n_qubits != 2) throw std::invalid_argument("zz_phase_rate: need a 2-qubit model");
    DriveProgram program = tone ? *tone : idle_program(options.window, options.dt);
    if (std::abs(program.total_time - options.window) > 1e-9) {
        throw std::invalid_argument("zz_phase_rate: tone duration must equal the probe window");
    }

    const int n_steps = program.n_steps;
    const double dt = program.dt;
    const int checkpoint_stride = std::max(1, n_steps / 400);
    // fit over the flat-top region, clear of the tone ramps
    const double fit_lo = 0.20 * options.window, fit_hi = 0.80 * options.window;

    double slopes[4];
    for (int x = 0; x < 4; ++x) {
        const double delta = model.delta_of_weight(popcount_int(x));
        const double zz = model.g_zz * zz_sign(x, 2);
        Eigen::Vector3cd psi;
        psi << 1.0, 0.0, 0.0;
        std::vector<double> ts, thetas;
        double prev_arg = 0.0, wind = 0.0;
        double max_leak = 0.0;

        auto h_at = [&](double t) {
            Eigen::Matrix3cd h = ancilla_block(model, delta, program.drive_coefficient(t));
            h(0, 0) += zz;
            h(1, 1) += zz;
            h(2, 2) += zz;
            return h;
        };
        for (int step = 0; step < n_steps; ++step) {
            const double t = step * dt;
            const Eigen::Matrix3cd h1 = h_at(t);
            const Eigen::Matrix3cd h2 = h_at(t + 0.5 * dt);
            const Eigen::Matrix3cd h3 = h_at(t + dt);
            const Eigen::Vector3cd k1 = -kI * (h1 * psi);
            const Eigen::Vector3cd k2 = -kI * (h2 * (psi + 0.5 * dt * k1));
            const Eigen::Vector3cd k3 = -kI * (h2 * (psi + 0.5 * dt * k2));
            const Eigen::Vector3cd k4 = -kI * (h3 * (psi + dt * k3));
            psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

            max_leak = std::max(max_leak, std::norm(psi(2)));
            if (step % checkpoint_stride == 0 || step == n_steps - 1) {
                const double arg = std::arg(psi(0));
                if (!ts.empty()) {
                    double darg = arg - prev_arg;
                    while (darg > M_PI) darg -= 2.0 * M_PI;
                    while (darg < -M_PI) darg += 2.0 * M_PI;
                    wind += darg;
                }
                prev_arg = arg;
                ts.push_back(t + dt);
                thetas.push_back(wind);
            }
        }
        if (max_leak > options.leakage_limit) {
            throw std::runtime_error("zz_phase_rate: ancilla leakage " + std::to_string(max_leak) +
                                     " exceeds limit; tone too strong");
        }
        // least-squares slope of the unwrapped phase over the flat-top window
        size_t m = 0;
        double st = 0, sth = 0, stt = 0, stth = 0;
        for (size_t k = 0; k < ts.size(); ++k) {
            if (ts[k] < fit_lo || ts[k] > fit_hi) continue;
            ++m;
            st += ts[k];
            sth += thetas[k];
            stt += ts[k] * ts[k];
            stth += ts[k] * thetas[k];
        }
        slopes[x] = (m * stth - st * sth) / (m * stt - st * st);
    }
    // theta_x = -E_x t for diagonal evolution; D = th00 + th11 - th01 - th10
    return -(slopes[0] + slopes[3] - slopes[1] - slopes[2]) / 4.0;
}

CancellationTone cancellation_tone(const DeviceModel& model, double probe_window, double dt) {
    ZzProbeOptions probe;
    probe.window = probe_window;
    probe.dt = dt;

    CancellationTone result;
    result.undriven = zz_phase_rate(model, std::nullopt, probe);
    if (result.undriven == 0.0) {
        result.detuning = -0.5 * model.g;
        result.amplitude = 0.0;
        result.residual = 0.0;
        result.converged = true;
        return result;
    }
    // The Stark contribution at detuning -g/2 shifts the rate by ~Omega^2/(3g);
    // it can cancel the parasitic term when their signs oppose, otherwise the
    // mirror detuning +g/2 provides the opposite slope.
    const bool natural = (result.undriven * model.g < 0.0);
    result.detuning = natural ? -0.5 * model.g : +0.5 * model.g;

    auto rate_at = [&](double amp) -> std::optional<double> {
        DriveProgram tone = cw_tone_program(probe_window, dt, result.detuning, amp);
        try {
            return zz_phase_rate(model, tone, probe);
        } catch (const std::runtime_error&) {
            return std::nullopt;  // leakage guard: amplitude too strong
        }
    };

    const double omega_star = std::sqrt(3.0 * std::abs(model.g * result.undriven));
    double lo = 0.0, hi = 1.3 * omega_star;
    double f_lo = result.undriven;
    std::optional<double> probe_hi = rate_at(hi);
    while (!probe_hi && hi > 1e-6) {
        hi *= 0.7;
        probe_hi = rate_at(hi);
    }
    double f_hi = probe_hi.value_or(f_lo);
    int expand = 0;
    while (f_lo * f_hi > 0.0 && expand < 4) {
        const double next = hi * 1.5;
        std::optional<double> f_next = rate_at(next);
        if (!f_next) break;
        hi = next;
        f_hi = *f_next;
        ++expand;
    }
    if (f_lo * f_hi > 0.0) {
        result.amplitude = hi;
        result.residual = f_hi;
        result.converged = std::abs(result.residual) <= 0.1 * std::abs(result.undriven);
        return result;
    }
    double mid = 0.0, f_mid = f_lo;
    for (int iter = 0; iter < 40; ++iter) {
        mid = 0.5 * (lo + hi);
        f_mid = rate_at(mid).value();  // within the bracket the guard holds
        if (std::abs(f_mid) < 1e-4 * std::abs(result.undriven)) break;
        if (f_mid * f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    result.amplitude = mid;
    result.residual = f_mid;
    result.converged = std::abs(result.residual) <= 0.1 * std::abs(result.undriven);
    return result;
}

}  // namespace pcg
