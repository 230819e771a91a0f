#include "pcgsim/circuit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace pcg {

namespace {

constexpr double kDegenerateGap = kTwoPi * 1e-3;   // 1 MHz
constexpr double kDegenerateAmp = kTwoPi * 1e-6;   // 1 kHz

// Ring bond orientations: signs of (q_i, p, t_i) per junction, uniform
// flux quarter on each bond. Equal junction energies reduce the sum to
// -4 E (cos q cos p cos t cos d - sin q sin p sin t sin d).
constexpr double kRingSigns[4][3] = {
    {+1, +1, -1}, {+1, -1, +1}, {-1, +1, +1}, {-1, -1, -1}};

}  // namespace

void CircuitParams::validate() const {
    if (n_qubits < 1) throw std::invalid_argument("CircuitParams: n_qubits must be >= 1");
    if (static_cast<int>(c_qubit_fF.size()) != n_qubits ||
        static_cast<int>(c_junction_fF.size()) != n_qubits ||
        static_cast<int>(ej_ghz.size()) != n_qubits ||
        static_cast<int>(flux.size()) != n_qubits) {
        throw std::invalid_argument("CircuitParams: per-ring array sizes must equal n_qubits");
    }
    if (c_ancilla_fF <= 0.0) throw std::invalid_argument("CircuitParams: C_P must be positive");
    for (int i = 0; i < n_qubits; ++i) {
        if (c_qubit_fF[i] <= 0.0 || c_junction_fF[i] <= 0.0) {
            throw std::invalid_argument("CircuitParams: capacitances must be positive");
        }
        for (double ej : ej_ghz[i]) {
            if (ej <= 0.0) throw std::invalid_argument("CircuitParams: E_J must be positive");
        }
    }
}

CircuitParams CircuitParams::symmetric(int n_qubits, std::vector<double> c_qubit_fF,
                                       double c_ancilla_fF, std::vector<double> c_junction_fF,
                                       std::vector<double> ej_ghz, std::vector<double> flux) {
    CircuitParams params;
    params.n_qubits = n_qubits;
    params.c_qubit_fF = std::move(c_qubit_fF);
    params.c_ancilla_fF = c_ancilla_fF;
    params.c_junction_fF = std::move(c_junction_fF);
    for (double ej : ej_ghz) params.ej_ghz.push_back({ej, ej, ej, ej});
    params.flux = std::move(flux);
    params.validate();
    return params;
}

CircuitParams CircuitParams::reference_two_qubit() {
    return symmetric(2, {22.0, 22.0}, 19.0, {4.0, 4.0}, {10.0, 11.0}, {0.0, 0.0});
}

CircuitParams CircuitParams::reference_four_qubit() {
    return symmetric(4, {13.0, 15.0, 13.0, 15.0}, 13.0, {4.0, 4.0, 4.0, 4.0},
                     {13.0, 13.0, 12.0, 12.0}, {0.0, 0.0, 0.0, 0.0});
}

ChargingEnergies charging_energies(const CircuitParams& params) {
    params.validate();
    ChargingEnergies out;
    double cj_sum = 0.0;
    for (int i = 0; i < params.n_qubits; ++i) cj_sum += params.c_junction_fF[i];
    const double to_rad = kTwoPi * kChargingGHzfF;
    for (int i = 0; i < params.n_qubits; ++i) {
        out.qubit.push_back(to_rad / (params.c_qubit_fF[i] + params.c_junction_fF[i]));
        out.theta.push_back(to_rad / params.c_junction_fF[i]);
    }
    out.ancilla = to_rad / (params.c_ancilla_fF + cj_sum);
    return out;
}

double PotentialModel::value(const RealVector& x) const {
    double v = 0.0;
    for (const auto& term : terms) {
        double phase = term.offset;
        for (int m = 0; m < n_modes; ++m) phase += term.signs[m] * x(m);
        v -= term.energy * std::cos(phase);
    }
    return v;
}

RealVector PotentialModel::gradient(const RealVector& x) const {
    RealVector g = RealVector::Zero(n_modes);
    for (const auto& term : terms) {
        double phase = term.offset;
        for (int m = 0; m < n_modes; ++m) phase += term.signs[m] * x(m);
        const double s = term.energy * std::sin(phase);
        for (int m = 0; m < n_modes; ++m) g(m) += term.signs[m] * s;
    }
    return g;
}

RealMatrix PotentialModel::hessian(const RealVector& x) const {
    RealMatrix h = RealMatrix::Zero(n_modes, n_modes);
    for (const auto& term : terms) {
        double phase = term.offset;
        for (int m = 0; m < n_modes; ++m) phase += term.signs[m] * x(m);
        const double c = term.energy * std::cos(phase);
        for (int a = 0; a < n_modes; ++a)
            for (int b = 0; b < n_modes; ++b) h(a, b) += term.signs[a] * term.signs[b] * c;
    }
    return h;
}

PotentialModel potential_model(const CircuitParams& params) {
    params.validate();
    const int n = params.n_qubits;
    const int n_modes = 2 * n + 1;
    PotentialModel model;
    model.n_modes = n_modes;
    for (int i = 0; i < n; ++i) {
        const double offset = M_PI * params.flux[i] / 2.0;  // phi_x / 4
        for (int k = 0; k < 4; ++k) {
            CosineTerm term;
            term.energy = kTwoPi * params.ej_ghz[i][k];
            term.signs.assign(n_modes, 0.0);
            term.signs[i] = kRingSigns[k][0];          // q_i
            term.signs[2 * n] = kRingSigns[k][1];      // p
            term.signs[n + i] = kRingSigns[k][2];      // t_i
            term.offset = offset;
            model.terms.push_back(std::move(term));
        }
    }
    return model;
}

RealVector find_potential_minimum(const PotentialModel& model) {
    RealVector x = RealVector::Zero(model.n_modes);
    double v = model.value(x);
    const double scale = [&] {
        double s = 0.0;
        for (const auto& t : model.terms) s += std::abs(t.energy);
        return std::max(s, 1.0);
    }();

    // Descent with backtracking, then a Newton polish near the minimum.
    for (int iter = 0; iter < 200; ++iter) {
        RealVector g = model.gradient(x);
        if (g.norm() < 1e-10 * scale) break;
        RealVector step = -g / scale;
        const RealMatrix h = model.hessian(x);
        Eigen::LDLT<RealMatrix> ldlt(h);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            step = -ldlt.solve(g);
        }
        double alpha = 1.0;
        for (int bt = 0; bt < 40; ++bt) {
            const RealVector trial = x + alpha * step;
            const double vt = model.value(trial);
            if (vt < v) {
                x = trial;
                v = vt;
                break;
            }
            alpha *= 0.5;
            if (bt == 39) {
                return x;  // already at numerical resolution
            }
        }
    }
    if (model.gradient(x).norm() > 1e-8 * scale) {
        throw std::runtime_error("find_potential_minimum: descent did not converge");
    }
    return x;
}

double PotentialSeries::coeff(const std::vector<uint8_t>& exponents) const {
    auto it = coeffs.find(exponents);
    return (it == coeffs.end()) ? 0.0 : it->second;
}

double PotentialSeries::quadratic_coeff(int mode) const {
    std::vector<uint8_t> key(n_modes, 0);
    key[mode] = 2;
    return coeff(key);
}

PotentialSeries series_of_model(const PotentialModel& model, const RealVector& point) {
    PotentialSeries series;
    series.n_modes = model.n_modes;
    std::vector<uint8_t> key(model.n_modes, 0);

    static const double kFact[5] = {1.0, 1.0, 2.0, 6.0, 24.0};

    for (const auto& term : model.terms) {
        std::vector<int> involved;
        for (int m = 0; m < model.n_modes; ++m) {
            if (term.signs[m] != 0.0) involved.push_back(m);
        }
        double psi = term.offset;
        for (int m : involved) psi += term.signs[m] * point(m);
        const double e_cos = term.energy * std::cos(psi);
        const double e_sin = term.energy * std::sin(psi);
        // -E cos(psi + s.u) = -E cos(psi) cos(s.u) + E sin(psi) sin(s.u)
        const double c_of_p[5] = {-e_cos, e_sin, e_cos / 2.0, -e_sin / 6.0, -e_cos / 24.0};

        const int k = static_cast<int>(involved.size());
        std::vector<int> expo(k, 0);
        std::function<void(int, int)> expand = [&](int pos, int remaining) {
            if (pos == k - 1) {
                expo[pos] = remaining;
                int p = 0;
                for (int e : expo) p += e;
                double multinomial = kFact[p];
                double sign_pow = 1.0;
                for (int j = 0; j < k; ++j) {
                    multinomial /= kFact[expo[j]];
                    for (int e = 0; e < expo[j]; ++e) sign_pow *= term.signs[involved[j]];
                }
                std::fill(key.begin(), key.end(), 0);
                for (int j = 0; j < k; ++j) key[involved[j]] = static_cast<uint8_t>(expo[j]);
                series.coeffs[key] += c_of_p[p] * multinomial * sign_pow;
                return;
            }
            for (int e = 0; e <= remaining; ++e) {
                expo[pos] = e;
                expand(pos + 1, remaining - e);
            }
        };
        for (int p = 0; p <= 4; ++p) expand(0, p);
    }

    // prune numerically dead entries from trigonometric cancellations
    double scale = 0.0;
    for (const auto& [k2, v] : series.coeffs) scale = std::max(scale, std::abs(v));
    for (auto it = series.coeffs.begin(); it != series.coeffs.end();) {
        if (std::abs(it->second) < 1e-14 * scale) {
            it = series.coeffs.erase(it);
        } else {
            ++it;
        }
    }
    return series;
}

PotentialSeries potential_series(const CircuitParams& params,
                                 const std::optional<RealVector>& expansion_point) {
    const PotentialModel model = potential_model(params);
    RealVector point = expansion_point.value_or(RealVector::Zero(model.n_modes));
    if (point.size() != model.n_modes) {
        throw std::invalid_argument("potential_series: expansion point has wrong dimension");
    }
    return series_of_model(model, point);
}

// ---------------------------------------------------------------------------
// Quantization
// ---------------------------------------------------------------------------

namespace {

std::string mode_label(int m, int n_qubits) {
    if (m < n_qubits) return "q" + std::to_string(m + 1);
    if (m < 2 * n_qubits) return "t" + std::to_string(m - n_qubits + 1);
    return "p";
}

// Exact matrix elements within the truncation: powers are computed on an
// extended space and cut back afterwards.
std::array<RealMatrix, 6> build_local_ops(int dim, double zeta) {
    const int ext = dim + 4;
    RealMatrix b = RealMatrix::Zero(ext, ext);
    for (int n = 1; n < ext; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
    const RealMatrix phi = std::sqrt(zeta / 2.0) * (b + b.transpose());
    const RealMatrix phi2 = phi * phi;
    const RealMatrix q2 =
        (b.transpose() * b + b * b.transpose() - b * b - b.transpose() * b.transpose()) /
        (2.0 * zeta);
    std::array<RealMatrix, 6> ops;
    ops[0] = RealMatrix::Identity(dim, dim);
    ops[static_cast<int>(LocalOp::kPhi1)] = phi.topLeftCorner(dim, dim);
    ops[static_cast<int>(LocalOp::kPhi2)] = phi2.topLeftCorner(dim, dim);
    ops[static_cast<int>(LocalOp::kPhi3)] = (phi2 * phi).topLeftCorner(dim, dim);
    ops[static_cast<int>(LocalOp::kPhi4)] = (phi2 * phi2).topLeftCorner(dim, dim);
    ops[static_cast<int>(LocalOp::kQ2)] = q2.topLeftCorner(dim, dim);
    return ops;
}

}  // namespace

HilbertSpace QuarticHamiltonian::space() const {
    std::vector<ModeSpec> specs;
    for (const auto& m : modes) specs.push_back({m.label, m.dim});
    return compose(std::move(specs));
}

int QuarticHamiltonian::total_dim() const {
    int d = 1;
    for (const auto& m : modes) d *= m.dim;
    return d;
}

const RealMatrix& QuarticHamiltonian::local_op(int mode, int op) const {
    return op_cache[mode][op];
}

double QuarticHamiltonian::diagonal_energy(const std::vector<int>& levels) const {
    double e = 0.0;
    for (const auto& term : terms) {
        double v = term.coeff;
        for (const auto& [m, op] : term.factors) {
            v *= op_cache[m][op](levels[m], levels[m]);
        }
        e += v;
    }
    return e;
}

Matrix QuarticHamiltonian::dense_total(int dim_cap) const {
    const int dim = total_dim();
    if (dim > dim_cap) {
        throw std::invalid_argument("dense Hamiltonian requested above the dimension cap (" +
                                    std::to_string(dim) + " > " + std::to_string(dim_cap) + ")");
    }
    const int n_modes = static_cast<int>(modes.size());
    std::vector<long long> stride(n_modes, 1);
    for (int m = n_modes - 2; m >= 0; --m) stride[m] = stride[m + 1] * modes[m + 1].dim;

    Matrix h = Matrix::Zero(dim, dim);
    std::vector<int> levels(n_modes);
    for (int col = 0; col < dim; ++col) {
        {
            int rem = col;
            for (int m = 0; m < n_modes; ++m) {
                levels[m] = static_cast<int>(rem / stride[m]);
                rem = static_cast<int>(rem % stride[m]);
            }
        }
        for (const auto& term : terms) {
            const int k = static_cast<int>(term.factors.size());
            if (k == 0) {
                h(col, col) += term.coeff;
                continue;
            }
            std::vector<int> choice(k, 0);
            while (true) {
                double amp = term.coeff;
                long long row = col;
                for (int j = 0; j < k; ++j) {
                    const auto [m, op] = term.factors[j];
                    amp *= op_cache[m][op](choice[j], levels[m]);
                    row += stride[m] * (choice[j] - levels[m]);
                }
                if (amp != 0.0) h(row, col) += amp;
                int j = 0;
                for (; j < k; ++j) {
                    if (++choice[j] < modes[term.factors[j].first].dim) break;
                    choice[j] = 0;
                }
                if (j == k) break;
            }
        }
    }
    return h;
}

Matrix QuarticHamiltonian::dense_diagonal(int dim_cap) const {
    Matrix h = dense_total(dim_cap);
    Matrix d = Matrix::Zero(h.rows(), h.cols());
    d.diagonal() = h.diagonal();
    return d;
}

Matrix QuarticHamiltonian::dense_offdiagonal(int dim_cap) const {
    Matrix h = dense_total(dim_cap);
    for (int i = 0; i < h.rows(); ++i) h(i, i) = 0.0;
    return h;
}

QuarticHamiltonian quantize_series(const PotentialSeries& series, const ChargingEnergies& charging,
                                   int n_qubits, const Truncation& truncation) {
    const int n_modes = 2 * n_qubits + 1;
    if (series.n_modes != n_modes) {
        throw std::invalid_argument("quantize: series mode count does not match qubit count");
    }
    QuarticHamiltonian h;
    for (int m = 0; m < n_modes; ++m) {
        QuantizedMode qm;
        qm.label = mode_label(m, n_qubits);
        if (m < n_qubits) {
            qm.dim = truncation.qubit;
            qm.e_c = charging.qubit[m];
        } else if (m < 2 * n_qubits) {
            qm.dim = truncation.theta;
            qm.e_c = charging.theta[m - n_qubits];
        } else {
            qm.dim = truncation.ancilla;
            qm.e_c = charging.ancilla;
        }
        const double k = 2.0 * series.quadratic_coeff(m);
        if (k <= 0.0) {
            throw std::runtime_error("quantize: non-positive quadratic coefficient on mode " +
                                     qm.label + " (flux too far from the operating point)");
        }
        qm.omega = std::sqrt(2.0 * k * qm.e_c);
        qm.zeta = std::sqrt(2.0 * qm.e_c / k);
        h.modes.push_back(qm);
    }

    h.op_cache.resize(n_modes);
    for (int m = 0; m < n_modes; ++m) {
        h.op_cache[m] = build_local_ops(h.modes[m].dim, h.modes[m].zeta);
    }

    for (int m = 0; m < n_modes; ++m) {
        h.terms.push_back({h.modes[m].e_c, {{m, static_cast<int>(LocalOp::kQ2)}}});
    }
    for (const auto& [expo, coeff] : series.coeffs) {
        HamiltonianTerm term;
        term.coeff = coeff;
        for (int m = 0; m < n_modes; ++m) {
            if (expo[m] > 0) term.factors.emplace_back(m, static_cast<int>(expo[m]));
        }
        h.terms.push_back(std::move(term));
    }
    return h;
}

QuarticHamiltonian quantize(const CircuitParams& params, const Truncation& truncation) {
    return quantize_series(potential_series(params), charging_energies(params), params.n_qubits,
                           truncation);
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

std::vector<std::vector<int>> retained_labels(int n_qubits) {
    const int n_modes = 2 * n_qubits + 1;
    std::vector<std::vector<int>> labels;
    for (int x = 0; x < (1 << n_qubits); ++x) {
        for (int a = 0; a < 3; ++a) {
            std::vector<int> label(n_modes, 0);
            for (int i = 0; i < n_qubits; ++i) label[i] = (x >> (n_qubits - 1 - i)) & 1;
            label[n_modes - 1] = a;
            labels.push_back(std::move(label));
        }
    }
    for (int i = 0; i < n_qubits; ++i) {
        std::vector<int> label(n_modes, 0);
        label[n_qubits + i] = 1;
        labels.push_back(std::move(label));
    }
    return labels;
}

double SpectrumResult::energy(const std::vector<int>& label) const {
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return energies[i];
    }
    throw std::invalid_argument("SpectrumResult: label not present");
}

namespace {

double sw2_energy(const QuarticHamiltonian& h, const std::vector<int>& alpha,
                  int* degenerate_skips) {
    const int n_modes = static_cast<int>(h.modes.size());
    std::vector<long long> stride(n_modes, 1);
    for (int m = n_modes - 2; m >= 0; --m) stride[m] = stride[m + 1] * h.modes[m + 1].dim;
    long long alpha_key = 0;
    for (int m = 0; m < n_modes; ++m) alpha_key += stride[m] * alpha[m];

    const double e_alpha = h.diagonal_energy(alpha);
    std::unordered_map<long long, double> amps;

    std::vector<int> beta_levels(n_modes);
    for (const auto& term : h.terms) {
        const int k = static_cast<int>(term.factors.size());
        if (k == 0) continue;
        // enumerate all target-level combinations with nonzero matrix elements
        std::vector<int> choice(k, 0);
        while (true) {
            double amp = term.coeff;
            long long key = alpha_key;
            for (int j = 0; j < k; ++j) {
                const auto [m, op] = term.factors[j];
                const int row = choice[j];
                amp *= h.local_op(m, op)(row, alpha[m]);
                key += stride[m] * (row - alpha[m]);
            }
            if (amp != 0.0 && key != alpha_key) {
                amps[key] += amp;
            }
            int j = 0;
            for (; j < k; ++j) {
                const int dim_j = h.modes[term.factors[j].first].dim;
                if (++choice[j] < dim_j) break;
                choice[j] = 0;
            }
            if (j == k) break;
        }
    }

    double e2 = 0.0;
    for (const auto& [key, amp] : amps) {
        long long rem = key;
        for (int m = 0; m < n_modes; ++m) {
            beta_levels[m] = static_cast<int>(rem / stride[m]);
            rem %= stride[m];
        }
        const double gap = e_alpha - h.diagonal_energy(beta_levels);
        if (std::abs(gap) < kDegenerateGap) {
            if (std::abs(amp) > kDegenerateAmp && degenerate_skips) ++(*degenerate_skips);
            continue;
        }
        e2 += amp * amp / gap;
    }
    return e_alpha + e2;
}

}  // namespace

SpectrumResult spectrum(const QuarticHamiltonian& h, SpectrumMethod method,
                        const std::vector<std::vector<int>>& labels, int exact_dim_cap) {
    const int n_qubits = (static_cast<int>(h.modes.size()) - 1) / 2;
    SpectrumResult result;
    result.method = method;
    result.n_qubits = n_qubits;
    result.labels = labels.empty() ? retained_labels(n_qubits) : labels;

    switch (method) {
        case SpectrumMethod::kRwa: {
            for (const auto& label : result.labels) {
                result.energies.push_back(h.diagonal_energy(label));
            }
            break;
        }
        case SpectrumMethod::kSw2: {
            for (const auto& label : result.labels) {
                result.energies.push_back(sw2_energy(h, label, &result.degenerate_skips));
            }
            break;
        }
        case SpectrumMethod::kExact: {
            const Matrix dense = h.dense_total(exact_dim_cap);
            auto [evals, evecs] = eig_hermitian(dense, 1e-9);
            const HilbertSpace sp = h.space();
            const int dim = sp.total_dim();
            struct Candidate {
                double overlap;
                int label_idx;
                int eig_idx;
            };
            std::vector<Candidate> candidates;
            for (size_t li = 0; li < result.labels.size(); ++li) {
                const int flat = sp.flat_index(result.labels[li]);
                for (int k = 0; k < dim; ++k) {
                    const double ov = std::norm(evecs(flat, k));
                    if (ov > 1e-4) candidates.push_back({ov, static_cast<int>(li), k});
                }
            }
            std::sort(candidates.begin(), candidates.end(),
                      [](const Candidate& a, const Candidate& b) { return a.overlap > b.overlap; });
            std::vector<int> assigned(result.labels.size(), -1);
            std::vector<bool> used(dim, false);
            for (const auto& c : candidates) {
                if (assigned[c.label_idx] >= 0 || used[c.eig_idx]) continue;
                assigned[c.label_idx] = c.eig_idx;
                used[c.eig_idx] = true;
            }
            result.energies.resize(result.labels.size());
            for (size_t li = 0; li < result.labels.size(); ++li) {
                if (assigned[li] < 0) {
                    throw std::runtime_error("spectrum: could not label an exact eigenstate");
                }
                result.energies[li] = evals(assigned[li]);
            }
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Effective parameters
// ---------------------------------------------------------------------------

namespace {

std::vector<int> config_label(int n_qubits, const std::vector<int>& qubit_levels, int ancilla) {
    std::vector<int> label(2 * n_qubits + 1, 0);
    for (int i = 0; i < n_qubits; ++i) label[i] = qubit_levels[i];
    label[2 * n_qubits] = ancilla;
    return label;
}

}  // namespace

EffectiveParams effective_params(const SpectrumResult& spec) {
    const int n = spec.n_qubits;
    EffectiveParams out;
    const std::vector<int> ground(n, 0);
    const double e00 = spec.energy(config_label(n, ground, 0));

    auto f_p = [&](const std::vector<int>& q) {
        return spec.energy(config_label(n, q, 1)) - spec.energy(config_label(n, q, 0));
    };

    const double fp0 = f_p(ground);
    out.omega_ancilla_ghz = fp0 / kTwoPi;
    out.alpha_ghz = (spec.energy(config_label(n, ground, 2)) - 2.0 * spec.energy(config_label(n, ground, 1)) +
                     e00) /
                    kTwoPi;

    for (int i = 0; i < n; ++i) {
        std::vector<int> ei(n, 0);
        ei[i] = 1;
        out.omega_qubit_ghz.push_back((spec.energy(config_label(n, ei, 0)) - e00) / kTwoPi);
        out.g_ghz.push_back((f_p(ei) - fp0) / kTwoPi);
    }

    for (int i = 0; i < n; ++i) {
        std::vector<int> label(2 * n + 1, 0);
        label[n + i] = 1;
        bool found = true;
        double e_theta = 0.0;
        try {
            e_theta = spec.energy(label);
        } catch (const std::invalid_argument&) {
            found = false;
        }
        out.omega_theta_ghz.push_back(found ? (e_theta - e00) / kTwoPi : 0.0);
    }

    out.g_zz_ghz.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            std::vector<int> ei(n, 0), ej(n, 0), eij(n, 0);
            ei[i] = 1;
            ej[j] = 1;
            eij[i] = eij[j] = 1;
            const double e_ij = spec.energy(config_label(n, eij, 0));
            const double e_i = spec.energy(config_label(n, ei, 0));
            const double e_j = spec.energy(config_label(n, ej, 0));
            out.g_zz_ghz[i][j] = (e_ij - e_i - e_j + e00) / (4.0 * kTwoPi);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Flux optimization
// ---------------------------------------------------------------------------

namespace {

// Labels needed for the couplings only: ground and single excitations with
// the ancilla in 0 and 1.
std::vector<std::vector<int>> coupling_labels(int n_qubits) {
    std::vector<std::vector<int>> labels;
    const std::vector<int> ground(n_qubits, 0);
    for (int a = 0; a < 2; ++a) labels.push_back(config_label(n_qubits, ground, a));
    for (int i = 0; i < n_qubits; ++i) {
        std::vector<int> ei(n_qubits, 0);
        ei[i] = 1;
        for (int a = 0; a < 2; ++a) labels.push_back(config_label(n_qubits, ei, a));
    }
    return labels;
}

std::vector<double> couplings_at_flux(const CircuitParams& params,
                                      const std::vector<double>& flux, bool relocate_minimum) {
    CircuitParams p = params;
    p.flux = flux;
    const PotentialModel model = potential_model(p);
    RealVector point = RealVector::Zero(model.n_modes);
    if (relocate_minimum) point = find_potential_minimum(model);
    const PotentialSeries series = series_of_model(model, point);
    const QuarticHamiltonian h = quantize_series(series, charging_energies(p), p.n_qubits);
    const SpectrumResult spec = spectrum(h, SpectrumMethod::kSw2, coupling_labels(p.n_qubits));

    const int n = p.n_qubits;
    const std::vector<int> ground(n, 0);
    const double fp0 = spec.energy(config_label(n, ground, 1)) - spec.energy(config_label(n, ground, 0));
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
        std::vector<int> ei(n, 0);
        ei[i] = 1;
        const double fpi =
            spec.energy(config_label(n, ei, 1)) - spec.energy(config_label(n, ei, 0));
        g[i] = (fpi - fp0) / kTwoPi;
    }
    return g;
}

struct SimplexResult {
    std::vector<double> best_x;
    double best_f = 0.0;
    int evaluations = 0;
    bool converged = false;
};

// Nelder-Mead with box clamping; small dimension (<= 4), smooth objective.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, double step, double lo, double hi, int budget) {
    const int n = static_cast<int>(x0.size());
    auto clamp = [&](std::vector<double>& x) {
        for (double& v : x) v = std::min(hi, std::max(lo, v));
    };
    SimplexResult result;
    auto eval = [&](std::vector<double> x) {
        clamp(x);
        ++result.evaluations;
        return f(x);
    };

    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (int i = 0; i < n; ++i) simplex[i + 1][i] += step;
    for (int i = 0; i <= n; ++i) {
        clamp(simplex[i]);
        fv[i] = eval(simplex[i]);
    }

    while (result.evaluations < budget) {
        std::vector<int> order(n + 1);
        for (int i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const int best = order[0], worst = order[n], second = order[n - 1];

        double size = 0.0;
        for (int i = 0; i <= n; ++i) {
            for (int d = 0; d < n; ++d) {
                size = std::max(size, std::abs(simplex[i][d] - simplex[best][d]));
            }
        }
        if (size < 1e-7 || std::abs(fv[worst] - fv[best]) < 1e-18) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (int i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (int d = 0; d < n; ++d) centroid[d] += simplex[i][d] / n;
        }
        auto combine = [&](double coeff) {
            std::vector<double> x(n);
            for (int d = 0; d < n; ++d) {
                x[d] = centroid[d] + coeff * (simplex[worst][d] - centroid[d]);
            }
            return x;
        };
        std::vector<double> xr = combine(-1.0);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            std::vector<double> xe = combine(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                fv[worst] = fe;
            } else {
                simplex[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            simplex[worst] = xr;
            fv[worst] = fr;
        } else {
            std::vector<double> xc = combine(fr < fv[worst] ? -0.5 : 0.5);
            const double fc = eval(xc);
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = xc;
                fv[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (int d = 0; d < n; ++d) {
                        simplex[i][d] = 0.5 * (simplex[i][d] + simplex[best][d]);
                    }
                    fv[i] = eval(simplex[i]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i) {
        if (fv[i] < fv[best]) best = i;
    }
    result.best_x = simplex[best];
    result.best_f = fv[best];
    return result;
}

double coupling_variance(const std::vector<double>& g) {
    const int n = static_cast<int>(g.size());
    double mean = 0.0;
    for (double v : g) mean += v / n;
    double var = 0.0;
    for (double v : g) var += (v - mean) * (v - mean) / std::max(1, n - 1);
    return var;
}

}  // namespace

FluxOptimization optimize_flux(const CircuitParams& params, int budget, uint64_t restart_seed) {
    params.validate();
    if (params.n_qubits < 2) throw std::invalid_argument("optimize_flux: need n_qubits >= 2");
    const int n = params.n_qubits;

    // Disordered rings need the expansion point relocated; the symmetric case
    // keeps the origin stationary at any flux.
    bool symmetric_rings = true;
    for (const auto& ej : params.ej_ghz) {
        if (ej[0] != ej[1] || ej[0] != ej[2] || ej[0] != ej[3]) symmetric_rings = false;
    }

    int eval_count = 0;
    auto objective = [&](const std::vector<double>& flux) {
        ++eval_count;
        const std::vector<double> g = couplings_at_flux(params, flux, !symmetric_rings);
        double penalty = 0.0;
        for (double f : flux) penalty += 1e-5 * f * f;  // break the g_i = g tie manifold
        return coupling_variance(g) + penalty;
    };

    Rng rng(restart_seed);
    std::vector<std::vector<double>> starts;
    starts.push_back(params.flux);
    for (int r = 0; r < 2; ++r) {
        std::vector<double> s(n);
        for (int d = 0; d < n; ++d) s[d] = 0.16 * (rng.uniform() - 0.5);
        starts.push_back(std::move(s));
    }

    SimplexResult best;
    best.best_f = std::numeric_limits<double>::infinity();
    bool any_converged = false;
    const int per_restart = budget / static_cast<int>(starts.size());
    for (const auto& start : starts) {
        SimplexResult r = nelder_mead(objective, start, 0.02, -0.25, 0.25, per_restart);
        any_converged = any_converged || r.converged;
        if (r.best_f < best.best_f) {
            best.best_x = r.best_x;
            best.best_f = r.best_f;
        }
    }

    FluxOptimization out;
    out.flux = best.best_x;
    out.evaluations = eval_count;

    CircuitParams tuned = params;
    tuned.flux = best.best_x;
    const PotentialModel model = potential_model(tuned);
    const RealVector point =
        symmetric_rings ? RealVector::Zero(model.n_modes) : find_potential_minimum(model);
    const QuarticHamiltonian h =
        quantize_series(series_of_model(model, point), charging_energies(tuned), n);
    out.effective = effective_params(spectrum(h, SpectrumMethod::kSw2));
    const auto [gmin, gmax] =
        std::minmax_element(out.effective.g_ghz.begin(), out.effective.g_ghz.end());
    out.g_spread_ghz = *gmax - *gmin;
    // converged when a simplex collapsed or the couplings are equal for any
    // practical purpose (well below the 1 MHz retuning resolution)
    out.converged = any_converged || out.g_spread_ghz < 1e-4;
    return out;
}

// ---------------------------------------------------------------------------
// Disorder ensemble
// ---------------------------------------------------------------------------

uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    has_spare_ = true;
    spare_ = r * std::sin(kTwoPi * u2);
    return r * std::cos(kTwoPi * u2);
}

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    Rng rng(seed ^ (0x9E3779B97F4A7C15ull * (salt + 1)));
    return rng.next_u64();
}

void parallel_samples(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next(0);
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            try {
                for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
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

DisorderResult disorder_ensemble(const CircuitParams& params, double sigma_rel, int n_samples,
                                 uint64_t seed, const std::vector<double>& flux_sweep,
                                 bool retune, int retune_budget, int threads) {
    params.validate();
    if (sigma_rel < 0.0) throw std::invalid_argument("disorder_ensemble: sigma_rel must be >= 0");
    if (n_samples < 1) throw std::invalid_argument("disorder_ensemble: need n >= 1");
    if (flux_sweep.empty()) throw std::invalid_argument("disorder_ensemble: empty flux sweep");

    const int n = params.n_qubits;
    const int n_flux = static_cast<int>(flux_sweep.size());

    DisorderResult result;
    result.flux_values = flux_sweep;
    result.sample_g_ghz.assign(n_samples, RealMatrix::Zero(n_flux, n));
    if (retune) result.retuned_spread_ghz.assign(n_samples, 0.0);
    std::vector<int> rejected_per_sample(n_samples, 0);

    parallel_samples(n_samples, threads, [&](int sample) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 64) {
                throw std::runtime_error("disorder_ensemble: sample kept failing; sigma too large");
            }
            Rng rng(mix_seed(seed, static_cast<uint64_t>(sample) * 97 + attempt));
            CircuitParams sample_params = params;
            bool ok = true;
            for (int i = 0; i < n && ok; ++i) {
                for (int k = 0; k < 4; ++k) {
                    const double draw =
                        params.ej_ghz[i][k] * (1.0 + sigma_rel * rng.gaussian());
                    if (draw <= 0.0) {
                        ok = false;
                        break;
                    }
                    sample_params.ej_ghz[i][k] = draw;
                }
            }
            if (ok) {
                try {
                    for (int fi = 0; fi < n_flux; ++fi) {
                        std::vector<double> flux = params.flux;
                        flux[0] = flux_sweep[fi];
                        const std::vector<double> g =
                            couplings_at_flux(sample_params, flux, true);
                        for (int qi = 0; qi < n; ++qi) result.sample_g_ghz[sample](fi, qi) = g[qi];
                    }
                    if (retune) {
                        FluxOptimization opt = optimize_flux(sample_params, retune_budget,
                                                             mix_seed(seed, 7777 + sample));
                        result.retuned_spread_ghz[sample] = opt.g_spread_ghz;
                    }
                } catch (const std::runtime_error&) {
                    ok = false;  // not positive definite somewhere on the sweep
                }
            }
            if (ok) break;
            ++rejected_per_sample[sample];
        }
    });

    for (int v : rejected_per_sample) result.rejected += v;

    result.mean_g_ghz = RealMatrix::Zero(n_flux, n);
    result.std_g_ghz = RealMatrix::Zero(n_flux, n);
    for (int fi = 0; fi < n_flux; ++fi) {
        for (int qi = 0; qi < n; ++qi) {
            double mean = 0.0;
            for (int s = 0; s < n_samples; ++s) mean += result.sample_g_ghz[s](fi, qi);
            mean /= n_samples;
            double var = 0.0;
            for (int s = 0; s < n_samples; ++s) {
                const double d = result.sample_g_ghz[s](fi, qi) - mean;
                var += d * d;
            }
            var /= std::max(1, n_samples - 1);
            result.mean_g_ghz(fi, qi) = mean;
            result.std_g_ghz(fi, qi) = std::sqrt(var);
        }
    }
    return result;
}

}  // namespace pcg
