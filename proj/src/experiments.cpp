#include "pcgsim/experiments.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pcgsim/gates.hpp"
#include "pcgsim/metrics.hpp"
#include "pcgsim/pulses.hpp"

namespace pcg {

using nlohmann::json;

namespace {

void require_keys(const json& block, const std::string& name,
                  const std::set<std::string>& allowed) {
    if (!block.is_object()) throw ConfigError("config: '" + name + "' must be an object");
    for (auto it = block.begin(); it != block.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("config: unknown key '" + it.key() + "' in '" + name + "'");
        }
    }
}

double get_number(const json& block, const std::string& name, const std::string& key,
                  std::optional<double> fallback = std::nullopt) {
    if (!block.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("config: missing '" + key + "' in '" + name + "'");
    }
    if (!block[key].is_number()) throw ConfigError("config: '" + key + "' must be a number");
    return block[key].get<double>();
}

std::vector<double> get_number_list(const json& v, const std::string& what) {
    if (!v.is_array()) throw ConfigError("config: '" + what + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& item : v) {
        if (!item.is_number()) throw ConfigError("config: '" + what + "' must hold numbers");
        out.push_back(item.get<double>());
    }
    return out;
}

CircuitParams parse_circuit(const json& block) {
    require_keys(block, "circuit",
                 {"n_qubits", "c_qubit_fF", "c_ancilla_fF", "c_junction_fF", "ej_ghz", "flux",
                  "flux_sweep"});
    CircuitParams params;
    params.n_qubits = static_cast<int>(get_number(block, "circuit", "n_qubits"));
    params.c_qubit_fF = get_number_list(block.at("c_qubit_fF"), "c_qubit_fF");
    params.c_ancilla_fF = get_number(block, "circuit", "c_ancilla_fF");
    params.c_junction_fF = get_number_list(block.at("c_junction_fF"), "c_junction_fF");
    if (!block.contains("ej_ghz") || !block["ej_ghz"].is_array()) {
        throw ConfigError("config: circuit needs 'ej_ghz'");
    }
    for (const auto& entry : block["ej_ghz"]) {
        if (entry.is_number()) {
            const double e = entry.get<double>();
            params.ej_ghz.push_back({e, e, e, e});
        } else {
            const std::vector<double> v = get_number_list(entry, "ej_ghz entry");
            if (v.size() != 4) throw ConfigError("config: per-ring ej_ghz needs 4 junctions");
            params.ej_ghz.push_back({v[0], v[1], v[2], v[3]});
        }
    }
    if (block.contains("flux")) {
        params.flux = get_number_list(block.at("flux"), "flux");
    } else {
        params.flux.assign(params.n_qubits, 0.0);
    }
    params.validate();
    return params;
}

EffectiveModel parse_effective(const json& block) {
    require_keys(block, "effective",
                 {"n_qubits", "g_mhz", "alpha_mhz", "g_zz_mhz", "omega_qubit_ghz",
                  "omega_ancilla_ghz"});
    EffectiveModel model;
    model.n_qubits = static_cast<int>(get_number(block, "effective", "n_qubits"));
    if (model.n_qubits < 1) throw ConfigError("config: effective.n_qubits must be >= 1");
    const double mhz_to_rad = kTwoPi * 1e-3;
    model.g = get_number(block, "effective", "g_mhz") * mhz_to_rad;
    model.alpha = get_number(block, "effective", "alpha_mhz") * mhz_to_rad;
    model.g_zz = get_number(block, "effective", "g_zz_mhz", 0.0) * mhz_to_rad;
    model.omega_ancilla = get_number(block, "effective", "omega_ancilla_ghz", 0.0) * kTwoPi;
    if (block.contains("omega_qubit_ghz")) {
        for (double w : get_number_list(block.at("omega_qubit_ghz"), "omega_qubit_ghz")) {
            model.omega_qubit.push_back(w * kTwoPi);
        }
    }
    model.ancilla_levels = 3;
    return model;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& err) {
        throw ConfigError(std::string("config: parse error: ") + err.what());
    }
    require_keys(doc, "top level",
                 {"experiment", "circuit", "effective", "noise", "pulse", "run", "disorder",
                  "cancel"});

    ExperimentConfig config;
    if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
        throw ConfigError("config: missing 'experiment' tag");
    }
    config.experiment = doc["experiment"].get<std::string>();
    static const std::set<std::string> kKnown = {"spectrum", "optimize-flux", "gate",
                                                 "ghz",      "disorder",      "cancel-zz"};
    if (!kKnown.count(config.experiment)) {
        throw ConfigError("config: unknown experiment '" + config.experiment + "'");
    }

    if (doc.contains("circuit") == doc.contains("effective")) {
        throw ConfigError("config: exactly one of 'circuit'/'effective' must be present");
    }
    if (doc.contains("circuit")) {
        config.circuit = parse_circuit(doc["circuit"]);
        if (doc["circuit"].contains("flux_sweep")) {
            config.flux_sweep = get_number_list(doc["circuit"]["flux_sweep"], "flux_sweep");
        }
    } else {
        config.effective = parse_effective(doc["effective"]);
    }

    if (doc.contains("noise")) {
        const json& block = doc["noise"];
        require_keys(block, "noise", {"enabled", "t1_us", "tphi_us"});
        config.noise.t1_us = get_number(block, "noise", "t1_us", 40.0);
        config.noise.tphi_us = get_number(block, "noise", "tphi_us", 40.0);
        if (block.contains("enabled")) {
            if (block["enabled"].is_boolean()) {
                config.noise.run_with = block["enabled"].get<bool>();
                config.noise.run_without = !config.noise.run_with;
            } else if (block["enabled"].is_string() && block["enabled"] == "both") {
                config.noise.run_with = config.noise.run_without = true;
            } else {
                throw ConfigError("config: noise.enabled must be true, false or \"both\"");
            }
        }
    }

    if (doc.contains("pulse")) {
        const json& block = doc["pulse"];
        require_keys(block, "pulse", {"shape", "taper", "gate_time_ns", "gate_times_ns", "phase",
                                      "scheme"});
        if (block.contains("shape")) {
            config.pulse.shape = block["shape"].get<std::string>();
            if (config.pulse.shape != "tukey") {
                throw ConfigError("config: unsupported pulse shape '" + config.pulse.shape + "'");
            }
        }
        config.pulse.taper = get_number(block, "pulse", "taper", 0.5);
        if (config.pulse.taper < 0.0 || config.pulse.taper > 1.0) {
            throw ConfigError("config: pulse.taper must be in [0, 1]");
        }
        if (block.contains("gate_time_ns") && block.contains("gate_times_ns")) {
            throw ConfigError("config: give either gate_time_ns or gate_times_ns, not both");
        }
        if (block.contains("gate_time_ns")) {
            config.pulse.gate_times_ns = {get_number(block, "pulse", "gate_time_ns")};
        }
        if (block.contains("gate_times_ns")) {
            config.pulse.gate_times_ns = get_number_list(block["gate_times_ns"], "gate_times_ns");
        }
        config.pulse.phase = get_number(block, "pulse", "phase", 0.0);
        if (block.contains("scheme")) {
            const std::string s = block["scheme"].get<std::string>();
            if (s == "basic") {
                config.pulse.schemes = {Scheme::kBasic};
            } else if (s == "advanced") {
                config.pulse.schemes = {Scheme::kAdvanced};
            } else if (s == "both") {
                config.pulse.schemes = {Scheme::kBasic, Scheme::kAdvanced};
            } else {
                throw ConfigError("config: pulse.scheme must be basic, advanced or both");
            }
        }
    }

    if (doc.contains("run")) {
        const json& block = doc["run"];
        require_keys(block, "run", {"dt_ns", "seed", "out", "threads", "methods", "exact_dim_cap"});
        config.run.dt_ns = get_number(block, "run", "dt_ns", 0.01);
        if (config.run.dt_ns <= 0.0) throw ConfigError("config: run.dt_ns must be positive");
        config.run.seed = static_cast<uint64_t>(get_number(block, "run", "seed", 1.0));
        if (block.contains("out")) config.run.out = block["out"].get<std::string>();
        config.run.threads = static_cast<int>(get_number(block, "run", "threads", 1.0));
        config.run.exact_dim_cap =
            static_cast<int>(get_number(block, "run", "exact_dim_cap", 2000.0));
        if (block.contains("methods")) {
            for (const auto& m : block["methods"]) {
                const std::string name = m.get<std::string>();
                if (name == "rwa") {
                    config.run.methods.push_back(SpectrumMethod::kRwa);
                } else if (name == "sw2") {
                    config.run.methods.push_back(SpectrumMethod::kSw2);
                } else if (name == "exact") {
                    config.run.methods.push_back(SpectrumMethod::kExact);
                } else {
                    throw ConfigError("config: unknown method '" + name + "'");
                }
            }
        }
    }

    if (doc.contains("disorder")) {
        const json& block = doc["disorder"];
        require_keys(block, "disorder", {"sigma_rel", "samples", "retune", "retune_budget"});
        config.disorder.sigma_rel = get_number(block, "disorder", "sigma_rel", 0.10);
        config.disorder.samples = static_cast<int>(get_number(block, "disorder", "samples", 200.0));
        if (block.contains("retune")) config.disorder.retune = block["retune"].get<bool>();
        config.disorder.retune_budget =
            static_cast<int>(get_number(block, "disorder", "retune_budget", 240.0));
    }

    if (doc.contains("cancel")) {
        const json& block = doc["cancel"];
        require_keys(block, "cancel", {"amplitudes_rad_ns"});
        if (block.contains("amplitudes_rad_ns")) {
            config.cancel_amplitudes =
                get_number_list(block["amplitudes_rad_ns"], "amplitudes_rad_ns");
        }
    }

    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string ExperimentConfig::canonical_json() const {
    json doc;
    doc["experiment"] = experiment;
    if (circuit) {
        json c;
        c["n_qubits"] = circuit->n_qubits;
        c["c_qubit_fF"] = circuit->c_qubit_fF;
        c["c_ancilla_fF"] = circuit->c_ancilla_fF;
        c["c_junction_fF"] = circuit->c_junction_fF;
        c["ej_ghz"] = json::array();
        for (const auto& ring : circuit->ej_ghz) {
            c["ej_ghz"].push_back(std::vector<double>(ring.begin(), ring.end()));
        }
        c["flux"] = circuit->flux;
        if (!flux_sweep.empty()) c["flux_sweep"] = flux_sweep;
        doc["circuit"] = c;
    }
    if (effective) {
        json e;
        e["n_qubits"] = effective->n_qubits;
        e["g_mhz"] = effective->g / kTwoPi * 1e3;
        e["alpha_mhz"] = effective->alpha / kTwoPi * 1e3;
        e["g_zz_mhz"] = effective->g_zz / kTwoPi * 1e3;
        doc["effective"] = e;
    }
    doc["noise"] = {{"with", noise.run_with},
                    {"without", noise.run_without},
                    {"t1_us", noise.t1_us},
                    {"tphi_us", noise.tphi_us}};
    json p;
    p["taper"] = pulse.taper;
    p["gate_times_ns"] = pulse.gate_times_ns;
    p["phase"] = pulse.phase;
    p["schemes"] = json::array();
    for (Scheme s : pulse.schemes) p["schemes"].push_back(s == Scheme::kBasic ? "basic" : "advanced");
    doc["pulse"] = p;
    doc["run"] = {{"dt_ns", run.dt_ns}, {"seed", run.seed}, {"threads", run.threads}};
    doc["disorder"] = {{"sigma_rel", disorder.sigma_rel},
                       {"samples", disorder.samples},
                       {"retune", disorder.retune}};
    if (!cancel_amplitudes.empty()) doc["cancel"] = {{"amplitudes_rad_ns", cancel_amplitudes}};
    return doc.dump();
}

std::string ExperimentConfig::digest() const {
    // FNV-1a 64 over the canonical form
    const std::string text = canonical_json();
    uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string csv_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

namespace {

class CsvWriter {
  public:
    CsvWriter(const ExperimentConfig& config, const std::string& fallback_name) {
        path_ = config.run.out.empty() ? fallback_name : config.run.out;
        out_.open(path_);
        if (!out_) throw std::runtime_error("cannot open output file '" + path_ + "'");
        out_ << "# pcgsim " << kVersion << "\n";
        out_ << "# experiment: " << config.experiment << "\n";
        out_ << "# config-digest: " << config.digest() << "\n";
        out_ << "# seed: " << config.run.seed << "\n";
    }

    void header(const std::vector<std::string>& columns) {
        for (size_t i = 0; i < columns.size(); ++i) {
            out_ << (i ? "," : "") << columns[i];
        }
        out_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            out_ << (i ? "," : "") << cells[i];
        }
        out_ << "\n";
    }

    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::ofstream out_;
};

const char* method_name(SpectrumMethod m) {
    switch (m) {
        case SpectrumMethod::kRwa: return "rwa";
        case SpectrumMethod::kSw2: return "sw2";
        case SpectrumMethod::kExact: return "exact";
    }
    return "?";
}

EffectiveParams effective_at_flux(const CircuitParams& params, double ring1_flux,
                                  SpectrumMethod method, int exact_dim_cap) {
    CircuitParams p = params;
    p.flux[0] = ring1_flux;
    bool symmetric_rings = true;
    for (const auto& ej : p.ej_ghz) {
        if (ej[0] != ej[1] || ej[0] != ej[2] || ej[0] != ej[3]) symmetric_rings = false;
    }
    const PotentialModel model = potential_model(p);
    const RealVector point =
        symmetric_rings ? RealVector::Zero(model.n_modes) : find_potential_minimum(model);
    const QuarticHamiltonian h =
        quantize_series(series_of_model(model, point), charging_energies(p), p.n_qubits);
    return effective_params(spectrum(h, method, {}, exact_dim_cap));
}

DeviceModel device_for(const ExperimentConfig& config, bool with_noise) {
    if (!config.effective) throw ConfigError("config: experiment needs the effective block");
    DeviceModel model = device_from_effective(*config.effective);
    if (with_noise) model.set_noise(config.noise.t1_us, config.noise.tphi_us);
    return model;
}

Matrix ideal_gate_for(const DeviceModel& model, const DriveProgram& program, Scheme scheme,
                      double phase) {
    if (model.n_qubits == 4 && scheme == Scheme::kAdvanced) {
        return modified_pcf_unitary(phase, phase, program.chi).mat;
    }
    return pcf_unitary(model.n_qubits, phase).mat;
}

}  // namespace

std::string run_spectrum(const ExperimentConfig& config) {
    if (!config.circuit) throw ConfigError("spectrum: circuit block required");
    if (config.flux_sweep.empty()) throw ConfigError("spectrum: circuit.flux_sweep required");
    std::vector<SpectrumMethod> methods = config.run.methods;
    if (methods.empty()) {
        methods = {SpectrumMethod::kRwa, SpectrumMethod::kSw2};
        const int dim = quantize(*config.circuit).total_dim();
        if (dim <= config.run.exact_dim_cap) methods.push_back(SpectrumMethod::kExact);
    }

    const int n = config.circuit->n_qubits;
    CsvWriter csv(config, "spectrum.csv");
    std::vector<std::string> cols = {"flux", "method"};
    for (int i = 1; i <= n; ++i) cols.push_back("omega_q" + std::to_string(i) + "_ghz");
    cols.push_back("omega_p_ghz");
    for (int i = 1; i <= n; ++i) cols.push_back("g" + std::to_string(i) + "_mhz");
    cols.push_back("g12_mhz");
    csv.header(cols);

    for (double flux : config.flux_sweep) {
        for (SpectrumMethod method : methods) {
            const EffectiveParams eff =
                effective_at_flux(*config.circuit, flux, method, config.run.exact_dim_cap);
            std::vector<std::string> cells = {csv_number(flux), method_name(method)};
            for (double w : eff.omega_qubit_ghz) cells.push_back(csv_number(w));
            cells.push_back(csv_number(eff.omega_ancilla_ghz));
            for (double g : eff.g_ghz) cells.push_back(csv_number(g * 1e3));
            cells.push_back(csv_number(eff.g_zz_ghz[0].size() > 1 ? eff.g_zz_ghz[0][1] * 1e3 : 0.0));
            csv.row(cells);
        }
    }
    return csv.path();
}

std::string run_optimize_flux(const ExperimentConfig& config) {
    if (!config.circuit) throw ConfigError("optimize-flux: circuit block required");
    const FluxOptimization opt = optimize_flux(*config.circuit, 500, config.run.seed);

    const int n = config.circuit->n_qubits;
    CsvWriter csv(config, "optimize_flux.csv");
    std::vector<std::string> cols;
    for (int i = 1; i <= n; ++i) cols.push_back("flux" + std::to_string(i));
    for (int i = 1; i <= n; ++i) cols.push_back("g" + std::to_string(i) + "_mhz");
    for (int i = 1; i <= n; ++i) cols.push_back("omega_q" + std::to_string(i) + "_ghz");
    cols.insert(cols.end(), {"omega_p_ghz", "alpha_p_mhz", "g_spread_mhz", "converged"});
    csv.header(cols);

    std::vector<std::string> cells;
    for (double f : opt.flux) cells.push_back(csv_number(f));
    for (double g : opt.effective.g_ghz) cells.push_back(csv_number(g * 1e3));
    for (double w : opt.effective.omega_qubit_ghz) cells.push_back(csv_number(w));
    cells.push_back(csv_number(opt.effective.omega_ancilla_ghz));
    cells.push_back(csv_number(opt.effective.alpha_ghz * 1e3));
    cells.push_back(csv_number(opt.g_spread_ghz * 1e3));
    cells.push_back(opt.converged ? "1" : "0");
    csv.row(cells);
    if (!opt.converged) {
        throw ConvergenceError("optimize-flux: simplex search exhausted its budget (best spread " +
                               csv_number(opt.g_spread_ghz * 1e3) + " MHz written to " +
                               csv.path() + ")");
    }
    return csv.path();
}

std::string run_gate(const ExperimentConfig& config) {
    if (!config.effective) throw ConfigError("gate: effective block required");
    if (config.pulse.gate_times_ns.empty()) throw ConfigError("gate: pulse times required");
    const int n = config.effective->n_qubits;
    if (n != 2 && n != 4) throw ConfigError("gate: effective.n_qubits must be 2 or 4");

    CsvWriter csv(config, "gate.csv");
    csv.header({"gate_time_ns", "scheme", "noise_on", "process_fidelity", "leakage"});

    std::vector<bool> noise_settings;
    if (config.noise.run_without) noise_settings.push_back(false);
    if (config.noise.run_with) noise_settings.push_back(true);

    for (double gate_time : config.pulse.gate_times_ns) {
        for (Scheme scheme : config.pulse.schemes) {
            for (bool noise_on : noise_settings) {
                const DeviceModel model = device_for(config, noise_on);
                const DriveProgram program =
                    (n == 2) ? pcf_program_2q(model, gate_time, config.pulse.taper,
                                              config.pulse.phase, scheme, config.run.dt_ns)
                             : pcf_program_4q(model, gate_time, config.pulse.taper,
                                              config.pulse.phase, scheme, config.run.dt_ns);
                EvolveOptions options;
                options.dt = config.run.dt_ns;
                ProcessMap map = simulate_channel(model, program, options, config.run.threads);
                map = frame_correction(map, model, program);
                const double fidelity = process_fidelity(
                    choi(map), ideal_gate_for(model, program, scheme, config.pulse.phase));
                csv.row({csv_number(gate_time), scheme == Scheme::kBasic ? "basic" : "advanced",
                         noise_on ? "1" : "0", csv_number(fidelity),
                         csv_number(map.average_leakage())});
            }
        }
    }
    return csv.path();
}

std::string run_ghz(const ExperimentConfig& config) {
    if (!config.effective) throw ConfigError("ghz: effective block required");
    if (config.effective->n_qubits != 4) throw ConfigError("ghz: needs a 4-qubit effective block");
    if (config.pulse.gate_times_ns.empty()) throw ConfigError("ghz: total times required");

    CsvWriter csv(config, "ghz.csv");
    csv.header({"total_time_ns", "scheme", "noise_on", "state_fidelity"});

    std::vector<bool> noise_settings;
    if (config.noise.run_without) noise_settings.push_back(false);
    if (config.noise.run_with) noise_settings.push_back(true);

    // target (|+>^4 - i|->^4)/sqrt2 with the ancilla in its ground state
    const StateVector target_q = ghz_target(4);
    Vector target = Vector::Zero(48);
    for (int x = 0; x < 16; ++x) target(3 * x) = target_q.amps(x);

    for (double total_time : config.pulse.gate_times_ns) {
        for (Scheme scheme : config.pulse.schemes) {
            for (bool noise_on : noise_settings) {
                const DeviceModel model = device_for(config, noise_on);
                const DriveProgram program =
                    pcp_program_4q(model, 0.5 * total_time, config.pulse.taper, M_PI / 2.0, scheme,
                                   config.run.dt_ns);
                Vector plus = Vector::Zero(48);
                for (int x = 0; x < 16; ++x) plus(3 * x) = 0.25;
                DensityMatrix rho0(model.space(), plus * plus.adjoint());
                EvolveOptions options;
                options.dt = config.run.dt_ns;
                EvolutionResult res = evolve_device(model, program, rho0, options);
                const DensityMatrix corrected =
                    apply_frame_correction(res.final_state, model, program);
                const double fidelity = state_fidelity(corrected.mat, target);
                csv.row({csv_number(total_time), scheme == Scheme::kBasic ? "basic" : "advanced",
                         noise_on ? "1" : "0", csv_number(fidelity)});
            }
        }
    }
    return csv.path();
}

std::string run_disorder(const ExperimentConfig& config) {
    if (!config.circuit) throw ConfigError("disorder: circuit block required");
    if (config.flux_sweep.empty()) throw ConfigError("disorder: circuit.flux_sweep required");

    const DisorderResult result = disorder_ensemble(
        *config.circuit, config.disorder.sigma_rel, config.disorder.samples, config.run.seed,
        config.flux_sweep, config.disorder.retune, config.disorder.retune_budget,
        config.run.threads);

    const int n = config.circuit->n_qubits;
    CsvWriter csv(config, "disorder.csv");
    std::vector<std::string> cols = {"kind", "x"};
    for (int i = 1; i <= n; ++i) {
        cols.push_back("mean_g" + std::to_string(i) + "_mhz");
        cols.push_back("std_g" + std::to_string(i) + "_mhz");
    }
    csv.header(cols);

    for (size_t fi = 0; fi < result.flux_values.size(); ++fi) {
        std::vector<std::string> cells = {"flux", csv_number(result.flux_values[fi])};
        for (int qi = 0; qi < n; ++qi) {
            cells.push_back(csv_number(result.mean_g_ghz(fi, qi) * 1e3));
            cells.push_back(csv_number(result.std_g_ghz(fi, qi) * 1e3));
        }
        csv.row(cells);
    }
    for (size_t s = 0; s < result.retuned_spread_ghz.size(); ++s) {
        std::vector<std::string> cells = {"sample", csv_number(static_cast<double>(s)),
                                          csv_number(result.retuned_spread_ghz[s] * 1e3)};
        cells.resize(2 + 2 * n, "");
        csv.row(cells);
    }
    return csv.path();
}

std::string run_cancel_zz(const ExperimentConfig& config) {
    if (!config.effective) throw ConfigError("cancel-zz: effective block required");
    if (config.effective->n_qubits != 2) throw ConfigError("cancel-zz: needs 2 qubits");
    if (config.effective->g_zz == 0.0) throw ConfigError("cancel-zz: effective.g_zz_mhz required");

    const DeviceModel model = device_for(config, false);
    const CancellationTone tone = cancellation_tone(model);
    if (!tone.converged) {
        throw ConvergenceError("cancel-zz: residual " + csv_number(tone.residual) +
                               " rad/ns not below 10% of the undriven rate " +
                               csv_number(tone.undriven));
    }

    std::vector<double> amplitudes = config.cancel_amplitudes;
    if (amplitudes.empty()) {
        for (int k = 0; k <= 8; ++k) amplitudes.push_back(tone.amplitude * k / 6.0);
    }

    CsvWriter csv(config, "cancel_zz.csv");
    csv.header({"omega_c_rad_ns", "residual_g12_mhz", "optimized"});
    ZzProbeOptions probe;
    for (double amp : amplitudes) {
        double rate;
        if (amp == 0.0) {
            rate = zz_phase_rate(model, std::nullopt, probe);
        } else {
            rate = zz_phase_rate(model, cw_tone_program(probe.window, probe.dt, tone.detuning, amp),
                                 probe);
        }
        csv.row({csv_number(amp), csv_number(rate / kTwoPi * 1e3), "0"});
    }
    csv.row({csv_number(tone.amplitude), csv_number(tone.residual / kTwoPi * 1e3), "1"});
    return csv.path();
}

std::string run_experiment(ExperimentConfig config, const RunOverrides& overrides) {
    if (overrides.seed) config.run.seed = *overrides.seed;
    if (overrides.out) config.run.out = *overrides.out;
    if (overrides.threads) config.run.threads = *overrides.threads;

    if (config.experiment == "spectrum") return run_spectrum(config);
    if (config.experiment == "optimize-flux") return run_optimize_flux(config);
    if (config.experiment == "gate") return run_gate(config);
    if (config.experiment == "ghz") return run_ghz(config);
    if (config.experiment == "disorder") return run_disorder(config);
    if (config.experiment == "cancel-zz") return run_cancel_zz(config);
    throw ConfigError("unknown experiment '" + config.experiment + "'");
}

}  // namespace pcg
