#ifndef PCGSIM_EXPERIMENTS_HPP
#define PCGSIM_EXPERIMENTS_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcgsim/circuit.hpp"
#include "pcgsim/dynamics.hpp"

namespace pcg {

inline constexpr const char* kVersion = "0.1.0";

/// Configuration problems (schema violations, unknown keys, bad values).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical non-convergence surfaced by a runner.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoiseBlock {
    bool run_without = false;
    bool run_with = true;
    double t1_us = 40.0;
    double tphi_us = 40.0;
};

struct PulseBlock {
    std::string shape = "tukey";
    double taper = 0.5;
    std::vector<double> gate_times_ns;
    double phase = 0.0;
    std::vector<Scheme> schemes = {Scheme::kAdvanced};
};

struct RunBlock {
    double dt_ns = 0.01;
    uint64_t seed = 1;
    std::string out;
    int threads = 1;
    std::vector<SpectrumMethod> methods;  // spectrum experiment only
    int exact_dim_cap = 2000;
};

struct DisorderBlock {
    double sigma_rel = 0.10;
    int samples = 200;
    bool retune = true;
    int retune_budget = 240;
};

struct ExperimentConfig {
    std::string experiment;
    std::optional<CircuitParams> circuit;
    std::vector<double> flux_sweep;          // applied to ring 1
    std::optional<EffectiveModel> effective; // rad/ns, converted from the file's MHz/GHz
    NoiseBlock noise;
    PulseBlock pulse;
    RunBlock run;
    DisorderBlock disorder;
    std::vector<double> cancel_amplitudes;   // rad/ns; empty -> auto scan

    std::string digest() const;  // canonical-form hash echoed into outputs
    std::string canonical_json() const;
};

/// Parse and validate a config document (JSON text). Unknown keys are hard
/// errors; exactly one of the circuit/effective blocks must be present.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct RunOverrides {
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
};

/// Dispatch on config.experiment; returns the path of the written CSV.
std::string run_experiment(ExperimentConfig config, const RunOverrides& overrides = {});

std::string run_spectrum(const ExperimentConfig& config);
std::string run_optimize_flux(const ExperimentConfig& config);
std::string run_gate(const ExperimentConfig& config);
std::string run_ghz(const ExperimentConfig& config);
std::string run_disorder(const ExperimentConfig& config);
std::string run_cancel_zz(const ExperimentConfig& config);

/// Fixed-format float used in every CSV cell so reruns are byte-identical.
std::string csv_number(double value);

}  // namespace pcg

#endif
