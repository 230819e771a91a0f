#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "pcgsim/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pcgsim: parity-controlled-gate device simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    long long seed = -1;
    int threads = 0;

    const std::vector<std::string> experiments = {"spectrum", "optimize-flux", "gate",
                                                  "ghz",      "disorder",      "cancel-zz"};
    for (const std::string& name : experiments) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "config file (JSON)")->required();
        sub->add_option("--seed", seed, "override the seed from the config");
        sub->add_option("--out", out_path, "override the output path");
        sub->add_option("--threads", threads, "worker threads for sweeps and ensembles");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string experiment = app.get_subcommands().front()->get_name();

    try {
        pcg::ExperimentConfig config = pcg::load_config(config_path);
        if (config.experiment != experiment) {
            std::fprintf(stderr, "error: config is for experiment '%s', not '%s'\n",
                         config.experiment.c_str(), experiment.c_str());
            return kExitConfig;
        }
        pcg::RunOverrides overrides;
        if (seed >= 0) overrides.seed = static_cast<uint64_t>(seed);
        if (!out_path.empty()) overrides.out = out_path;
        if (threads > 0) overrides.threads = threads;
        const std::string written = pcg::run_experiment(config, overrides);
        std::printf("wrote %s\n", written.c_str());
        return 0;
    } catch (const pcg::ConfigError& err) {
        std::fprintf(stderr, "config error: %s\n", err.what());
        return kExitConfig;
    } catch (const pcg::ConvergenceError& err) {
        std::fprintf(stderr, "convergence error: %s\n", err.what());
        return kExitNumerical;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return kExitNumerical;
    }
}
