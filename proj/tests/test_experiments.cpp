#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pcgsim/experiments.hpp"

using namespace pcg;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

const char* kGateConfig = R"({
  "experiment": "gate",
  "effective": {"n_qubits": 2, "g_mhz": -250, "alpha_mhz": -100},
  "noise": {"enabled": "both", "t1_us": 40, "tphi_us": 40},
  "pulse": {"taper": 0.5, "gate_times_ns": [18.0], "phase": 0.0, "scheme": "both"},
  "run": {"dt_ns": 0.02, "seed": 3, "out": "OUT"}
})";

std::string with_out(const char* text, const std::string& out) {
    std::string s = text;
    const auto pos = s.find("OUT");
    s.replace(pos, 3, out);
    return s;
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config("{}"), ConfigError);

    // both blocks present
    CHECK_THROWS_WITH_AS(parse_config(R"({"experiment":"gate",
        "circuit": {"n_qubits":1,"c_qubit_fF":[22],"c_ancilla_fF":19,"c_junction_fF":[4],"ej_ghz":[10]},
        "effective": {"n_qubits":2,"g_mhz":-250,"alpha_mhz":-100}})"),
                         doctest::Contains("exactly one"), ConfigError);

    // neither block
    CHECK_THROWS_AS(parse_config(R"({"experiment":"gate"})"), ConfigError);

    // unknown keys are hard errors
    CHECK_THROWS_WITH_AS(parse_config(R"({"experiment":"gate",
        "effective": {"n_qubits":2,"g_mhz":-250,"alpha_mhz":-100,"gmhz":-1}})"),
                         doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"experiment":"gate", "typo": 1,
        "effective": {"n_qubits":2,"g_mhz":-250,"alpha_mhz":-100}})"),
                         doctest::Contains("unknown key"), ConfigError);

    CHECK_THROWS_AS(parse_config(R"({"experiment":"dance",
        "effective": {"n_qubits":2,"g_mhz":-250,"alpha_mhz":-100}})"),
                    ConfigError);

    ExperimentConfig config = parse_config(with_out(kGateConfig, "x.csv"));
    CHECK(config.experiment == "gate");
    CHECK(config.effective->g == doctest::Approx(-250 * kTwoPi * 1e-3));
    CHECK(config.pulse.schemes.size() == 2);
    CHECK(config.noise.run_with);
    CHECK(config.noise.run_without);
    CHECK(config.digest().size() == 16);
}

TEST_CASE("gate runner emits both schemes and noise settings deterministically") {
    const std::string out1 = "test_gate_run1.csv";
    const std::string out2 = "test_gate_run2.csv";
    ExperimentConfig config = parse_config(with_out(kGateConfig, out1));
    const std::string written = run_experiment(config);
    CHECK(written == out1);

    const std::string body = slurp(out1);
    CHECK(body.find("# pcgsim") != std::string::npos);
    CHECK(body.find("# config-digest:") != std::string::npos);
    CHECK(body.find("gate_time_ns,scheme,noise_on,process_fidelity,leakage") != std::string::npos);
    CHECK(body.find("basic,0") != std::string::npos);
    CHECK(body.find("advanced,1") != std::string::npos);

    ExperimentConfig again = parse_config(with_out(kGateConfig, out2));
    run_experiment(again);
    // byte-identical data rows on rerun
    std::string body2 = slurp(out2);
    const auto strip = [](std::string text, const std::string& name) {
        size_t pos = text.find(name);
        REQUIRE(pos != std::string::npos);
        return text.substr(pos);
    };
    CHECK(strip(body, "gate_time_ns") == strip(body2, "gate_time_ns"));
    std::remove(out1.c_str());
    std::remove(out2.c_str());
}

TEST_CASE("spectrum runner writes one row per flux and method") {
    const char* text = R"({
      "experiment": "spectrum",
      "circuit": {"n_qubits": 2, "c_qubit_fF": [22, 22], "c_ancilla_fF": 19,
                  "c_junction_fF": [4, 4], "ej_ghz": [10, 11],
                  "flux_sweep": [0.0, 0.05]},
      "run": {"seed": 1, "out": "test_spectrum.csv", "methods": ["rwa", "sw2"]}
    })";
    const std::string path = run_experiment(parse_config(text));
    std::string body = slurp(path);
    int rows = 0;
    std::stringstream stream(body);
    std::string line;
    while (std::getline(stream, line)) {
        if (!line.empty() && line[0] != '#' && line.find("flux,") == std::string::npos) ++rows;
    }
    CHECK(rows == 4);
    CHECK(body.find("rwa") != std::string::npos);
    CHECK(body.find("sw2") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("zeroed cross terms give vanishing couplings") {
    // the sanity row: quartic cross terms removed by hand -> g = 0
    CircuitParams p = CircuitParams::reference_two_qubit();
    PotentialSeries series = potential_series(p);
    for (auto it = series.coeffs.begin(); it != series.coeffs.end();) {
        int involved = 0;
        for (uint8_t e : it->first) involved += (e > 0);
        if (involved >= 2) it = series.coeffs.erase(it);
        else ++it;
    }
    QuarticHamiltonian h = quantize_series(series, charging_energies(p), 2);
    EffectiveParams eff = effective_params(spectrum(h, SpectrumMethod::kSw2));
    CHECK(std::abs(eff.g_ghz[0]) < 1e-9);
}

TEST_CASE("experiment tag must match the runner") {
    ExperimentConfig config = parse_config(with_out(kGateConfig, "unused.csv"));
    CHECK_THROWS_AS(run_spectrum(config), ConfigError);
    CHECK_THROWS_AS(run_disorder(config), ConfigError);
}

TEST_CASE("csv numbers are stable") {
    CHECK(csv_number(0.1) == "0.1");
    CHECK(csv_number(-250.0) == "-250");
    CHECK(csv_number(1e-12) == "1e-12");
}
