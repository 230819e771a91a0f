#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pcgsim/circuit.hpp"
#include "pcgsim/dynamics.hpp"
#include "pcgsim/experiments.hpp"
#include "pcgsim/gates.hpp"
#include "pcgsim/hilbert.hpp"
#include "pcgsim/metrics.hpp"
#include "pcgsim/pulses.hpp"

namespace py = pybind11;
using namespace pcg;

PYBIND11_MODULE(_core, m) {
    m.doc() = "parity-controlled-gate device simulator";
    m.attr("__version__") = kVersion;

    // --- composite spaces and operators ---
    py::class_<ModeSpec>(m, "ModeSpec")
        .def(py::init<>())
        .def(py::init([](const std::string& label, int dim) {
                 return ModeSpec{label, dim};
             }),
             py::arg("label"), py::arg("dim"))
        .def_readwrite("label", &ModeSpec::label)
        .def_readwrite("dim", &ModeSpec::dim);

    py::class_<HilbertSpace>(m, "HilbertSpace")
        .def("total_dim", &HilbertSpace::total_dim)
        .def("num_modes", &HilbertSpace::num_modes)
        .def("mode_index", &HilbertSpace::mode_index)
        .def("levels_of", &HilbertSpace::levels_of)
        .def("flat_index", &HilbertSpace::flat_index);

    m.def("compose", &compose, py::arg("modes"));

    py::class_<Operator>(m, "Operator")
        .def_property_readonly("matrix", [](const Operator& op) { return op.mat; })
        .def("is_hermitian", &Operator::is_hermitian, py::arg("tol") = 1e-9)
        .def("is_unitary", &Operator::is_unitary, py::arg("tol") = 1e-12);

    py::class_<StateVector>(m, "StateVector")
        .def_property_readonly("amplitudes", [](const StateVector& s) { return s.amps; });

    py::class_<DensityMatrix>(m, "DensityMatrix")
        .def_property_readonly("matrix", [](const DensityMatrix& r) { return r.mat; })
        .def("trace", &DensityMatrix::trace_real);

    m.def("ladder", &ladder, py::arg("dim"));
    m.def("embed", &embed, py::arg("space"), py::arg("mode_label"), py::arg("local"));
    m.def(
        "eig_hermitian",
        [](const Matrix& a) { return eig_hermitian(a); },
        py::arg("matrix"));
    m.def("partial_trace", &partial_trace, py::arg("rho"), py::arg("keep"));
    m.def("basis_state", &basis_state, py::arg("space"), py::arg("levels"));

    // --- ideal gates ---
    m.def("parity_projectors", [](int n) {
        auto [p, q] = parity_projectors(n);
        return py::make_tuple(p.mat, q.mat);
    });
    m.def("pcf_unitary", [](int n, double phi) { return pcf_unitary(n, phi).mat; });
    m.def("pcp_unitary", [](int n, double phi) { return pcp_unitary(n, phi).mat; });
    m.def("modified_pcf_unitary", [](double p1, double p3, double chi) {
        return modified_pcf_unitary(p1, p3, chi).mat;
    });
    m.def("parity_kraus", [](int n) {
        auto [k0, k1] = parity_kraus(n);
        return py::make_tuple(k0.mat, k1.mat);
    });
    m.def("ghz_target", [](int n) { return ghz_target(n).amps; });
    m.def("readout_circuit_qubit1", [](int n) { return readout_circuit_qubit1(n).mat; });

    // --- pulses ---
    py::class_<Envelope>(m, "Envelope")
        .def(py::init([](double gate_time, double taper, double amplitude) {
                 return Envelope{gate_time, taper, amplitude};
             }),
             py::arg("gate_time"), py::arg("taper"), py::arg("amplitude"))
        .def_readwrite("gate_time", &Envelope::gate_time)
        .def_readwrite("taper", &Envelope::taper)
        .def_readwrite("amplitude", &Envelope::amplitude);
    m.def("tukey", &tukey, py::arg("t"), py::arg("envelope"));
    m.def("tukey_area", &tukey_area);
    m.def("calibrate_pi_amplitude", &calibrate_pi_amplitude, py::arg("gate_time"),
          py::arg("taper"));

    // --- driven dynamics ---
    py::enum_<Scheme>(m, "Scheme")
        .value("BASIC", Scheme::kBasic)
        .value("ADVANCED", Scheme::kAdvanced);

    py::class_<DeviceModel>(m, "DeviceModel")
        .def(py::init([](int n_qubits, double g_mhz, double alpha_mhz, double g_zz_mhz) {
                 DeviceModel model;
                 model.n_qubits = n_qubits;
                 model.g = kTwoPi * 1e-3 * g_mhz;
                 model.alpha = kTwoPi * 1e-3 * alpha_mhz;
                 model.g_zz = kTwoPi * 1e-3 * g_zz_mhz;
                 return model;
             }),
             py::arg("n_qubits"), py::arg("g_mhz"), py::arg("alpha_mhz"),
             py::arg("g_zz_mhz") = 0.0)
        .def("set_noise", &DeviceModel::set_noise, py::arg("t1_us"), py::arg("tphi_us"))
        .def_readonly("n_qubits", &DeviceModel::n_qubits);

    py::class_<DriveProgram>(m, "DriveProgram")
        .def_readonly("total_time", &DriveProgram::total_time)
        .def_readonly("chi", &DriveProgram::chi);

    m.def("pcf_program_2q", &pcf_program_2q, py::arg("model"), py::arg("gate_time"),
          py::arg("taper"), py::arg("base_phase"), py::arg("scheme"), py::arg("dt"));
    m.def("pcf_program_4q", &pcf_program_4q, py::arg("model"), py::arg("gate_time"),
          py::arg("taper"), py::arg("phi"), py::arg("scheme"), py::arg("dt"));
    m.def("pcp_program_4q", &pcp_program_4q, py::arg("model"), py::arg("pulse_time"),
          py::arg("taper"), py::arg("phi"), py::arg("scheme"), py::arg("dt"));

    py::class_<ProcessMap>(m, "ProcessMap")
        .def_readonly("d", &ProcessMap::d)
        .def("e", [](const ProcessMap& map, int i, int j) { return map.e(i, j); })
        .def("average_leakage", &ProcessMap::average_leakage);

    m.def(
        "simulate_channel",
        [](const DeviceModel& model, const DriveProgram& program, double dt, int threads) {
            EvolveOptions options;
            options.dt = dt;
            return simulate_channel(model, program, options, threads);
        },
        py::arg("model"), py::arg("program"), py::arg("dt") = 0.01, py::arg("threads") = 1);
    m.def("frame_correction", &frame_correction, py::arg("map"), py::arg("model"),
          py::arg("program"));

    py::class_<ChoiState>(m, "ChoiState")
        .def_property_readonly("matrix", [](const ChoiState& c) { return c.rho; })
        .def("trace", &ChoiState::trace)
        .def("purity", &ChoiState::purity);

    m.def("choi", &choi, py::arg("map"));
    m.def("process_fidelity", &process_fidelity, py::arg("sim"), py::arg("ideal_unitary"));
    m.def(
        "state_fidelity",
        [](const Matrix& rho, const Matrix& sigma) { return state_fidelity(rho, sigma); },
        py::arg("rho"), py::arg("sigma"));

    // --- circuit quantization ---
    py::class_<CircuitParams>(m, "CircuitParams")
        .def_static("symmetric", &CircuitParams::symmetric, py::arg("n_qubits"),
                    py::arg("c_qubit_fF"), py::arg("c_ancilla_fF"), py::arg("c_junction_fF"),
                    py::arg("ej_ghz"), py::arg("flux"))
        .def_static("reference_two_qubit", &CircuitParams::reference_two_qubit)
        .def_static("reference_four_qubit", &CircuitParams::reference_four_qubit)
        .def_readwrite("flux", &CircuitParams::flux);

    py::class_<EffectiveParams>(m, "EffectiveParams")
        .def_readonly("omega_qubit_ghz", &EffectiveParams::omega_qubit_ghz)
        .def_readonly("omega_theta_ghz", &EffectiveParams::omega_theta_ghz)
        .def_readonly("omega_ancilla_ghz", &EffectiveParams::omega_ancilla_ghz)
        .def_readonly("alpha_ghz", &EffectiveParams::alpha_ghz)
        .def_readonly("g_ghz", &EffectiveParams::g_ghz)
        .def_readonly("g_zz_ghz", &EffectiveParams::g_zz_ghz);

    py::enum_<SpectrumMethod>(m, "SpectrumMethod")
        .value("RWA", SpectrumMethod::kRwa)
        .value("SW2", SpectrumMethod::kSw2)
        .value("EXACT", SpectrumMethod::kExact);

    m.def(
        "device_spectrum",
        [](const CircuitParams& params, SpectrumMethod method) {
            return effective_params(spectrum(quantize(params), method));
        },
        py::arg("params"), py::arg("method") = SpectrumMethod::kSw2);

    py::class_<FluxOptimization>(m, "FluxOptimization")
        .def_readonly("flux", &FluxOptimization::flux)
        .def_readonly("effective", &FluxOptimization::effective)
        .def_readonly("g_spread_ghz", &FluxOptimization::g_spread_ghz)
        .def_readonly("converged", &FluxOptimization::converged);

    m.def("optimize_flux", &optimize_flux, py::arg("params"), py::arg("budget") = 500,
          py::arg("restart_seed") = 7);

    // --- experiment runner ---
    m.def(
        "run_experiment_json",
        [](const std::string& json_text, const std::string& out_path, int threads) {
            ExperimentConfig config = parse_config(json_text);
            RunOverrides overrides;
            if (!out_path.empty()) overrides.out = out_path;
            if (threads > 0) overrides.threads = threads;
            return run_experiment(config, overrides);
        },
        py::arg("json_text"), py::arg("out_path") = "", py::arg("threads") = 0);
}
