#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pcgsim/dynamics.hpp"
#include "pcgsim/metrics.hpp"

using namespace pcg;

namespace {

const Complex kI(0.0, 1.0);

// Matrix-exponential propagation oracle for a constant Hermitian generator.
Matrix expm_unitary(const Matrix& h, double t) {
    auto [evals, evecs] = eig_hermitian(h);
    Vector phases(evals.size());
    for (int k = 0; k < evals.size(); ++k) phases(k) = std::exp(-kI * evals(k) * t);
    return evecs * phases.asDiagonal() * evecs.adjoint();
}

DeviceModel two_qubit_model() {
    DeviceModel m;
    m.n_qubits = 2;
    m.g = -0.25 * kTwoPi;
    m.alpha = -0.10 * kTwoPi;
    return m;
}

DeviceModel four_qubit_model() {
    DeviceModel m;
    m.n_qubits = 4;
    m.g = -0.20 * kTwoPi;
    m.alpha = -0.10 * kTwoPi;
    return m;
}

}  // namespace

TEST_CASE("single-mode relaxation matches the analytic decay") {
    // one 3-level mode with L = b at rate 1/T1; start in |1>
    HilbertSpace space = compose({{"m", 3}});
    const double t1 = 120.0;
    Matrix rho0 = Matrix::Zero(3, 3);
    rho0(1, 1) = 1.0;
    std::vector<CollapseTerm> collapse = {{ladder(3).cast<Complex>(), 1.0 / t1}};
    auto h = [](double) { return Matrix::Zero(3, 3); };
    EvolveOptions options;
    options.dt = 0.02;
    EvolutionResult res = gksl_evolve(DensityMatrix(space, rho0), h, collapse, 60.0, options);
    CHECK(std::abs(res.final_state.mat(1, 1).real() - std::exp(-60.0 / t1)) < 1e-6);
    CHECK(res.trace_drift < 1e-9);
}

TEST_CASE("pure dephasing decays the nearest-level coherence at 1/T_phi") {
    HilbertSpace space = compose({{"m", 2}});
    const double tphi = 80.0;
    Matrix rho0(2, 2);
    rho0 << 0.5, 0.5, 0.5, 0.5;
    std::vector<CollapseTerm> collapse = {{number_op(2).cast<Complex>(), 2.0 / tphi}};
    auto h = [](double) { return Matrix::Zero(2, 2); };
    EvolveOptions options;
    options.dt = 0.02;
    EvolutionResult res = gksl_evolve(DensityMatrix(space, rho0), h, collapse, 40.0, options);
    CHECK(std::abs(res.final_state.mat(0, 1).real() - 0.5 * std::exp(-40.0 / tphi)) < 1e-6);
}

TEST_CASE("unitary limit matches the matrix-exponential oracle") {
    HilbertSpace space = compose({{"a", 2}, {"b", 3}});
    Matrix h = Matrix::Zero(6, 6);
    h(0, 3) = Complex(0.2, 0.1);
    h(3, 0) = Complex(0.2, -0.1);
    h(1, 1) = 0.7;
    h(2, 4) = 0.3;
    h(4, 2) = 0.3;
    h(5, 5) = -0.4;
    Vector psi0 = Vector::Zero(6);
    psi0(0) = std::sqrt(0.5);
    psi0(3) = std::sqrt(0.3);
    psi0(5) = -std::sqrt(0.2);
    DensityMatrix rho0(space, psi0 * psi0.adjoint());

    EvolveOptions options;
    options.dt = 0.002;
    EvolutionResult res =
        gksl_evolve(rho0, [&](double) { return h; }, {}, 12.0, options);
    const Matrix u = expm_unitary(h, 12.0);
    const Matrix expected = u * rho0.mat * u.adjoint();
    CHECK((res.final_state.mat - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("too coarse a step is reported") {
    HilbertSpace space = compose({{"m", 2}});
    Matrix rho0(2, 2);
    rho0 << 1, 0, 0, 0;
    Matrix h(2, 2);
    h << 0, 8.0, 8.0, 0;  // fast rotation
    EvolveOptions options;
    options.dt = 0.4;
    CHECK_THROWS_WITH_AS(
        gksl_evolve(DensityMatrix(space, rho0), [&](double) { return h; }, {}, 40.0, options),
        doctest::Contains("reduce dt"), std::runtime_error);
}

TEST_CASE("drive hamiltonian resonances") {
    DeviceModel m = two_qubit_model();
    DriveProgram prog = pcf_program_2q(m, 25.0, 0.5, 0.0, Scheme::kBasic, 0.01);
    HilbertSpace space = m.space();

    Operator h = drive_hamiltonian_2q(m, prog, 12.5);
    CHECK(h.is_hermitian(1e-12));
    // odd-parity block: ancilla 0 <-> 1 exactly resonant (zero diagonal splitting)
    CHECK(h.mat(space.flat_index({0, 1, 1}), space.flat_index({0, 1, 1})).real() ==
          doctest::Approx(0.0));
    // even blocks detuned by -+ g
    CHECK(h.mat(space.flat_index({0, 0, 1}), space.flat_index({0, 0, 1})).real() ==
          doctest::Approx(-m.g));
    CHECK(h.mat(space.flat_index({1, 1, 1}), space.flat_index({1, 1, 1})).real() ==
          doctest::Approx(+m.g));
    // drive amplitude on the resonant transition is -Omega/2 at phi = 0
    CHECK(h.mat(space.flat_index({0, 1, 1}), space.flat_index({0, 1, 0})).real() ==
          doctest::Approx(-0.5 * tukey(12.5, Envelope{25.0, 0.5, calibrate_pi_amplitude(25, 0.5)})));

    // no drive freezes populations
    DriveProgram idle = idle_program(10.0, 0.01);
    Operator h_idle = drive_hamiltonian_2q(m, idle, 5.0);
    CHECK((h_idle.mat - Matrix(h_idle.mat.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);

    DeviceModel m4 = four_qubit_model();
    DriveProgram prog4 = pcf_program_4q(m4, 30.0, 0.5, 0.0, Scheme::kBasic, 0.01);
    HilbertSpace s4 = m4.space();
    Operator h4 = drive_hamiltonian_4q(m4, prog4, 15.0);
    CHECK(h4.is_hermitian(1e-12));
    // weight-1 block sits at Delta = -g, weight-0 at -2g
    CHECK(h4.mat(s4.flat_index({1, 0, 0, 0, 1}), s4.flat_index({1, 0, 0, 0, 1})).real() ==
          doctest::Approx(-m4.g));
    CHECK(h4.mat(s4.flat_index({0, 0, 0, 0, 1}), s4.flat_index({0, 0, 0, 0, 1})).real() ==
          doctest::Approx(-2.0 * m4.g));
}

TEST_CASE("pcf drive excites the ancilla only for odd parity") {
    DeviceModel m = two_qubit_model();
    DriveProgram prog = pcf_program_2q(m, 25.0, 0.5, 0.0, Scheme::kAdvanced, 0.01);
    EvolveOptions options;
    HilbertSpace space = m.space();

    DensityMatrix odd = pure_state(basis_state(space, {1, 0, 0}));
    options.store_populations = true;
    EvolutionResult res = evolve_device(m, prog, odd, options);
    const double excited = res.final_state.mat(space.flat_index({1, 0, 1}),
                                               space.flat_index({1, 0, 1})).real();
    CHECK(excited > 0.97);

    // stored population traces: the ancilla excited level rises monotonically
    // through the first half of the pulse
    REQUIRE(res.populations.size() > 10);
    const int target = space.flat_index({1, 0, 1});
    double quarter = 0.0, half = 0.0;
    for (size_t k = 0; k < res.times.size(); ++k) {
        if (res.times[k] <= 6.25) quarter = res.populations[k][target];
        if (res.times[k] <= 12.5) half = res.populations[k][target];
    }
    CHECK(quarter < half);
    CHECK(half < excited);
    options.store_populations = false;

    DensityMatrix even = pure_state(basis_state(space, {0, 0, 0}));
    EvolutionResult res_even = evolve_device(m, prog, even, options);
    const double stays = res_even.final_state.mat(space.flat_index({0, 0, 0}),
                                                  space.flat_index({0, 0, 0})).real();
    CHECK(stays > 0.99);
    CHECK(res_even.leakage < 1e-3);
}

TEST_CASE("blocked fast path agrees with the dense propagator") {
    DeviceModel m = two_qubit_model();
    m.g_zz = 0.004 * kTwoPi;

    SUBCASE("with qubit relaxation and dephasing") { m.set_noise(2.0, 3.0); }
    SUBCASE("unitary") {}

    DriveProgram prog = pcf_program_2q(m, 8.0, 0.5, 0.4, Scheme::kAdvanced, 0.01);
    HilbertSpace space = m.space();
    Vector psi = Vector::Zero(12);
    psi(space.flat_index({1, 0, 0})) = std::sqrt(0.4);
    psi(space.flat_index({0, 0, 0})) = std::sqrt(0.35);
    psi(space.flat_index({1, 1, 1})) = -std::sqrt(0.25);
    DensityMatrix rho0(space, psi * psi.adjoint());

    EvolveOptions blocked;
    EvolutionResult fast = evolve_device(m, prog, rho0, blocked);
    EvolveOptions dense = blocked;
    dense.use_blocked = false;
    EvolutionResult ref = evolve_device(m, prog, rho0, dense);

    CHECK((fast.final_state.mat - ref.final_state.mat).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(fast.leakage == doctest::Approx(ref.leakage).epsilon(1e-6));
}

TEST_CASE("halving the step changes the final state below tolerance") {
    DeviceModel m = two_qubit_model();
    m.set_noise(40.0, 40.0);
    HilbertSpace space = m.space();
    DensityMatrix rho0 = pure_state(basis_state(space, {1, 0, 0}));

    DriveProgram coarse = pcf_program_2q(m, 25.0, 0.5, 0.0, Scheme::kAdvanced, 0.01);
    DriveProgram fine = pcf_program_2q(m, 25.0, 0.5, 0.0, Scheme::kAdvanced, 0.005);
    EvolveOptions options;
    EvolutionResult a = evolve_device(m, coarse, rho0, options);
    EvolutionResult b = evolve_device(m, fine, rho0, options);
    CHECK((a.final_state.mat - b.final_state.mat).norm() < 1e-6);
}

TEST_CASE("identity program gives the identity channel") {
    DeviceModel m = two_qubit_model();
    m.g = 0.0;  // zero detunings in the frame
    DriveProgram idle = idle_program(10.0, 0.01);
    EvolveOptions options;
    ProcessMap map = simulate_channel(m, idle, options, 2);
    for (int i = 0; i < map.d; ++i) {
        for (int j = 0; j < map.d; ++j) {
            Matrix expected = Matrix::Zero(map.d, map.d);
            expected(i, j) = 1.0;
            CHECK((map.e(i, j) - expected).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
    CHECK(map.average_leakage() < 1e-10);
}

TEST_CASE("channel of a coherent evolution equals conjugation by its unitary") {
    DeviceModel m = two_qubit_model();
    // constant resonant drive: the Hamiltonian is time-independent, so the
    // matrix exponential is an exact oracle
    DriveProgram prog = cw_tone_program(6.0, 0.002, 0.0, 0.31, 0.0);
    const Matrix u = expm_unitary(drive_hamiltonian(m, prog, 3.0).mat, 6.0);

    EvolveOptions options;
    ProcessMap map = simulate_channel(m, prog, options, 2);
    auto comp = [](const Matrix& full, int i, int j) { return full(3 * (i / 2) + i % 2, 3 * (j / 2) + j % 2); };
    double worst = 0.0;
    for (int i = 0; i < map.d; ++i)
        for (int j = 0; j < map.d; ++j) {
            Matrix expected = Matrix::Zero(12, 12);
            Matrix in = Matrix::Zero(12, 12);
            in(3 * (i / 2) + i % 2, 3 * (j / 2) + j % 2) = 1.0;
            expected = u * in * u.adjoint();
            Matrix trunc(map.d, map.d);
            for (int r = 0; r < map.d; ++r)
                for (int c = 0; c < map.d; ++c) trunc(r, c) = comp(expected, r, c);
            worst = std::max(worst, (map.e(i, j) - trunc).cwiseAbs().maxCoeff());
        }
    CHECK(worst < 1e-8);
}

TEST_CASE("frame correction is diagonal and preserves populations") {
    DeviceModel m = two_qubit_model();
    DriveProgram prog = pcf_program_2q(m, 20.0, 0.5, 0.0, Scheme::kAdvanced, 0.01);
    EvolveOptions options;
    ProcessMap map = simulate_channel(m, prog, options, 2);
    ProcessMap corrected = frame_correction(map, m, prog);
    for (int i = 0; i < map.d; ++i) {
        for (int r = 0; r < map.d; ++r) {
            CHECK(corrected.e(i, i)(r, r).real() ==
                  doctest::Approx(map.e(i, i)(r, r).real()).epsilon(1e-12));
        }
    }

    // zero schedules and zero static terms leave the map unchanged
    DeviceModel trivial = m;
    trivial.g = 0.0;
    trivial.alpha = 0.0;
    DriveProgram idle = idle_program(5.0, 0.01);
    ProcessMap base = simulate_channel(trivial, idle, options, 1);
    ProcessMap same = frame_correction(base, trivial, idle);
    for (int i = 0; i < base.d; ++i)
        for (int j = 0; j < base.d; ++j) {
            CHECK((same.e(i, j) - base.e(i, j)).cwiseAbs().maxCoeff() < 1e-12);
        }
}

TEST_CASE("zz phase rate recovers a diagonal coupling") {
    DeviceModel m = two_qubit_model();
    ZzProbeOptions probe;
    probe.window = 150.0;

    SUBCASE("zero coupling reads zero") {
        CHECK(std::abs(zz_phase_rate(m, std::nullopt, probe)) < 1e-6);
    }
    SUBCASE("finite coupling within 2 percent") {
        m.g_zz = 0.004 * kTwoPi;
        const double rate = zz_phase_rate(m, std::nullopt, probe);
        CHECK(rate == doctest::Approx(m.g_zz).epsilon(0.02));
    }
    SUBCASE("overdriven probe reports leakage") {
        m.g_zz = 0.004 * kTwoPi;
        DriveProgram strong = cw_tone_program(probe.window, probe.dt, -0.5 * m.g, 1.8);
        CHECK_THROWS_WITH_AS(zz_phase_rate(m, strong, probe), doctest::Contains("leakage"),
                             std::runtime_error);
    }
}

TEST_CASE("cancellation tone suppresses the parasitic coupling") {
    DeviceModel m = two_qubit_model();
    m.g_zz = 0.0012 * kTwoPi;  // device-scale parasitic coupling
    CancellationTone tone = cancellation_tone(m, 150.0, 0.02);
    CHECK(tone.converged);
    CHECK(tone.detuning == doctest::Approx(-0.5 * m.g));
    CHECK(std::abs(tone.residual) <= 0.1 * std::abs(tone.undriven));

    // flipped parasitic sign flips the correction direction
    DeviceModel flipped = m;
    flipped.g_zz = -m.g_zz;
    CancellationTone mirror = cancellation_tone(flipped, 150.0, 0.02);
    CHECK(mirror.converged);
    CHECK(mirror.detuning == doctest::Approx(+0.5 * m.g));
}

TEST_CASE("decoherence only adds error") {
    DeviceModel clean = two_qubit_model();
    DeviceModel noisy = clean;
    noisy.set_noise(40.0, 40.0);
    DeviceModel worse = clean;
    worse.set_noise(4.0, 40.0);

    EvolveOptions options;
    options.dt = 0.02;
    auto fidelity = [&](const DeviceModel& m) {
        DriveProgram prog = pcf_program_2q(m, 22.0, 0.5, 0.0, Scheme::kAdvanced, options.dt);
        ProcessMap map = simulate_channel(m, prog, options, 2);
        map = frame_correction(map, m, prog);
        return process_fidelity(choi(map), pcf_unitary(2, 0.0).mat);
    };
    const double f_clean = fidelity(clean);
    const double f_noisy = fidelity(noisy);
    const double f_worse = fidelity(worse);
    CHECK(f_clean > f_noisy);
    CHECK(f_noisy > f_worse);
}
