#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pcgsim/pulses.hpp"

using namespace pcg;

namespace {

// Simpson quadrature oracle, independent of the closed-form area.
double simpson(const std::function<double(double)>& f, double a, double b, int n = 4000) {
    double sum = f(a) + f(b);
    const double h = (b - a) / n;
    for (int k = 1; k < n; ++k) sum += f(a + k * h) * ((k % 2) ? 4.0 : 2.0);
    return sum * h / 3.0;
}

}  // namespace

TEST_CASE("tukey envelope shape") {
    Envelope env{20.0, 0.5, 1.3};
    CHECK(tukey(10.0, env) == doctest::Approx(1.3));          // flat top
    CHECK(tukey(0.0, env) == doctest::Approx(0.0));
    CHECK(tukey(20.0, env) == doctest::Approx(0.0));
    CHECK(tukey(2.5, env) == doctest::Approx(1.3 * 0.5));     // halfway up the ramp

    // r = 1 is a Hann window
    Envelope hann{10.0, 1.0, 1.0};
    for (double t : {1.0, 3.3, 7.1}) {
        CHECK(tukey(t, hann) == doctest::Approx(0.5 * (1.0 - std::cos(2 * M_PI * t / 10.0))));
    }

    CHECK_THROWS_AS(tukey(-0.1, env), std::invalid_argument);
    CHECK_THROWS_AS(tukey(20.1, env), std::invalid_argument);
}

TEST_CASE("tukey area against quadrature") {
    for (double r : {0.0, 0.25, 0.5, 1.0}) {
        Envelope env{17.0, r, 0.8};
        const double numeric = simpson([&](double t) { return tukey(t, env); }, 0.0, 17.0);
        CHECK(numeric == doctest::Approx(tukey_area(env)).epsilon(1e-9));
        CHECK(tukey_area(env) == doctest::Approx(0.8 * 17.0 * (1.0 - r / 2.0)));
    }
}

TEST_CASE("pi calibration") {
    CHECK(calibrate_pi_amplitude(25.0, 0.5) == doctest::Approx(M_PI / 18.75));
    CHECK(calibrate_pi_amplitude(50.0, 0.5) ==
          doctest::Approx(0.5 * calibrate_pi_amplitude(25.0, 0.5)));

    Envelope env{25.0, 0.5, calibrate_pi_amplitude(25.0, 0.5)};
    const double area = simpson([&](double t) { return tukey(t, env); }, 0.0, 25.0, 20000);
    CHECK(std::abs(area - M_PI) < 1e-10);
}

TEST_CASE("two-qubit schedules") {
    const double g = -0.25 * kTwoPi, alpha = -0.1 * kTwoPi;
    Envelope env{25.0, 0.5, calibrate_pi_amplitude(25.0, 0.5)};
    StarkSchedule sched = stark_schedule_2q(env, g, alpha, 0.3, 0.01, Scheme::kAdvanced);

    // schedules vanish where the envelope does
    CHECK(sched.phase1.front() == doctest::Approx(0.3));
    CHECK(sched.omega.front() == 0.0);
    CHECK(sched.omega.back() == doctest::Approx(0.0));

    // constant drive: phi(T) - phi(0) = Omega^2 T / (2 alpha)
    Envelope flat{10.0, 0.0, 0.4};
    StarkSchedule fs = stark_schedule_2q(flat, g, alpha, 0.0, 0.001, Scheme::kAdvanced);
    CHECK(fs.phase1.back() == doctest::Approx(0.4 * 0.4 * 10.0 / (2.0 * alpha)).epsilon(1e-9));
    CHECK(fs.int_delta_q == doctest::Approx(-0.4 * 0.4 * 10.0 / (4.0 * g)).epsilon(1e-9));

    // even in the drive sign
    Envelope neg = flat;
    neg.amplitude = -0.4;
    StarkSchedule ns = stark_schedule_2q(neg, g, alpha, 0.0, 0.001, Scheme::kAdvanced);
    CHECK(ns.phase1.back() == doctest::Approx(fs.phase1.back()));

    // basic scheme keeps a constant phase
    StarkSchedule basic = stark_schedule_2q(env, g, alpha, 0.3, 0.01, Scheme::kBasic);
    for (double p : basic.phase1) CHECK(p == 0.3);
    CHECK(basic.int_delta_q == 0.0);

    CHECK_THROWS_AS(stark_schedule_2q(env, 0.0, alpha, 0.0, 0.01, Scheme::kAdvanced),
                    std::invalid_argument);
    CHECK_THROWS_AS(stark_schedule_2q(env, g, 0.0, 0.0, 0.01, Scheme::kAdvanced),
                    std::invalid_argument);
}

TEST_CASE("four-qubit schedules") {
    const double g = -0.2 * kTwoPi, alpha = -0.1 * kTwoPi;

    // constant drive: chi = Omega^2 T / (24 g)
    Envelope flat{10.0, 0.0, 0.4};
    StarkSchedule fs = stark_schedule_4q(flat, g, alpha, 0.1, 0.2, 0.001, Scheme::kAdvanced);
    CHECK(fs.chi == doctest::Approx(0.4 * 0.4 * 10.0 / (24.0 * g)).epsilon(1e-9));

    // all schedules zero without drive
    Envelope zero{10.0, 0.0, 0.0};
    StarkSchedule zs = stark_schedule_4q(zero, g, alpha, 0.1, 0.2, 0.01, Scheme::kAdvanced);
    CHECK(zs.chi == 0.0);
    CHECK(zs.int_delta_p1 == 0.0);
    for (size_t k = 0; k < zs.phase1.size(); ++k) {
        CHECK(zs.phase1[k] == doctest::Approx(0.1));
        CHECK(zs.phase3[k] == doctest::Approx(0.2));
    }

    // delta_P3 pointwise value: delta_Q + Omega^2/(8g) - Omega^2/(2 alpha)
    const double w2 = 0.4 * 0.4;
    const double expected_p3 = (-w2 / (6 * g) + w2 / (8 * g) - w2 / (2 * alpha)) * 10.0;
    CHECK((0.2 - fs.phase3.back()) == doctest::Approx(expected_p3).epsilon(1e-9));

    // phase schedules are continuous
    StarkSchedule sched = stark_schedule_4q(Envelope{30.0, 0.5, 0.12}, g, alpha, 0.0, 0.0, 0.01,
                                            Scheme::kAdvanced);
    for (size_t k = 1; k < sched.phase1.size(); ++k) {
        CHECK(std::abs(sched.phase1[k] - sched.phase1[k - 1]) < 1e-3);
    }

    // pole at 2 alpha = 4 g reported by name
    CHECK_THROWS_WITH_AS(
        stark_schedule_4q(flat, -0.1 * kTwoPi, -0.2 * kTwoPi, 0, 0, 0.01, Scheme::kAdvanced),
        doctest::Contains("resonance"), std::invalid_argument);
}
