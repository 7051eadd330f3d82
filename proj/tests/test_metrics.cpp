#include <doctest.h>

#include <cmath>

#include "ajscc/metrics.hpp"

using namespace ajscc;

TEST_SUITE("metrics") {

TEST_CASE("identical signals score perfectly") {
    const Signal s({0.0, 0.3, 0.9, 0.3, 0.0, 0.7, 0.0}, 10.0);
    const std::vector<double> events{0.2, 0.5};
    const Reconstruction r = compute_metrics(s, s, ValueRange(0.0, 1.0), std::span<const double>(events), 0.05);
    CHECK(r.error.mse == 0.0);
    CHECK(r.error.rmse == 0.0);
    CHECK(r.error.samples == 7);
    REQUIRE(r.pulses);
    CHECK(r.pulses->recall == 1.0);
    CHECK(r.pulses->precision == 1.0);
}

TEST_CASE("constant 0.1 offset has RMSE 0.1") {
    std::vector<double> a(100), b(100);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::sin(0.1 * static_cast<double>(i));
        b[i] = a[i] + 0.1;
    }
    const ErrorMetrics m = error_metrics(Signal(a, 50.0), Signal(b, 50.0), ValueRange(-1.0, 1.0));
    CHECK(m.rmse == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(m.mse == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(m.nrmse_pct == doctest::Approx(5.0).epsilon(1e-12));
    CHECK_FALSE(compute_metrics(Signal(a, 50.0), Signal(b, 50.0), ValueRange(-1.0, 1.0)).pulses);
}

TEST_CASE("recovered signal is held onto the original grid") {
    // Recovered at 1/4 the rate: each value covers four original samples.
    const Signal original({1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 5.0}, 4.0);
    const Signal recovered({1.0, 2.0}, 1.0);
    const ErrorMetrics m = error_metrics(original, recovered, ValueRange(0.0, 10.0));
    CHECK(m.samples == 8);
    CHECK(m.mse == 0.0);
}

TEST_CASE("empty inputs are an error") {
    const Signal s({1.0}, 1.0);
    CHECK_THROWS_AS(error_metrics(Signal({}, 1.0), s, ValueRange(0.0, 1.0)), Error);
    CHECK_THROWS_AS(error_metrics(s, Signal({}, 1.0), ValueRange(0.0, 1.0)), Error);
}

TEST_CASE("pulse detection finds local maxima above the level") {
    const Signal s({0.0, 0.5, 0.0, 0.0, 0.7, 0.7, 0.2, 0.3, 0.3, 0.4, 0.0, 0.6}, 1.0);
    CHECK(detect_pulses(s) == std::vector<double>{1.0, 4.0, 9.0, 11.0});
    CHECK(detect_pulses(s, 0.45) == std::vector<double>{1.0, 4.0, 11.0});
    CHECK(detect_pulses(Signal(std::vector<double>(20, 0.0), 1.0)).empty());
}

TEST_CASE("ten pulses with one missed and one spurious") {
    // Expected pulses at 1..10 s; detections miss 6 s, jitter the rest and add one at 12.5 s.
    std::vector<double> expected, detected;
    for (int i = 1; i <= 10; ++i) {
        expected.push_back(static_cast<double>(i));
        if (i != 6) detected.push_back(static_cast<double>(i) + (i % 2 ? 0.004 : -0.006));
    }
    detected.push_back(12.5);
    const PulseMetrics m = match_pulses(expected, detected, 0.0136);
    CHECK(m.matched == 9);
    CHECK(m.recall == doctest::Approx(0.9));
    CHECK(m.precision == doctest::Approx(0.9));
    CHECK(m.expected == 10);
    CHECK(m.detected == 10);
}

TEST_CASE("greedy matching prefers the nearest pair") {
    // 1.00 could match either detection; the closer one (1.01) wins, leaving 0.97 for 0.96.
    const std::vector<double> expected{0.96, 1.0};
    const std::vector<double> detected{0.97, 1.01};
    CHECK(match_pulses(expected, detected, 0.05).matched == 2);
    // Each detection is used at most once.
    const std::vector<double> crowded{1.0, 1.001, 0.999};
    const PulseMetrics m = match_pulses(crowded, std::vector<double>{1.0}, 0.01);
    CHECK(m.matched == 1);
    CHECK(m.recall == doctest::Approx(1.0 / 3.0));
    CHECK(m.precision == 1.0);
}

TEST_CASE("matching with nothing expected or detected") {
    const std::vector<double> none;
    const std::vector<double> one{1.0};
    auto m = match_pulses(none, none, 0.1);
    CHECK(m.recall == 1.0);
    CHECK(m.precision == 1.0);
    m = match_pulses(one, none, 0.1);
    CHECK(m.recall == 0.0);
    m = match_pulses(none, one, 0.1);
    CHECK(m.precision == 0.0);
}

}  // TEST_SUITE
