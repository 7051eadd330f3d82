#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ajscc/sources.hpp"
#include "oracles.hpp"

using namespace ajscc;

namespace {

CytometryParams short_run(double duration_s) {
    CytometryParams p;
    p.duration_s = duration_s;
    return p;
}

Signal envelope_with(const CytometryParams& p, std::vector<double> arrivals, std::size_t n) {
    const ImpedanceEnvelope env(p, std::move(arrivals));
    std::vector<double> a(n);
    env.render(0, p.sim_rate_hz, a);
    return Signal(std::move(a), p.sim_rate_hz);
}

double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TEST_SUITE("sources") {

TEST_CASE("transit pulse width from the channel geometry") {
    // 0.1 uL/min through 30 x 20 um is 2.778 mm/s; (30 + 7.8) um / 2.778 mm/s.
    CHECK(transit_pulse_width_s(0.1, 30.0, 20.0, 7.8) == doctest::Approx(0.013608).epsilon(1e-4));
}

TEST_CASE("cytometry parameter invariants") {
    CHECK_NOTHROW(CytometryParams{}.validate());
    const auto rejects = [](auto mutate) {
        CytometryParams p;
        mutate(p);
        CHECK_THROWS_AS(p.validate(), Error);
    };
    rejects([](CytometryParams& p) { p.lpf_cutoff_hz = 300e3; });
    rejects([](CytometryParams& p) { p.pulse_width_s = 1e-6; });
    rejects([](CytometryParams& p) { p.delta_r_ohm = -1.0; });
    rejects([](CytometryParams& p) { p.event_rate_hz = 40.0; });
}

TEST_CASE("poisson arrivals: 10 Hz over 10 s stays in [50, 150]") {
    // Mean 100, sd 10: [50, 150] is a +/- 5 sd interval, wider than 99.99%.
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        CytometryParams p = short_run(10.0);
        p.event_rate_hz = 10.0;
        p.pulse_width_s = 0.01;
        p.seed = seed;
        const auto t = bead_arrivals(p);
        CHECK(t.size() >= 50);
        CHECK(t.size() <= 150);
        CHECK(std::is_sorted(t.begin(), t.end()));
        CHECK(t.front() >= 0.0);
        CHECK(t.back() < 10.0);
    }
}

TEST_CASE("envelope is a constant baseline without visible events") {
    SUBCASE("zero resistance change") {
        CytometryParams p = short_run(0.01);
        p.delta_r_ohm = 0.0;
        p.event_rate_hz = 5.0;
        const Signal e = gen_impedance_envelope(p);
        CHECK(std::all_of(e.samples().begin(), e.samples().end(), [](double v) { return v == 1.0; }));
    }
    SUBCASE("zero event rate") {
        CytometryParams p = short_run(0.01);
        p.event_rate_hz = 0.0;
        const Signal e = gen_impedance_envelope(p);
        CHECK(e.size() == 20000);
        CHECK(std::all_of(e.samples().begin(), e.samples().end(), [](double v) { return v == 1.0; }));
    }
}

TEST_CASE("envelope bump: height and full width at half maximum") {
    CytometryParams p = short_run(0.1);
    const ImpedanceEnvelope env(p, {0.05});
    const double h = p.delta_r_ohm / p.baseline_r_ohm;
    CHECK(env.at(0.05) == doctest::Approx(1.0 + h).epsilon(1e-12));
    CHECK(env.at(0.05 + p.pulse_width_s / 2.0) == doctest::Approx(1.0 + h / 2.0).epsilon(1e-12));
    CHECK(env.at(0.05 - p.pulse_width_s / 2.0) == doctest::Approx(1.0 + h / 2.0).epsilon(1e-12));
    p.pulse_polarity = -1;
    p.delta_r_ohm = 5e3;
    CHECK(ImpedanceEnvelope(p, {0.05}).at(0.05) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("envelope duration too short is an error") {
    CHECK_THROWS_AS(gen_impedance_envelope(short_run(0.0)), Error);
    CHECK_THROWS_AS(gen_impedance_envelope(short_run(1e-9)), Error);
}

TEST_CASE("generators are bit-reproducible") {
    CytometryParams p = short_run(0.5);
    p.event_rate_hz = 10.0;
    p.pulse_width_s = 0.01;
    CHECK(gen_impedance_envelope(p) == gen_impedance_envelope(p));
    CHECK(synthesize_cytometry(p, 1000.0).readout == synthesize_cytometry(p, 1000.0).readout);
    GsrParams g;
    g.duration_s = 100.0;
    CHECK(gen_gsr(g) == gen_gsr(g));
}

TEST_CASE("butterworth magnitude matches the bilinear closed form") {
    const ButterworthLowpass lpf(4, 10e3, 2e6);
    for (double f : {0.0, 1e3, 5e3, 8e3, 10e3, 20e3, 100e3, 999e3}) {
        CHECK(lpf.magnitude(f) == doctest::Approx(oracle::butterworth_bilinear_magnitude(4, 10e3, 2e6, f))
                                      .epsilon(1e-9)
                                      .scale(1e-12));
    }
    CHECK(lpf.magnitude(10e3) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("lock-in: constant envelope settles to gain * a / 2") {
    const CytometryParams p = short_run(0.01);
    for (double a : {1.0, 2.5, 7.0}) {
        const Signal out = lock_in_chain(Signal(std::vector<double>(20000, a), p.sim_rate_hz), p);
        const double expected = p.lock_in_gain() * a / 2.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (std::abs(out[i] - expected) > 0.01 * expected) {
                FAIL_CHECK("sample " << i << " = " << out[i] << ", expected " << expected);
                break;
            }
        }
    }
}

TEST_CASE("lock-in: zero envelope gives zero output") {
    const CytometryParams p = short_run(0.01);
    const Signal out = lock_in_chain(Signal(std::vector<double>(5000, 0.0), p.sim_rate_hz), p);
    CHECK(max_abs(out.samples()) == 0.0);
}

TEST_CASE("lock-in: sample rate below 4 * f0 is rejected") {
    const CytometryParams p = short_run(0.01);
    CHECK_THROWS_AS(lock_in_chain(Signal(std::vector<double>(100, 1.0), 1.9e6), p), Error);
}

TEST_CASE("lock-in: 2 f0 mixing image is at least 40 dB down") {
    // At 3 MHz the image at 1 MHz is off Nyquist and fits exactly 3 samples per period.
    CytometryParams p = short_run(0.01);
    p.sim_rate_hz = 3e6;
    const Signal out = lock_in_chain(Signal(std::vector<double>(30000, 1.0), p.sim_rate_hz), p);
    const double image_in = p.lock_in_gain() / 2.0;  // cos^2 = (1 + cos 2 theta) / 2
    const double image_out = oracle::tone_amplitude(out.samples(), 2.0 * p.f0_hz, p.sim_rate_hz);
    CHECK(20.0 * std::log10(image_out / image_in) <= -40.0);
}

TEST_CASE("lock-in: tone envelope follows the analytic magnitude response") {
    const CytometryParams p = short_run(0.1);
    for (double fm : {1e3, 3e3, 4.5e3}) {
        const std::size_t n = 200000;
        std::vector<double> a(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = 1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * fm * static_cast<double>(i) / p.sim_rate_hz);
        }
        const Signal out = lock_in_chain(Signal(a, p.sim_rate_hz), p);
        // Skip the start-up transient; the rest spans whole periods of fm.
        const std::span<const double> tail = out.samples().subspan(40000);
        const double measured = oracle::tone_amplitude(tail, fm, p.sim_rate_hz) / (p.lock_in_gain() * 0.5 / 2.0);
        const double analytic = oracle::butterworth_bilinear_magnitude(4, p.lpf_cutoff_hz, p.sim_rate_hz, fm);
        CHECK(measured == doctest::Approx(analytic).epsilon(0.02));
    }
}

TEST_CASE("lock-in: gaussian pulse keeps its height and timing") {
    const CytometryParams p = short_run(0.1);
    const double arrival = 0.0500003;
    const Signal env = envelope_with(p, {arrival}, 200000);
    const Signal out = lock_in_chain(env, p);
    const auto peak = std::max_element(out.samples().begin(), out.samples().end());
    const double peak_t = out.time_of(static_cast<std::size_t>(peak - out.samples().begin()));
    const double height = 1.0 + p.delta_r_ohm / p.baseline_r_ohm;
    CHECK(*peak == doctest::Approx(p.lock_in_gain() * height / 2.0).epsilon(0.05));
    const double delay = oracle::butterworth_dc_group_delay(4, p.lpf_cutoff_hz);
    CHECK(std::abs(peak_t - arrival) <= delay + 2.0 / p.sim_rate_hz);
    // Baseline far from the pulse sits at gain / 2.
    CHECK(out[1000] == doctest::Approx(p.lock_in_gain() / 2.0).epsilon(1e-3));
}

TEST_CASE("lock-in chain is linear in the envelope") {
    const CytometryParams p = short_run(0.02);
    const std::size_t n = 40000;
    const Signal a = envelope_with(p, {0.004, 0.013}, n);
    const Signal b = envelope_with(p, {0.009}, n);
    std::vector<double> mix(n);
    for (std::size_t i = 0; i < n; ++i) mix[i] = 2.0 * a[i] - 3.0 * b[i];
    const Signal ya = lock_in_chain(a, p);
    const Signal yb = lock_in_chain(b, p);
    const Signal ymix = lock_in_chain(Signal(mix, p.sim_rate_hz), p);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(ymix[i] - (2.0 * ya[i] - 3.0 * yb[i])));
    CHECK(err <= 1e-9 * max_abs(ymix.samples()));
}

TEST_CASE("synthesized cytometry equals the decimated whole-signal chain") {
    CytometryParams p = short_run(0.2);
    p.event_rate_hz = 20.0;
    p.pulse_width_s = 0.005;
    const auto trace = synthesize_cytometry(p, 1000.0);
    const Signal full = lock_in_chain(gen_impedance_envelope(p), p);
    REQUIRE(trace.readout.size() == 200);
    CHECK(trace.readout.sample_rate_hz() == 1000.0);
    for (std::size_t i = 0; i < trace.readout.size(); ++i) CHECK(trace.readout[i] == full[i * 2000]);
    CHECK(trace.arrivals == bead_arrivals(p));
    CHECK_THROWS_AS(synthesize_cytometry(p, 1234.5), Error);
}

TEST_CASE("gsr: tonic level only") {
    GsrParams g;
    g.drift_rate_per_s = 0.0;
    g.random_event_rate_hz = 0.0;
    g.tonic_level = 0.3;
    const Signal s = gen_gsr(g);
    CHECK(s.size() == 6000);
    CHECK(std::all_of(s.samples().begin(), s.samples().end(), [](double v) { return v == 0.3; }));
}

TEST_CASE("gsr: single event peaks at the closed-form maximum") {
    GsrParams g;
    g.drift_rate_per_s = 0.0;
    g.random_event_rate_hz = 0.0;
    g.tonic_level = 0.1;
    g.sample_rate_hz = 1000.0;
    g.phasic_events = {{5.0, 0.4, 0.8, 4.0}};
    const Signal s = gen_gsr(g);
    const auto peak = std::max_element(s.samples().begin(), s.samples().end());
    const auto ip = static_cast<std::size_t>(peak - s.samples().begin());
    CHECK(s.time_of(ip) == doctest::Approx(5.0 + oracle::phasic_peak_time(0.8, 4.0)).epsilon(1e-3 / 6.0));
    CHECK(*peak - 0.1 == doctest::Approx(oracle::phasic_peak_value(0.4, 0.8, 4.0)).epsilon(1e-6));
    // Unimodal: non-decreasing up to the peak, non-increasing after it.
    CHECK(std::is_sorted(s.samples().begin(), peak + 1));
    CHECK(std::is_sorted(s.samples().rbegin(), s.samples().rbegin() + static_cast<std::ptrdiff_t>(s.size() - ip)));
    CHECK(s[4999] == 0.1);
}

TEST_CASE("gsr: two events superpose") {
    GsrParams g;
    g.drift_rate_per_s = 0.0;
    g.random_event_rate_hz = 0.0;
    g.tonic_level = 0.2;
    const PhasicEvent e1{5.0, 0.2, 1.0, 3.0}, e2{35.0, 0.25, 0.5, 4.0};
    g.phasic_events = {e1};
    const Signal s1 = gen_gsr(g);
    g.phasic_events = {e2};
    const Signal s2 = gen_gsr(g);
    g.phasic_events = {e1, e2};
    const Signal both = gen_gsr(g);
    for (std::size_t i = 0; i < both.size(); ++i) {
        CHECK(both[i] - 0.2 == doctest::Approx((s1[i] - 0.2) + (s2[i] - 0.2)).epsilon(1e-12).scale(1e-12));
    }
}

TEST_CASE("gsr: output stays inside its range") {
    GsrParams g;
    g.tonic_level = 0.8;
    g.drift_rate_per_s = 0.01;
    g.random_event_rate_hz = 0.3;
    const Signal s = gen_gsr(g);
    CHECK(*std::max_element(s.samples().begin(), s.samples().end()) <= 1.0);
    CHECK(*std::min_element(s.samples().begin(), s.samples().end()) >= 0.0);
}

TEST_CASE("gsr: invalid time constants are rejected") {
    GsrParams g;
    g.phasic_events = {{1.0, 0.1, 0.0, 1.0}};
    CHECK_THROWS_AS(gen_gsr(g), Error);
    g.phasic_events.clear();
    g.duration_s = 0.0;
    CHECK_THROWS_AS(gen_gsr(g), Error);
}

}  // TEST_SUITE
