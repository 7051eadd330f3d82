#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ajscc/fm_link.hpp"
#include "oracles.hpp"

using namespace ajscc;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

FmLinkParams link_with_hold(std::size_t hold) {
    FmLinkParams p;
    p.hold_window = hold;
    return p;
}

Signal held(std::vector<double> v, const FmLinkParams& p) {
    return Signal(std::move(v), p.fs_hz / static_cast<double>(p.hold_window));
}

std::size_t argmax(std::span<const double> x) {
    return static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
}

double mean_square(std::span<const double> x) {
    long double s = 0.0L;
    for (double v : x) s += static_cast<long double>(v) * v;
    return static_cast<double>(s / static_cast<long double>(x.size()));
}

}  // namespace

TEST_SUITE("fm_link") {

TEST_CASE("default band plan") {
    const BandPlan plan = make_band_plan(1, 11.0);
    REQUIRE(plan.bands.size() == 1);
    // Slot [15, 235] kHz: 22 kHz guards and a 176 kHz tone span for 11 V.
    CHECK(plan.bands[0].f_base_hz == doctest::Approx(37e3));
    CHECK(plan.bands[0].band_width_hz == doctest::Approx(198e3));
    CHECK(plan.bands[0].guard_hz == doctest::Approx(22e3));
    CHECK(plan.kf_hz_per_v == doctest::Approx(16e3));
    CHECK(plan.bands[0] == SensorBand{});
}

TEST_CASE("multi-sensor band plans are disjoint and valid") {
    for (std::size_t n : {2, 3, 8, 16}) {
        const BandPlan plan = make_band_plan(n, 11.0);
        FmLinkParams p;
        p.sensors = plan.bands;
        p.kf_hz_per_v = plan.kf_hz_per_v;
        CHECK_NOTHROW(p.validate(AjsccParams{}));
        for (std::size_t i = 1; i < n; ++i) CHECK(plan.bands[i].slot_lo_hz() >= plan.bands[i - 1].slot_hi_hz() - 1e-6);
    }
}

TEST_CASE("band plans snapped to a frequency grid") {
    for (std::size_t n : {1, 3, 8, 16}) {
        const BandPlan loose = make_band_plan(n, 11.0);
        const BandPlan plan = make_band_plan(n, 11.0, 15e3, 235e3, 100.0);
        FmLinkParams p;
        p.sensors = plan.bands;
        p.kf_hz_per_v = plan.kf_hz_per_v;
        CHECK_NOTHROW(p.validate(AjsccParams{}));
        CHECK(plan.kf_hz_per_v == loose.kf_hz_per_v);
        for (std::size_t i = 0; i < n; ++i) {
            const SensorBand& b = plan.bands[i];
            CHECK(std::fmod(b.f_base_hz, 100.0) == 0.0);
            CHECK(b.f_base_hz <= loose.bands[i].f_base_hz);
            CHECK(loose.bands[i].f_base_hz - b.f_base_hz < 100.0);
            CHECK(b.slot_lo_hz() == doctest::Approx(loose.bands[i].slot_lo_hz()));
            CHECK(b.slot_hi_hz() == doctest::Approx(loose.bands[i].slot_hi_hz()));
        }
    }
    CHECK(make_band_plan(8, 11.0, 15e3, 235e3, 100.0).bands[0].f_base_hz == 17700.0);
    CHECK(make_band_plan(1, 11.0, 15e3, 235e3, 100.0).bands[0] == SensorBand{});
    CHECK_THROWS_AS(make_band_plan(8, 11.0, 15e3, 235e3, 5000.0), Error);
}

TEST_CASE("link parameter validation") {
    const AjsccParams codec;
    FmLinkParams p;
    CHECK_NOTHROW(p.validate(codec));
    SUBCASE("band beyond Nyquist") {
        p.sensors[0].f_base_hz = 100e3;
        CHECK_THROWS_AS(p.validate(codec), Error);
    }
    SUBCASE("band narrower than the tone span plus guard") {
        p.kf_hz_per_v = 17e3;
        CHECK_THROWS_AS(p.validate(codec), Error);
    }
    SUBCASE("overlapping bands") {
        p.kf_hz_per_v = 2e3;
        p.sensors = {{"a", 20e3, 30e3, 5e3}, {"b", 45e3, 30e3, 5e3}};
        CHECK_THROWS_AS(p.validate(codec), Error);
        p.sensors[1].f_base_hz = 55e3;
        CHECK_NOTHROW(p.validate(codec));
    }
    SUBCASE("duplicate ids") {
        p.kf_hz_per_v = 2e3;
        p.sensors = {{"a", 20e3, 30e3, 5e3}, {"a", 60e3, 30e3, 5e3}};
        CHECK_THROWS_AS(p.validate(codec), Error);
    }
    SUBCASE("stage offsets need one entry per level") {
        p.stage_offsets_v = {0.1, 0.0};
        CHECK_THROWS_AS(p.validate(codec), Error);
    }
}

TEST_CASE("v = 0 is a tone exactly at f_base") {
    const FmLinkParams p = link_with_hold(5000);
    const Signal tone = fm_modulate(held({0.0, 0.0}, p), p.sensors[0], p);
    REQUIRE(tone.size() == 10000);
    CHECK(tone.sample_rate_hz() == p.fs_hz);
    for (std::size_t n = 0; n < tone.size(); n += 7) {
        const double expected = std::cos(kTwoPi * std::fmod(37e3 * static_cast<double>(n), p.fs_hz) / p.fs_hz);
        CHECK(tone[n] == doctest::Approx(expected).scale(1.0).epsilon(1e-9));
    }
}

TEST_CASE("constant v gives a spectral peak within half a bin") {
    const FmLinkParams p = link_with_hold(1000);
    const double bin = p.fs_hz / 1000.0;
    for (double v : {0.37, 3.3, 5.5, 10.99}) {
        const Signal tone = fm_modulate(held({v}, p), p.sensors[0], p);
        const auto mag = oracle::direct_dft_magnitude(tone.samples());
        const double f_peak = static_cast<double>(argmax(mag)) * bin;
        CHECK(std::abs(f_peak - (37e3 + 16e3 * v)) <= bin / 2.0);
    }
}

TEST_CASE("phase is continuous across held values") {
    const FmLinkParams p = link_with_hold(1000);
    const Signal tone = fm_modulate(held({1.0, 7.0, 2.5}, p), p.sensors[0], p);
    const double f_max = 37e3 + 16e3 * 7.0;
    double worst_jump = 0.0;
    for (std::size_t n = 1; n < tone.size(); ++n) worst_jump = std::max(worst_jump, std::abs(tone[n] - tone[n - 1]));
    CHECK(worst_jump <= kTwoPi * f_max / p.fs_hz);
    // After the first boundary the phase picks up where the first tone left off.
    const double f1 = 37e3 + 16e3, f2 = 37e3 + 16e3 * 7.0;
    for (std::size_t n = 1000; n < 2000; n += 13) {
        const double phase = kTwoPi * (f1 * 1000.0 + f2 * static_cast<double>(n - 1000)) / p.fs_hz;
        CHECK(tone[n] == doctest::Approx(std::cos(phase)).scale(1.0).epsilon(1e-9));
    }
}

TEST_CASE("modulated output has unit amplitude") {
    const FmLinkParams p;
    std::vector<double> v(60);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 11.0 * std::fmod(0.618034 * static_cast<double>(i), 1.0);
    const Signal tone = fm_modulate(held(v, p), p.sensors[0], p);
    CHECK(std::all_of(tone.samples().begin(), tone.samples().end(), [](double x) { return std::abs(x) <= 1.0; }));
    CHECK(std::sqrt(mean_square(tone.samples())) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("band violation names the offending sample") {
    FmLinkParams p = link_with_hold(10);
    p.kf_hz_per_v = 20e3;
    try {
        fm_modulate(held({1.0, 2.0, 11.0, 3.0}, p), p.sensors[0], p);
        FAIL("expected a band violation");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("sample 2") != std::string::npos);
    }
    p.kf_hz_per_v = 16e3;
    CHECK_THROWS_AS(fm_modulate(held({-0.5}, p), p.sensors[0], p), Error);
}

TEST_CASE("encoded rate must equal fs / hold_window") {
    const FmLinkParams p = link_with_hold(100);
    CHECK_THROWS_AS(fm_modulate(Signal({1.0}, 100.0), p.sensors[0], p), Error);
}

TEST_CASE("fdma mux") {
    const FmLinkParams p = link_with_hold(1000);
    const Signal a = fm_modulate(held({1.0}, p), p.sensors[0], p);

    SUBCASE("single sensor is the identity") {
        const std::vector<Signal> one{a};
        CHECK(fdma_mux(one) == a);
    }
    SUBCASE("two disjoint tones show both peaks") {
        FmLinkParams q = p;
        q.kf_hz_per_v = 2e3;
        const SensorBand lo{"lo", 20e3, 30e3, 5e3}, hi{"hi", 120e3, 30e3, 5e3};
        const Signal ta = fm_modulate(held({5.0}, q), lo, q);  // 30 kHz
        const Signal tb = fm_modulate(held({2.0}, q), hi, q);  // 124 kHz
        const std::vector<Signal> both{ta, tb};
        const Signal sum = fdma_mux(both);
        CHECK(sum[3] == doctest::Approx((ta[3] + tb[3]) / 2.0));
        const auto mag = oracle::direct_dft_magnitude(sum.samples());
        const double bin = q.fs_hz / 1000.0;
        CHECK(static_cast<double>(argmax(std::span(mag).subspan(40, 60)) + 40) * bin == 30e3);
        CHECK(static_cast<double>(argmax(std::span(mag).subspan(240, 60)) + 240) * bin == 124e3);
    }
    SUBCASE("zero sensors is an error") { CHECK_THROWS_AS(fdma_mux({}), Error); }
    SUBCASE("mismatched lengths are an error") {
        const std::vector<Signal> bad{a, Signal(std::vector<double>(999, 0.0), p.fs_hz)};
        CHECK_THROWS_AS(fdma_mux(bad), Error);
    }
}

TEST_CASE("awgn") {
    const std::size_t n = 1000000;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(kTwoPi * 0.0731 * static_cast<double>(i));
    const Signal clean(x, 500e3);
    const double p_sig = mean_square(clean.samples());

    SUBCASE("infinite SNR disables noise") { CHECK(awgn(clean, kNoiseDisabled, 1) == clean); }
    SUBCASE("measured SNR matches the configured one") {
        for (double snr : {0.0, 10.0, 30.0, 40.0}) {
            const Signal noisy = awgn(clean, snr, 99);
            std::vector<double> noise(n);
            for (std::size_t i = 0; i < n; ++i) noise[i] = noisy[i] - clean[i];
            const double mean = std::accumulate(noise.begin(), noise.end(), 0.0) / static_cast<double>(n);
            double var = 0.0;
            for (double v : noise) var += (v - mean) * (v - mean);
            var /= static_cast<double>(n - 1);
            CHECK(std::abs(10.0 * std::log10(p_sig / var) - snr) <= 0.1);
        }
    }
    SUBCASE("same seed twice is identical") { CHECK(awgn(clean, 20.0, 5) == awgn(clean, 20.0, 5)); }
    SUBCASE("different seeds give uncorrelated noise") {
        const Signal zero(std::vector<double>(n, 0.0), 500e3);
        // Zero input has zero power; use a unit-power constant instead and subtract it.
        const Signal ones(std::vector<double>(n, 1.0), 500e3);
        const Signal a = awgn(ones, 0.0, 1), b = awgn(ones, 0.0, 2);
        long double ab = 0.0L, aa = 0.0L, bb = 0.0L;
        for (std::size_t i = 0; i < n; ++i) {
            const double na = a[i] - 1.0, nb = b[i] - 1.0;
            ab += na * nb;
            aa += na * na;
            bb += nb * nb;
        }
        const double rho = static_cast<double>(ab / std::sqrt(aa * bb));
        CHECK(std::abs(rho) < 3.0 / std::sqrt(static_cast<double>(n)));
        CHECK(awgn(zero, 10.0, 1) == zero);
    }
    SUBCASE("empty signal is an error") { CHECK_THROWS_AS(awgn(Signal({}, 1.0), 10.0, 1), Error); }
}

TEST_CASE("stage bias impairment") {
    const AjsccParams codec;
    const Signal v({0.2, 0.9, 1.5, 5.5, 10.9, 11.0}, 100.0);
    SUBCASE("all-zero offsets are the identity") {
        const std::vector<double> zeros(11, 0.0);
        CHECK(stage_bias_impairment(v, zeros, codec) == v);
    }
    SUBCASE("constant offset shifts everything") {
        const std::vector<double> c(11, 0.125);
        const Signal out = stage_bias_impairment(v, c, codec);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(out[i] == v[i] + 0.125);
    }
    SUBCASE("level-0 offset touches only stage-0 samples") {
        std::vector<double> o(11, 0.0);
        o[0] = 0.05;
        const Signal out = stage_bias_impairment(v, o, codec);
        for (std::size_t i = 0; i < v.size(); ++i) {
            const bool in_stage0 = v[i] >= 0.0 && v[i] < 1.0;
            CHECK(out[i] == (in_stage0 ? v[i] + 0.05 : v[i]));
        }
    }
    SUBCASE("wrong offset count is an error") {
        const std::vector<double> short_list(3, 0.0);
        CHECK_THROWS_AS(stage_bias_impairment(v, short_list, codec), Error);
    }
}

}  // TEST_SUITE
