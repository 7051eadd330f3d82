#include "ajscc/receiver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ajscc {

std::string to_string(WindowFunction w) { return w == WindowFunction::hann ? "hann" : "rectangular"; }
std::string to_string(Interpolation i) { return i == Interpolation::parabolic ? "parabolic" : "none"; }

WindowFunction window_from_string(const std::string& s) {
    if (s == "rectangular") return WindowFunction::rectangular;
    if (s == "hann") return WindowFunction::hann;
    throw Error("unknown window function '" + s + "' (expected rectangular|hann)");
}

Interpolation interpolation_from_string(const std::string& s) {
    if (s == "none") return Interpolation::none;
    if (s == "parabolic") return Interpolation::parabolic;
    throw Error("unknown interpolation '" + s + "' (expected none|parabolic)");
}

void ReceiverParams::validate() const {
    if (!(fs_hz > 0.0)) throw Error("receiver.fs_hz must be positive");
    if (ns < 16) throw Error("receiver.ns must be at least 16");
    if (bands.empty()) throw Error("receiver: no bands to search");
    for (const auto& b : bands) {
        if (b.f_top_hz() > fs_hz / 2.0) throw Error("receiver: band " + b.sensor_id + " extends past fs/2");
    }
}

struct SpectrumAnalyzer::Impl {
    std::size_t ns;
    std::vector<double> taper;  // empty for rectangular
    double* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;
    std::vector<double> mag;

    Impl(std::size_t n, WindowFunction w) : ns(n), mag(n / 2 + 1) {
        in = fftw_alloc_real(ns);
        out = fftw_alloc_complex(ns / 2 + 1);
        if (!in || !out) throw Error("fftw allocation failed");
        // FFTW_ESTIMATE keeps plan selection, and so rounding, identical across runs.
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(ns), in, out, FFTW_ESTIMATE);
        if (!plan) throw Error("fftw plan creation failed");
        if (w == WindowFunction::hann) {
            taper.resize(ns);
            for (std::size_t i = 0; i < ns; ++i) {
                taper[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                static_cast<double>(ns));
            }
        }
    }
    ~Impl() {
        if (plan) fftw_destroy_plan(plan);
        fftw_free(in);
        fftw_free(out);
    }
};

SpectrumAnalyzer::SpectrumAnalyzer(std::size_t ns, WindowFunction window_fn) {
    if (ns < 2) throw Error("spectrum size must be at least 2");
    impl_ = std::make_unique<Impl>(ns, window_fn);
}
SpectrumAnalyzer::~SpectrumAnalyzer() = default;
SpectrumAnalyzer::SpectrumAnalyzer(SpectrumAnalyzer&&) noexcept = default;
SpectrumAnalyzer& SpectrumAnalyzer::operator=(SpectrumAnalyzer&&) noexcept = default;

std::size_t SpectrumAnalyzer::size() const { return impl_->ns; }

std::span<const double> SpectrumAnalyzer::magnitude(std::span<const double> window) {
    auto& d = *impl_;
    if (window.size() != d.ns) {
        throw Error("spectrum: window has " + std::to_string(window.size()) + " samples, expected " +
                    std::to_string(d.ns));
    }
    if (d.taper.empty()) {
        std::copy(window.begin(), window.end(), d.in);
    } else {
        for (std::size_t i = 0; i < d.ns; ++i) d.in[i] = window[i] * d.taper[i];
    }
    fftw_execute(d.plan);
    for (std::size_t k = 0; k < d.mag.size(); ++k) d.mag[k] = std::hypot(d.out[k][0], d.out[k][1]);
    return d.mag;
}

std::vector<double> spectrum(std::span<const double> window, std::size_t ns, WindowFunction window_fn) {
    SpectrumAnalyzer analyzer(ns, window_fn);
    const auto mag = analyzer.magnitude(window);
    return {mag.begin(), mag.end()};
}

BinRange band_bins(const SensorBand& band, double fs_hz, std::size_t ns) {
    const double per_hz = static_cast<double>(ns) / fs_hz;
    const double lo = std::ceil(band.f_base_hz * per_hz - 1e-9);
    double hi = std::floor(band.f_top_hz() * per_hz + 1e-9);
    hi = std::min(hi, static_cast<double>(ns / 2));
    if (lo < 0.0 || hi < lo) {
        throw Error("band " + band.sensor_id + " contains no spectrum bins at ns = " + std::to_string(ns));
    }
    return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

Peak detect_peak(std::span<const double> spec, const SensorBand& band, const ReceiverParams& p) {
    if (spec.size() != p.ns / 2 + 1) throw Error("detect_peak: spectrum length does not match ns");
    const auto range = band_bins(band, p.fs_hz, p.ns);
    std::size_t best = range.lo;
    for (std::size_t k = range.lo + 1; k <= range.hi; ++k) {
        if (spec[k] > spec[best]) best = k;
    }
    double offset = 0.0;
    if (p.interpolation == Interpolation::parabolic && best > 0 && best + 1 < spec.size()) {
        const double a = spec[best - 1], b = spec[best], c = spec[best + 1];
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    }
    return {best, (static_cast<double>(best) + offset) * p.bin_width_hz()};
}

double freq_to_voltage(double f_hz, const SensorBand& band, double kf_hz_per_v, double max_voltage) {
    if (!(kf_hz_per_v > 0.0)) throw Error("freq_to_voltage: kf must be positive");
    return std::clamp((f_hz - band.f_base_hz) / kf_hz_per_v, 0.0, max_voltage);
}

Demodulated demodulate_stream(const Signal& rx, const ReceiverParams& p, double kf_hz_per_v,
                              double max_voltage) {
    p.validate();
    if (rx.size() < p.ns) {
        throw Error("demodulate: received signal has " + std::to_string(rx.size()) +
                    " samples, fewer than one window of " + std::to_string(p.ns));
    }
    const std::size_t hop = p.effective_hop();
    const std::size_t windows = (rx.size() - p.ns) / hop + 1;
    SpectrumAnalyzer analyzer(p.ns, p.window_fn);

    std::vector<std::vector<double>> volts(p.bands.size(), std::vector<double>(windows));
    std::vector<std::vector<std::size_t>> bins(p.bands.size(), std::vector<std::size_t>(windows));
    const auto samples = rx.samples();
    for (std::size_t w = 0; w < windows; ++w) {
        const auto spec = analyzer.magnitude(samples.subspan(w * hop, p.ns));
        for (std::size_t b = 0; b < p.bands.size(); ++b) {
            const auto peak = detect_peak(spec, p.bands[b], p);
            bins[b][w] = peak.bin;
            volts[b][w] = freq_to_voltage(peak.frequency_hz, p.bands[b], kf_hz_per_v, max_voltage);
        }
    }
    Demodulated out;
    const double rate = p.fs_hz / static_cast<double>(hop);
    for (auto& v : volts) out.streams.emplace_back(std::move(v), rate, rx.t0_s());
    out.peak_bins = std::move(bins);
    return out;
}

}  // namespace ajscc
