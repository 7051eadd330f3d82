#pragma once

// Cluster-head receiver: windowed FFT, per-band peak picking, and the linear
// frequency-to-voltage map that feeds the AJSCC decoder.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ajscc/fm_link.hpp"
#include "ajscc/signal.hpp"

namespace ajscc {

enum class WindowFunction { rectangular, hann };
enum class Interpolation { none, parabolic };

std::string to_string(WindowFunction w);
std::string to_string(Interpolation i);
WindowFunction window_from_string(const std::string& s);
Interpolation interpolation_from_string(const std::string& s);

struct ReceiverParams {
    double fs_hz = 500e3;
    std::size_t ns = 5000;
    // Window advance in samples; 0 means ns (non-overlapping).
    std::size_t hop = 0;
    WindowFunction window_fn = WindowFunction::rectangular;
    Interpolation interpolation = Interpolation::none;
    std::vector<SensorBand> bands = FmLinkParams{}.sensors;

    std::size_t effective_hop() const { return hop == 0 ? ns : hop; }
    double bin_width_hz() const { return fs_hz / static_cast<double>(ns); }
    void validate() const;
};

// One-sided DFT magnitude |X[k]|, k = 0..ns/2, of a fixed-size window.
// Holds an FFTW plan and its buffers; not thread-safe, one per worker.
class SpectrumAnalyzer {
public:
    SpectrumAnalyzer(std::size_t ns, WindowFunction window_fn = WindowFunction::rectangular);
    ~SpectrumAnalyzer();
    SpectrumAnalyzer(const SpectrumAnalyzer&) = delete;
    SpectrumAnalyzer& operator=(const SpectrumAnalyzer&) = delete;
    SpectrumAnalyzer(SpectrumAnalyzer&&) noexcept;
    SpectrumAnalyzer& operator=(SpectrumAnalyzer&&) noexcept;

    std::size_t size() const;
    // The returned view is valid until the next call.
    std::span<const double> magnitude(std::span<const double> window);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<double> spectrum(std::span<const double> window, std::size_t ns,
                             WindowFunction window_fn = WindowFunction::rectangular);

struct BinRange {
    std::size_t lo;
    std::size_t hi;  // inclusive
};

// Bins whose centre frequency k * fs / ns lies in [f_base, f_base + band_width].
BinRange band_bins(const SensorBand& band, double fs_hz, std::size_t ns);

struct Peak {
    std::size_t bin;
    double frequency_hz;
};

// Largest bin inside the band, lowest bin on ties, optionally refined by a
// three-point parabola through the neighbouring magnitudes.
Peak detect_peak(std::span<const double> spec, const SensorBand& band, const ReceiverParams& p);

// (f - f_base) / kf, clamped to [0, max_voltage].
double freq_to_voltage(double f_hz, const SensorBand& band, double kf_hz_per_v, double max_voltage);

struct Demodulated {
    std::vector<Signal> streams;                    // per band, at fs / hop
    std::vector<std::vector<std::size_t>> peak_bins;  // per band, per window
};

// Splits rx into windows of ns samples advancing by hop (trailing partial
// window dropped) and recovers one encoded voltage per window per band.
Demodulated demodulate_stream(const Signal& rx, const ReceiverParams& p, double kf_hz_per_v,
                              double max_voltage);

}  // namespace ajscc
