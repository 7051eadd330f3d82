#include "ajscc/fm_link.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace ajscc {

BandPlan make_band_plan(std::size_t count, double max_voltage, double lo_hz, double hi_hz, double grid_hz) {
    if (count == 0) throw Error("band plan needs at least one sensor");
    if (!(hi_hz > lo_hz && lo_hz >= 0.0)) throw Error("band plan edges are invalid");
    if (!(grid_hz >= 0.0)) throw Error("band plan grid must be non-negative");
    const double slot = (hi_hz - lo_hz) / static_cast<double>(count);
    BandPlan plan{{}, 0.8 * slot / max_voltage};
    for (std::size_t i = 0; i < count; ++i) {
        const double start = lo_hz + static_cast<double>(i) * slot;
        double base = start + 0.1 * slot;
        if (grid_hz > 0.0) base = std::floor(base / grid_hz) * grid_hz;
        if (!(base > start)) throw Error("band plan grid is coarser than the guard");
        // The slot keeps its edges; the upper guard absorbs what the lower one lost.
        plan.bands.push_back({"s" + std::to_string(i), base, start + slot - base, base - start});
    }
    return plan;
}

void FmLinkParams::validate(const AjsccParams& codec) const {
    if (!(fs_hz > 0.0)) throw Error("link.fs_hz must be positive");
    if (!(kf_hz_per_v > 0.0)) throw Error("link.kf_hz_per_v must be positive");
    if (hold_window == 0) throw Error("link.hold_window must be at least 1");
    if (sensors.empty()) throw Error("link.sensors must list at least one band");
    if (!stage_offsets_v.empty() && stage_offsets_v.size() != static_cast<std::size_t>(codec.levels_l)) {
        throw Error("link.stage_offsets_v must have one entry per AJSCC level");
    }
    const double span = kf_hz_per_v * codec.max_voltage();
    std::set<std::string> ids;
    for (const auto& b : sensors) {
        const std::string where = "link.sensors[" + b.sensor_id + "]";
        if (!ids.insert(b.sensor_id).second) throw Error(where + ": duplicate sensor id");
        if (!(b.guard_hz >= 0.0)) throw Error(where + ": guard_hz must be non-negative");
        if (!(b.slot_lo_hz() > 0.0)) throw Error(where + ": band (with guard) must start above 0 Hz");
        if (!(b.f_top_hz() < fs_hz / 2.0)) throw Error(where + ": band must end below fs/2");
        if (b.band_width_hz < (span + b.guard_hz) * (1.0 - 1e-12)) {
            throw Error(where + ": band_width_hz is smaller than kf * L * V_R + guard_hz");
        }
    }
    std::vector<SensorBand> sorted = sensors;
    std::sort(sorted.begin(), sorted.end(),
              [](const SensorBand& a, const SensorBand& b) { return a.slot_lo_hz() < b.slot_lo_hz(); });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].slot_lo_hz() < sorted[i - 1].slot_hi_hz()) {
            throw Error("link: bands " + sorted[i - 1].sensor_id + " and " + sorted[i].sensor_id + " overlap");
        }
    }
}

Signal fm_modulate(const Signal& encoded, const SensorBand& band, const FmLinkParams& p) {
    if (p.hold_window == 0) throw Error("fm_modulate: hold_window must be at least 1");
    const double expected_rate = p.fs_hz / static_cast<double>(p.hold_window);
    if (std::abs(encoded.sample_rate_hz() - expected_rate) > 1e-9 * expected_rate) {
        throw Error("fm_modulate: encoded rate " + format_double(encoded.sample_rate_hz()) +
                    " Hz does not equal fs / hold_window = " + format_double(expected_rate) + " Hz");
    }
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    std::vector<double> out;
    out.reserve(encoded.size() * p.hold_window);
    double phase = 0.0;
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        const double f = band.f_base_hz + p.kf_hz_per_v * encoded[i];
        if (f < band.f_base_hz || f > band.f_top_hz()) {
            throw Error("fm_modulate: sample " + std::to_string(i) + " (v = " + format_double(encoded[i]) +
                        " V) maps to " + format_double(f) + " Hz, outside band " + band.sensor_id + " [" +
                        format_double(band.f_base_hz) + ", " + format_double(band.f_top_hz()) + "] Hz");
        }
        const double step = kTwoPi * f / p.fs_hz;
        for (std::size_t j = 0; j < p.hold_window; ++j) {
            out.push_back(std::cos(phase));
            phase += step;
            if (phase >= kTwoPi) phase -= kTwoPi;
        }
    }
    return Signal(std::move(out), p.fs_hz, encoded.t0_s());
}

Signal fdma_mux(std::span<const Signal> tones) {
    if (tones.empty()) throw Error("fdma_mux: no sensors to multiplex");
    const auto& first = tones.front();
    for (const auto& t : tones) {
        if (t.size() != first.size() || t.sample_rate_hz() != first.sample_rate_hz()) {
            throw Error("fdma_mux: all tones must share length and sample rate");
        }
    }
    if (tones.size() == 1) return first;
    const double scale = 1.0 / static_cast<double>(tones.size());
    std::vector<double> sum(first.size(), 0.0);
    for (const auto& t : tones) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += t[i];
    }
    for (auto& v : sum) v *= scale;
    return Signal(std::move(sum), first.sample_rate_hz(), first.t0_s());
}

Signal awgn(Signal sig, double snr_db, std::uint64_t seed) {
    if (sig.empty()) throw Error("awgn: empty signal");
    if (std::isinf(snr_db) && snr_db > 0.0) return sig;
    double power = 0.0;
    for (double v : sig.samples()) power += v * v;
    power /= static_cast<double>(sig.size());
    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    const double rate = sig.sample_rate_hz();
    const double t0 = sig.t0_s();
    std::vector<double> x = std::move(sig).take_samples();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (auto& v : x) v += sigma * noise(rng);
    return Signal(std::move(x), rate, t0);
}

Signal stage_bias_impairment(const Signal& encoded, std::span<const double> offsets, const AjsccParams& p) {
    if (offsets.size() != static_cast<std::size_t>(p.levels_l)) {
        throw Error("stage_bias_impairment: need " + std::to_string(p.levels_l) + " offsets, got " +
                    std::to_string(offsets.size()));
    }
    std::vector<double> out(encoded.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = encoded[i] + offsets[static_cast<std::size_t>(stage_of(encoded[i], p))];
    }
    return Signal(std::move(out), encoded.sample_rate_hz(), encoded.t0_s());
}

}  // namespace ajscc
