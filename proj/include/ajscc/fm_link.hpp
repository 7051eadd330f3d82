#pragma once

// Baseband FM transmitter, FDMA multiplexer and AWGN channel.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ajscc/codec.hpp"
#include "ajscc/signal.hpp"

namespace ajscc {

// One sensor's slot in the FDMA plan. Tones occupy
// [f_base_hz, f_base_hz + kf * L * V_R]; band_width_hz adds the upper guard,
// and a guard of the same size sits below f_base_hz.
struct SensorBand {
    std::string sensor_id = "s0";
    double f_base_hz = 37e3;
    double band_width_hz = 198e3;
    double guard_hz = 22e3;

    double f_top_hz() const { return f_base_hz + band_width_hz; }
    // Occupied spectrum including both guards.
    double slot_lo_hz() const { return f_base_hz - guard_hz; }
    double slot_hi_hz() const { return f_top_hz(); }

    bool operator==(const SensorBand&) const = default;
};

struct BandPlan {
    std::vector<SensorBand> bands;
    double kf_hz_per_v;
};

// Splits [lo_hz, hi_hz] into `count` equal slots. Within a slot of width W the
// tone span kf * max_voltage is 0.8 W with a 0.1 W guard on each side.
// A positive grid_hz rounds each f_base down to a multiple of it, so tones at
// whole multiples of the grid above f_base land on bin centres.
BandPlan make_band_plan(std::size_t count, double max_voltage, double lo_hz = 15e3, double hi_hz = 235e3,
                        double grid_hz = 0.0);

inline constexpr double kNoiseDisabled = std::numeric_limits<double>::infinity();

struct FmLinkParams {
    double fs_hz = 500e3;
    double kf_hz_per_v = 16e3;
    std::vector<SensorBand> sensors = make_band_plan(1, 11.0).bands;
    // +infinity disables the channel noise.
    double snr_db = 30.0;
    std::uint64_t seed = 3;
    std::size_t hold_window = 5000;
    // Per-stage voltage offsets added before modulation; empty disables.
    std::vector<double> stage_offsets_v;

    // Checks band geometry against fs and the codec's voltage span.
    void validate(const AjsccParams& codec) const;
};

// Continuous-phase FM: each encoded sample is held for hold_window output
// samples at fs_hz with instantaneous frequency f_base + kf * v. Throws when
// a sample would leave [f_base, f_base + band_width].
Signal fm_modulate(const Signal& encoded, const SensorBand& band, const FmLinkParams& p);

// Sample-wise sum scaled by 1 / count.
Signal fdma_mux(std::span<const Signal> tones);

// Adds N(0, P / 10^(snr/10)) noise, P the mean signal power.
Signal awgn(Signal sig, double snr_db, std::uint64_t seed);

// Adds offsets[stage_of(v)] to every sample. offsets.size() must equal L.
Signal stage_bias_impairment(const Signal& encoded, std::span<const double> offsets, const AjsccParams& p);

}  // namespace ajscc
