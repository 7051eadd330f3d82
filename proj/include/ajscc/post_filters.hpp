#pragma once

// Reconstruction clean-up: a floor-removing threshold for the microfluidic
// channel and a centred running median for the physiological channel.

#include <cstddef>
#include <span>
#include <string>

#include "ajscc/signal.hpp"

namespace ajscc {

enum class ThresholdMode { fixed, automatic };
enum class EdgePolicy { shrink, reflect };

std::string to_string(ThresholdMode m);
std::string to_string(EdgePolicy e);
ThresholdMode threshold_mode_from_string(const std::string& s);
EdgePolicy edge_policy_from_string(const std::string& s);

struct ThresholdParams {
    ThresholdMode mode = ThresholdMode::automatic;
    double theta = 0.0;
    double auto_percentile = 90.0;
    double auto_margin = 1.1;

    void validate() const;
};

struct ThresholdResult {
    Signal signal;
    double theta;
    // Automatic mode met a constant signal and fell back to theta = that value.
    bool degenerate = false;
};

// Percentile with linear interpolation between closest ranks, p in [0, 100].
double percentile(std::span<const double> xs, double p);

// y[n] = x[n] if x[n] > theta else 0. Automatic mode uses
// theta = auto_margin * percentile(x, auto_percentile).
ThresholdResult threshold_filter(const Signal& sig, const ThresholdParams& p);

struct MedianParams {
    std::size_t order_k = 200;
    EdgePolicy edge_policy = EdgePolicy::reflect;

    // Window length: order_k + 1 when order_k is even, else order_k.
    std::size_t window() const { return order_k % 2 == 0 ? order_k + 1 : order_k; }
    void validate() const;
};

// y[n] = median of the window centred on n. `reflect` mirrors the signal
// about its end samples; `shrink` narrows the window symmetrically near the
// edges. Output length equals input length.
Signal median_filter(const Signal& sig, const MedianParams& p);

}  // namespace ajscc
