#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ajscc/signal.hpp"

namespace ajscc {

struct ErrorMetrics {
    double mse = 0.0;
    double rmse = 0.0;
    double nrmse_pct = 0.0;  // RMSE as a percentage of the range width
    std::size_t samples = 0;
};

struct PulseMetrics {
    double precision = 1.0;
    double recall = 1.0;
    std::size_t matched = 0;
    std::size_t detected = 0;
    std::size_t expected = 0;
    double tolerance_s = 0.0;
};

// Compares `recovered`, held onto the original's sample grid, against
// `original` over the span the recovered signal covers.
ErrorMetrics error_metrics(const Signal& original, const Signal& recovered, const ValueRange& range);

// Times of local maxima strictly above `level`; a plateau reports its first sample.
std::vector<double> detect_pulses(const Signal& sig, double level = 0.0);

// Greedy nearest-neighbour matching: candidate pairs within the tolerance are
// taken in order of increasing time difference, each event and detection used
// at most once. With nothing expected and nothing detected both scores are 1.
PulseMetrics match_pulses(std::span<const double> expected, std::span<const double> detected,
                          double tolerance_s);

struct Reconstruction {
    ErrorMetrics error;
    std::optional<PulseMetrics> pulses;
};

// Pulse scores are computed only when an event list is supplied.
Reconstruction compute_metrics(const Signal& original, const Signal& recovered, const ValueRange& range,
                               std::optional<std::span<const double>> events = std::nullopt,
                               double tolerance_s = 0.0);

}  // namespace ajscc
