#include "ajscc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace ajscc {

ErrorMetrics error_metrics(const Signal& original, const Signal& recovered, const ValueRange& range) {
    if (original.empty() || recovered.empty()) throw Error("metrics: empty input signal");
    const double covered_end = recovered.t0_s() + recovered.duration_s();
    std::size_t count = 0;
    while (count < original.size() && original.time_of(count) < covered_end - 1e-9 / original.sample_rate_hz()) {
        ++count;
    }
    if (count == 0) throw Error("metrics: recovered signal does not overlap the original");
    const Signal held = resample_zoh(recovered, original.sample_rate_hz(), original.t0_s(), count);
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double d = held[i] - original[i];
        sum += d * d;
    }
    ErrorMetrics m;
    m.samples = count;
    m.mse = sum / static_cast<double>(count);
    m.rmse = std::sqrt(m.mse);
    m.nrmse_pct = 100.0 * m.rmse / range.width();
    return m;
}

std::vector<double> detect_pulses(const Signal& sig, double level) {
    std::vector<double> times;
    const auto x = sig.samples();
    const std::size_t n = x.size();
    std::size_t i = 0;
    while (i < n) {
        if (x[i] <= level || (i > 0 && x[i] <= x[i - 1])) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < n && x[j] == x[i]) ++j;
        if (j == n || x[j] < x[i]) times.push_back(sig.time_of(i));
        i = j;
    }
    return times;
}

PulseMetrics match_pulses(std::span<const double> expected, std::span<const double> detected,
                          double tolerance_s) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t e = 0; e < expected.size(); ++e) {
        for (std::size_t d = 0; d < detected.size(); ++d) {
            const double gap = std::abs(expected[e] - detected[d]);
            if (gap <= tolerance_s) pairs.emplace_back(gap, e, d);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> used_e(expected.size()), used_d(detected.size());
    PulseMetrics m;
    for (const auto& [gap, e, d] : pairs) {
        if (used_e[e] || used_d[d]) continue;
        used_e[e] = used_d[d] = true;
        ++m.matched;
    }
    m.expected = expected.size();
    m.detected = detected.size();
    m.tolerance_s = tolerance_s;
    m.recall = m.expected ? static_cast<double>(m.matched) / static_cast<double>(m.expected) : (m.detected ? 0.0 : 1.0);
    m.precision = m.detected ? static_cast<double>(m.matched) / static_cast<double>(m.detected) : (m.expected ? 0.0 : 1.0);
    return m;
}

Reconstruction compute_metrics(const Signal& original, const Signal& recovered, const ValueRange& range,
                               std::optional<std::span<const double>> events, double tolerance_s) {
    Reconstruction r{error_metrics(original, recovered, range), std::nullopt};
    if (events) r.pulses = match_pulses(*events, detect_pulses(recovered), tolerance_s);
    return r;
}

}  // namespace ajscc
