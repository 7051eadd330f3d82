#include "ajscc/post_filters.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ajscc {

std::string to_string(ThresholdMode m) { return m == ThresholdMode::fixed ? "fixed" : "auto"; }
std::string to_string(EdgePolicy e) { return e == EdgePolicy::shrink ? "shrink" : "reflect"; }

ThresholdMode threshold_mode_from_string(const std::string& s) {
    if (s == "fixed") return ThresholdMode::fixed;
    if (s == "auto") return ThresholdMode::automatic;
    throw Error("unknown threshold mode '" + s + "' (expected fixed|auto)");
}

EdgePolicy edge_policy_from_string(const std::string& s) {
    if (s == "shrink") return EdgePolicy::shrink;
    if (s == "reflect") return EdgePolicy::reflect;
    throw Error("unknown edge policy '" + s + "' (expected shrink|reflect)");
}

void ThresholdParams::validate() const {
    if (mode == ThresholdMode::fixed && !std::isfinite(theta)) {
        throw Error("threshold.theta must be finite in fixed mode");
    }
    if (!(auto_percentile > 0.0 && auto_percentile < 100.0)) {
        throw Error("threshold.auto_percentile must lie in (0, 100)");
    }
    if (!(auto_margin > 1.0)) throw Error("threshold.auto_margin must exceed 1");
}

double percentile(std::span<const double> xs, double p) {
    if (xs.empty()) throw Error("percentile of an empty sequence");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto below = static_cast<std::size_t>(std::floor(pos));
    const std::size_t above = std::min(below + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(below);
    return sorted[below] + frac * (sorted[above] - sorted[below]);
}

ThresholdResult threshold_filter(const Signal& sig, const ThresholdParams& p) {
    p.validate();
    if (sig.empty()) throw Error("threshold_filter: empty signal");
    double theta = p.theta;
    bool degenerate = false;
    if (p.mode == ThresholdMode::automatic) {
        const auto [lo, hi] = std::minmax_element(sig.samples().begin(), sig.samples().end());
        if (*lo == *hi) {
            theta = *lo;
            degenerate = true;
        } else {
            theta = p.auto_margin * percentile(sig.samples(), p.auto_percentile);
        }
    }
    std::vector<double> out(sig.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sig[i] > theta ? sig[i] : 0.0;
    return {Signal(std::move(out), sig.sample_rate_hz(), sig.t0_s()), theta, degenerate};
}

void MedianParams::validate() const {
    if (order_k == 0) throw Error("median.order_k must be positive");
}

Signal median_filter(const Signal& sig, const MedianParams& p) {
    p.validate();
    const std::size_t n = sig.size();
    const std::size_t w = p.window();
    if (w > n) {
        throw Error("median_filter: window of " + std::to_string(w) + " samples exceeds signal length " +
                    std::to_string(n));
    }
    const std::size_t half = w / 2;
    const auto x = sig.samples();
    // Mirror about the end samples without repeating them.
    const auto reflected = [&](std::ptrdiff_t i) -> double {
        const auto last = static_cast<std::ptrdiff_t>(n) - 1;
        if (i < 0) i = -i;
        if (i > last) i = 2 * last - i;
        return x[static_cast<std::size_t>(i)];
    };

    std::vector<double> out(n);
    std::vector<double> sorted;
    sorted.reserve(w);
    for (std::size_t j = 0; j < w; ++j) sorted.push_back(reflected(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(half)));
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const double leaving = reflected(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(half) - 1);
            const double entering = reflected(static_cast<std::ptrdiff_t>(i + half));
            sorted.erase(std::lower_bound(sorted.begin(), sorted.end(), leaving));
            sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), entering), entering);
        }
        out[i] = sorted[half];
    }

    if (p.edge_policy == EdgePolicy::shrink) {
        std::vector<double> scratch;
        for (std::size_t i = 0; i < n && i < half; ++i) {
            for (const std::size_t c : {i, n - 1 - i}) {
                const std::size_t h = std::min(c, n - 1 - c);
                scratch.assign(x.begin() + static_cast<std::ptrdiff_t>(c - h),
                               x.begin() + static_cast<std::ptrdiff_t>(c + h + 1));
                const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(h);
                std::nth_element(scratch.begin(), mid, scratch.end());
                out[c] = *mid;
            }
        }
    }
    return Signal(std::move(out), sig.sample_rate_hz(), sig.t0_s());
}

}  // namespace ajscc
