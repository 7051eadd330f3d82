#pragma once

// Uniformly sampled time series shared by every stage of the link, plus the
// range helpers and the two-column CSV format used for on-disk artifacts.

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ajscc {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. The message names the offending line.
class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Closed interval [lo, hi] with lo < hi.
class ValueRange {
public:
    ValueRange() = default;
    ValueRange(double lo, double hi);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double width() const { return hi_ - lo_; }

    bool operator==(const ValueRange&) const = default;

private:
    double lo_ = 0.0;
    double hi_ = 1.0;
};

struct Normalized {
    double value;  // in [0, 1]
    bool clamped;  // input lay outside the range
};

// (x - lo) / (hi - lo), clamped to [0, 1].
Normalized normalize(double x, const ValueRange& r);

// Inverse of normalize for u in [0, 1].
inline double denormalize(double u, const ValueRange& r) { return r.lo() + u * r.width(); }

// Normalizes a batch and returns how many samples were clamped.
std::size_t normalize_all(std::span<const double> xs, const ValueRange& r, std::span<double> out);

class Signal {
public:
    Signal() = default;
    // Throws Error on a non-positive rate or a non-finite sample.
    Signal(std::vector<double> samples, double sample_rate_hz, double t0_s = 0.0);

    std::span<const double> samples() const { return samples_; }
    const std::vector<double>& values() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    double operator[](std::size_t i) const { return samples_[i]; }

    double sample_rate_hz() const { return sample_rate_hz_; }
    double t0_s() const { return t0_s_; }
    double duration_s() const { return static_cast<double>(samples_.size()) / sample_rate_hz_; }
    double time_of(std::size_t i) const { return t0_s_ + static_cast<double>(i) / sample_rate_hz_; }

    // Releases the sample buffer, leaving the signal empty.
    std::vector<double> take_samples() &&;

    bool operator==(const Signal&) const = default;

private:
    std::vector<double> samples_;
    double sample_rate_hz_ = 1.0;
    double t0_s_ = 0.0;
};

// Value of `sig` held at each sample instant of a grid with the given rate,
// start time and length (zero-order hold). Instants before the first sample
// take the first sample; instants past the end take the last one.
Signal resample_zoh(const Signal& sig, double sample_rate_hz, double t0_s, std::size_t count);

// CSV layout: header `time_s,value`, then one `t,v` row per sample, `.` as the
// decimal separator. Values are written in shortest round-trip form so a
// write/read cycle is exact. The sample rate is recovered from the median
// sample interval and resolved to 12 significant digits.
void write_csv(const Signal& sig, const std::filesystem::path& path);
Signal read_csv(const std::filesystem::path& path);

// Two-column table with an arbitrary header and no sampling constraint
// (event lists, sweep tables).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
void write_table(const Table& table, const std::filesystem::path& path);
Table read_table(const std::filesystem::path& path);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace ajscc
