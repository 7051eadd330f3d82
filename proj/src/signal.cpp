#include "ajscc/signal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>

namespace ajscc {

ParseError::ParseError(const std::string& path, std::size_t line, const std::string& what)
    : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

ValueRange::ValueRange(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
        throw Error("invalid range [" + format_double(lo) + ", " + format_double(hi) + "]: need lo < hi");
    }
}

Normalized normalize(double x, const ValueRange& r) {
    const double u = (x - r.lo()) / r.width();
    if (u < 0.0) return {0.0, true};
    if (u > 1.0) return {1.0, true};
    return {u, false};
}

std::size_t normalize_all(std::span<const double> xs, const ValueRange& r, std::span<double> out) {
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto n = normalize(xs[i], r);
        out[i] = n.value;
        clamped += n.clamped ? 1 : 0;
    }
    return clamped;
}

Signal::Signal(std::vector<double> samples, double sample_rate_hz, double t0_s)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz), t0_s_(t0_s) {
    if (!(std::isfinite(sample_rate_hz) && sample_rate_hz > 0.0)) {
        throw Error("sample rate must be positive and finite, got " + format_double(sample_rate_hz));
    }
    if (!std::isfinite(t0_s)) throw Error("start time must be finite");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!std::isfinite(samples_[i])) {
            throw Error("sample " + std::to_string(i) + " is not finite");
        }
    }
}

std::vector<double> Signal::take_samples() && { return std::move(samples_); }

Signal resample_zoh(const Signal& sig, double sample_rate_hz, double t0_s, std::size_t count) {
    if (sig.empty()) throw Error("cannot resample an empty signal");
    std::vector<double> out(count);
    const double last = static_cast<double>(sig.size() - 1);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = t0_s + static_cast<double>(i) / sample_rate_hz;
        // Tolerate instants that land a rounding error short of a sample.
        double pos = std::floor((t - sig.t0_s()) * sig.sample_rate_hz() + 1e-9);
        pos = std::clamp(pos, 0.0, last);
        out[i] = sig[static_cast<std::size_t>(pos)];
    }
    return Signal(std::move(out), sample_rate_hz, t0_s);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

bool parse_number(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        fields.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

double round_significant(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return std::strtod(buf, nullptr);
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

}  // namespace

void write_csv(const Signal& sig, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    std::string buf;
    buf.reserve(1 << 16);
    buf += "time_s,value\n";
    for (std::size_t i = 0; i < sig.size(); ++i) {
        buf += format_double(sig.time_of(i));
        buf += ',';
        buf += format_double(sig[i]);
        buf += '\n';
        if (buf.size() > (1 << 16) - 128) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("write failed: " + path.string());
}

Signal read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    const std::string name = path.string();

    std::string line;
    if (!std::getline(in, line)) throw ParseError(name, 1, "empty file");
    const auto header = split_commas(line);
    if (header.size() != 2 || header[0] != "time_s" || header[1] != "value") {
        throw ParseError(name, 1, "expected header 'time_s,value'");
    }

    std::vector<double> times;
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        double t = 0.0;
        double v = 0.0;
        if (fields.size() != 2 || !parse_number(fields[0], t) || !parse_number(fields[1], v)) {
            throw ParseError(name, lineno, "expected two finite numbers");
        }
        if (!times.empty() && !(t > times.back())) {
            throw ParseError(name, lineno, "time column is not strictly increasing");
        }
        times.push_back(t);
        values.push_back(v);
    }
    if (times.size() < 2) {
        throw ParseError(name, lineno, "need at least two samples to infer the sample rate");
    }

    std::vector<double> dts(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) dts[i - 1] = times[i] - times[i - 1];
    std::vector<double> sorted = dts;
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    const double median_dt = *mid;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        if (std::abs(dts[i] - median_dt) > 1e-6 * median_dt) {
            // Data rows start on line 2.
            throw ParseError(name, i + 3, "sample interval differs from the median interval");
        }
    }
    // Once every interval agrees, the span is far less sensitive to per-row rounding than any one difference.
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    const double rate = round_significant(1.0 / dt, 12);
    return Signal(std::move(values), rate, times.front());
}

void write_table(const Table& table, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        out << (i ? "," : "") << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << format_double(row[i]);
        }
        out << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    const std::string name = path.string();
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(name, 1, "empty file");
    for (auto f : split_commas(line)) table.header.emplace_back(f);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != table.header.size()) {
            throw ParseError(name, lineno, "column count does not match the header");
        }
        std::vector<double> row(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (!parse_number(fields[i], row[i])) throw ParseError(name, lineno, "not a finite number");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace ajscc
