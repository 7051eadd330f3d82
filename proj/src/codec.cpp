#include "ajscc/codec.hpp"

#include <algorithm>
#include <cmath>

namespace ajscc {

std::string to_string(Folding f) { return f == Folding::alternating ? "alternating" : "none"; }

Folding folding_from_string(const std::string& s) {
    if (s == "none") return Folding::none;
    if (s == "alternating") return Folding::alternating;
    throw Error("unknown folding mode '" + s + "' (expected none|alternating)");
}

void AjsccParams::validate() const {
    if (levels_l < 2) throw Error("ajscc.levels_l must be at least 2");
    if (!(v_r > 0.0 && std::isfinite(v_r))) throw Error("ajscc.v_r must be positive");
}

int quantize_x2(double x2, const AjsccParams& p) {
    const double scaled = normalize(x2, p.x2_range).value * (p.levels_l - 1);
    const int m = static_cast<int>(std::floor(scaled + 0.5));
    return std::clamp(m, 0, p.levels_l - 1);
}

int stage_of(double v, const AjsccParams& p) {
    const double q = std::floor(std::clamp(v, 0.0, p.max_voltage()) / p.v_r);
    return std::clamp(static_cast<int>(q), 0, p.levels_l - 1);
}

double encode(double x1, double x2, const AjsccParams& p) {
    const int m = quantize_x2(x2, p);
    double u = normalize(x1, p.x1_range).value;
    if (p.folding == Folding::alternating && m % 2 == 1) u = 1.0 - u;
    return m * p.v_r + u * p.v_r;
}

Decoded decode(double v, const AjsccParams& p) {
    v = std::clamp(v, 0.0, p.max_voltage());
    const int m = stage_of(v, p);
    double u = std::clamp((v - m * p.v_r) / p.v_r, 0.0, 1.0);
    if (p.folding == Folding::alternating && m % 2 == 1) u = 1.0 - u;
    const double x2 = p.x2_range.lo() + m * p.x2_range.width() / (p.levels_l - 1);
    return {denormalize(u, p.x1_range), x2};
}

Signal encode_signal(const Signal& x1, const Signal& x2, const AjsccParams& p) {
    p.validate();
    if (x1.size() != x2.size() || x1.sample_rate_hz() != x2.sample_rate_hz()) {
        throw Error("encode: x1 and x2 must share length and sample rate");
    }
    std::vector<double> out(x1.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = encode(x1[i], x2[i], p);
    return Signal(std::move(out), x1.sample_rate_hz(), x1.t0_s());
}

std::pair<Signal, Signal> decode_signal(const Signal& encoded, const AjsccParams& p) {
    p.validate();
    std::vector<double> x1(encoded.size());
    std::vector<double> x2(encoded.size());
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        const auto d = decode(encoded[i], p);
        x1[i] = d.x1;
        x2[i] = d.x2;
    }
    return {Signal(std::move(x1), encoded.sample_rate_hz(), encoded.t0_s()),
            Signal(std::move(x2), encoded.sample_rate_hz(), encoded.t0_s())};
}

}  // namespace ajscc
