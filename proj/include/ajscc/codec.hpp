#pragma once

// Analog joint source-channel coding (AJSCC) staircase mapping.
//
// Two source values are compressed into one voltage. x2 selects one of L
// stages (levels 0..L-1); stages below the active one sit at the saturation
// voltage V_R, the active stage outputs a voltage linear in x1, and stages
// above it are grounded. Their sum is the encoded voltage:
//
//     V = M * V_R + u * V_R,   M = quantized x2, u = normalized x1
//
// Decoding is a floor/remainder pair on V / V_R. With alternating folding
// the linear segment reverses direction on odd stages so the curve through
// the (u, M) plane stays continuous at stage corners.

#include <cstddef>
#include <string>
#include <utility>

#include "ajscc/signal.hpp"

namespace ajscc {

enum class Folding { none, alternating };

std::string to_string(Folding f);
Folding folding_from_string(const std::string& s);

struct AjsccParams {
    int levels_l = 11;
    double v_r = 1.0;
    ValueRange x1_range{0.0, 1.0};
    ValueRange x2_range{0.0, 1.0};
    Folding folding = Folding::none;

    double max_voltage() const { return levels_l * v_r; }
    // Throws Error when L < 2 or V_R is not positive.
    void validate() const;
};

// Stage index M in {0, ..., L-1}: round(normalize(x2) * (L - 1)), ties up.
int quantize_x2(double x2, const AjsccParams& p);

// Stage that a (possibly noisy) encoded voltage falls in: floor(v / V_R)
// clamped to {0, ..., L-1}.
int stage_of(double v, const AjsccParams& p);

double encode(double x1, double x2, const AjsccParams& p);

struct Decoded {
    double x1;
    double x2;
};

// Out-of-range voltages are clamped to [0, L * V_R] first.
Decoded decode(double v, const AjsccParams& p);

// Sample-wise forms. encode_signal requires x1 and x2 on the same grid.
Signal encode_signal(const Signal& x1, const Signal& x2, const AjsccParams& p);
std::pair<Signal, Signal> decode_signal(const Signal& encoded, const AjsccParams& p);

}  // namespace ajscc
