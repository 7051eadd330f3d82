#include "ajscc/sources.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace ajscc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t sample_count(double duration_s, double rate_hz) {
    const double n = std::floor(duration_s * rate_hz * (1.0 + 1e-12));
    return n > 0.0 ? static_cast<std::size_t>(n) : 0;
}

void require(bool ok, const char* what) {
    if (!ok) throw Error(what);
}

}  // namespace

void CytometryParams::validate() const {
    require(f0_hz > 0.0, "cytometry.f0_hz must be positive");
    require(lpf_cutoff_hz > 0.0, "cytometry.lpf_cutoff_hz must be positive");
    require(f0_hz > 2.0 * lpf_cutoff_hz, "cytometry: f0_hz must exceed 2 * lpf_cutoff_hz");
    require(pulse_width_s > 1.0 / f0_hz, "cytometry: pulse_width_s must exceed one carrier period");
    require(delta_r_ohm >= 0.0, "cytometry.delta_r_ohm must be non-negative");
    require(baseline_r_ohm > 0.0 && rf_ohm > 0.0, "cytometry: resistances must be positive");
    require(event_rate_hz >= 0.0, "cytometry.event_rate_hz must be non-negative");
    require(event_rate_hz * pulse_width_s < 0.5,
            "cytometry: event_rate_hz * pulse_width_s must stay below 0.5");
    require(sim_rate_hz > 0.0, "cytometry.sim_rate_hz must be positive");
    require(pulse_polarity == 1 || pulse_polarity == -1, "cytometry.pulse_polarity must be +1 or -1");
    require(std::isfinite(duration_s), "cytometry.duration_s must be finite");
}

std::vector<double> bead_arrivals(const CytometryParams& p) {
    std::vector<double> times;
    if (p.event_rate_hz <= 0.0) return times;
    std::mt19937_64 rng(p.seed);
    std::exponential_distribution<double> gap(p.event_rate_hz);
    for (double t = gap(rng); t < p.duration_s; t += gap(rng)) times.push_back(t);
    return times;
}

ImpedanceEnvelope::ImpedanceEnvelope(const CytometryParams& p) : ImpedanceEnvelope(p, bead_arrivals(p)) {}

ImpedanceEnvelope::ImpedanceEnvelope(const CytometryParams& p, std::vector<double> arrivals)
    : arrivals_(std::move(arrivals)),
      height_(p.pulse_polarity * p.delta_r_ohm / p.baseline_r_ohm),
      sigma_s_(p.pulse_width_s / (2.0 * std::sqrt(2.0 * std::numbers::ln2))),
      cutoff_s_(8.0 * sigma_s_) {
    std::sort(arrivals_.begin(), arrivals_.end());
}

double ImpedanceEnvelope::at(double t_s) const {
    double a = 1.0;
    if (height_ == 0.0) return a;
    auto it = std::lower_bound(arrivals_.begin(), arrivals_.end(), t_s - cutoff_s_);
    for (; it != arrivals_.end() && *it <= t_s + cutoff_s_; ++it) {
        const double d = (t_s - *it) / sigma_s_;
        a += height_ * std::exp(-0.5 * d * d);
    }
    return a;
}

void ImpedanceEnvelope::render(std::size_t first_index, double rate_hz, std::span<double> out) const {
    if (out.empty()) return;
    const double t_first = static_cast<double>(first_index) / rate_hz;
    auto lo = std::lower_bound(arrivals_.begin(), arrivals_.end(), t_first - cutoff_s_);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = static_cast<double>(first_index + i) / rate_hz;
        double a = 1.0;
        if (height_ != 0.0) {
            while (lo != arrivals_.end() && *lo < t - cutoff_s_) ++lo;
            for (auto it = lo; it != arrivals_.end() && *it <= t + cutoff_s_; ++it) {
                const double d = (t - *it) / sigma_s_;
                a += height_ * std::exp(-0.5 * d * d);
            }
        }
        out[i] = a;
    }
}

Signal gen_impedance_envelope(const CytometryParams& p) {
    p.validate();
    const std::size_t n = sample_count(p.duration_s, p.sim_rate_hz);
    if (n == 0) throw Error("cytometry: duration_s is too short for a single sample");
    const ImpedanceEnvelope env(p);
    std::vector<double> samples(n);
    env.render(0, p.sim_rate_hz, samples);
    return Signal(std::move(samples), p.sim_rate_hz);
}

ButterworthLowpass::ButterworthLowpass(int order, double cutoff_hz, double sample_rate_hz)
    : sample_rate_hz_(sample_rate_hz) {
    if (order < 2 || order % 2 != 0) throw Error("Butterworth order must be even and >= 2");
    if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0)) {
        throw Error("low-pass cutoff must lie in (0, fs/2)");
    }
    // Prewarped analog cutoff; each section carries one conjugate pole pair.
    const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
    for (int i = 0; i < order / 2; ++i) {
        const double q = 1.0 / (2.0 * std::sin((2 * i + 1) * std::numbers::pi / (2.0 * order)));
        const double norm = 1.0 / (1.0 + k / q + k * k);
        Biquad s{};
        s.b0 = k * k * norm;
        s.b1 = 2.0 * s.b0;
        s.b2 = s.b0;
        s.a1 = 2.0 * (k * k - 1.0) * norm;
        s.a2 = (1.0 - k / q + k * k) * norm;
        sections_.push_back(s);
    }
}

double ButterworthLowpass::process(double x) {
    for (auto& s : sections_) {
        const double y = s.b0 * x + s.s1;
        s.s1 = s.b1 * x - s.a1 * y + s.s2;
        s.s2 = s.b2 * x - s.a2 * y;
        x = y;
    }
    return x;
}

void ButterworthLowpass::process(std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = process(in[i]);
}

void ButterworthLowpass::prime(double x) {
    // Unity DC gain: every section's steady output equals its input.
    for (auto& s : sections_) {
        s.s2 = s.b2 * x - s.a2 * x;
        s.s1 = s.b1 * x - s.a1 * x + s.s2;
    }
}

void ButterworthLowpass::reset() {
    for (auto& s : sections_) s.s1 = s.s2 = 0.0;
}

double ButterworthLowpass::magnitude(double f_hz) const {
    const double w = kTwoPi * f_hz / sample_rate_hz_;
    double mag = 1.0;
    for (const auto& s : sections_) {
        // Evaluate numerator and denominator polynomials in z^-1 on the unit circle.
        const double c1 = std::cos(w), s1 = std::sin(w);
        const double c2 = std::cos(2.0 * w), s2 = std::sin(2.0 * w);
        const double nr = s.b0 + s.b1 * c1 + s.b2 * c2, ni = -(s.b1 * s1 + s.b2 * s2);
        const double dr = 1.0 + s.a1 * c1 + s.a2 * c2, di = -(s.a1 * s1 + s.a2 * s2);
        mag *= std::sqrt((nr * nr + ni * ni) / (dr * dr + di * di));
    }
    return mag;
}

LockInDetector::LockInDetector(const CytometryParams& p, double sample_rate_hz)
    : f0_hz_(p.f0_hz),
      gain_(p.lock_in_gain()),
      sample_rate_hz_(sample_rate_hz),
      lpf_(4, p.lpf_cutoff_hz, sample_rate_hz) {
    if (sample_rate_hz < 4.0 * p.f0_hz) {
        throw Error("lock-in: sample rate " + format_double(sample_rate_hz) +
                    " Hz is below 4 * f0 (carrier would alias)");
    }
}

void LockInDetector::prime(double envelope_value) { lpf_.prime(gain_ * envelope_value / 2.0); }

void LockInDetector::process(std::span<const double> envelope, std::span<double> out) {
    for (std::size_t i = 0; i < envelope.size(); ++i, ++n_) {
        // Phase taken modulo one carrier period from the integer sample index.
        const double cycles = std::fmod(f0_hz_ * static_cast<double>(n_), sample_rate_hz_) / sample_rate_hz_;
        const double carrier = std::cos(kTwoPi * cycles);
        const double readout = gain_ * envelope[i] * carrier;
        out[i] = lpf_.process(readout * carrier);
    }
}

Signal lock_in_chain(const Signal& envelope, const CytometryParams& p) {
    p.validate();
    if (envelope.empty()) throw Error("lock-in: empty envelope");
    LockInDetector detector(p, envelope.sample_rate_hz());
    detector.prime(envelope[0]);
    std::vector<double> out(envelope.size());
    detector.process(envelope.samples(), out);
    return Signal(std::move(out), envelope.sample_rate_hz(), envelope.t0_s());
}

CytometryTrace synthesize_cytometry(const CytometryParams& p, double output_rate_hz) {
    p.validate();
    const double ratio = p.sim_rate_hz / output_rate_hz;
    const double k_round = std::round(ratio);
    if (k_round < 1.0 || std::abs(ratio - k_round) > 1e-9 * ratio) {
        throw Error("cytometry: sim_rate_hz must be an integer multiple of the source rate " +
                    format_double(output_rate_hz) + " Hz");
    }
    const auto k = static_cast<std::size_t>(k_round);
    const std::size_t count = sample_count(p.duration_s, output_rate_hz);
    if (count == 0) throw Error("cytometry: duration_s is too short for a single sample");

    const ImpedanceEnvelope env(p);
    LockInDetector detector(p, p.sim_rate_hz);
    detector.prime(env.at(0.0));

    std::vector<double> readout(count);
    const std::size_t total = (count - 1) * k + 1;
    constexpr std::size_t kBlock = 1 << 16;
    std::vector<double> env_block(kBlock);
    std::vector<double> out_block(kBlock);
    for (std::size_t first = 0; first < total; first += kBlock) {
        const std::size_t len = std::min(kBlock, total - first);
        std::span<double> e(env_block.data(), len);
        std::span<double> o(out_block.data(), len);
        env.render(first, p.sim_rate_hz, e);
        detector.process(e, o);
        // First multiple of k at or after `first`.
        for (std::size_t n = (first + k - 1) / k * k; n < first + len; n += k) readout[n / k] = o[n - first];
    }
    return {Signal(std::move(readout), output_rate_hz), env.arrivals()};
}

void GsrParams::validate() const {
    require(duration_s >= 0.0 && std::isfinite(duration_s), "gsr.duration_s must be finite and non-negative");
    require(sample_rate_hz > 0.0, "gsr.sample_rate_hz must be positive");
    require(random_event_rate_hz >= 0.0, "gsr.random_event_rate_hz must be non-negative");
    require(random_rise_s > 0.0 && random_decay_s > 0.0, "gsr: random event time constants must be positive");
    require(random_amplitude_min <= random_amplitude_max, "gsr: random amplitude range is inverted");
    for (const auto& e : phasic_events) {
        require(e.rise_s > 0.0 && e.decay_s > 0.0, "gsr: phasic event time constants must be positive");
    }
}

std::vector<PhasicEvent> gsr_events(const GsrParams& p) {
    std::vector<PhasicEvent> events = p.phasic_events;
    if (p.random_event_rate_hz > 0.0) {
        std::mt19937_64 rng(p.seed);
        std::exponential_distribution<double> gap(p.random_event_rate_hz);
        std::uniform_real_distribution<double> amp(p.random_amplitude_min, p.random_amplitude_max);
        for (double t = gap(rng); t < p.duration_s; t += gap(rng)) {
            events.push_back({t, amp(rng), p.random_rise_s, p.random_decay_s});
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const PhasicEvent& a, const PhasicEvent& b) { return a.onset_s < b.onset_s; });
    return events;
}

double phasic_response(const PhasicEvent& e, double t_s) {
    const double dt = t_s - e.onset_s;
    if (dt < 0.0) return 0.0;
    return e.amplitude * (1.0 - std::exp(-dt / e.rise_s)) * std::exp(-dt / e.decay_s);
}

Signal gen_gsr(const GsrParams& p) {
    p.validate();
    const std::size_t n = sample_count(p.duration_s, p.sample_rate_hz);
    if (n == 0) throw Error("gsr: duration_s is too short for a single sample");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = p.tonic_level + p.drift_rate_per_s * static_cast<double>(i) / p.sample_rate_hz;
    }
    for (const auto& e : gsr_events(p)) {
        // Responses are negligible beyond ~40 decay constants.
        const double end_s = e.onset_s + 40.0 * e.decay_s;
        auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(e.onset_s * p.sample_rate_hz)));
        for (std::size_t i = first; i < n; ++i) {
            const double t = static_cast<double>(i) / p.sample_rate_hz;
            if (t > end_s) break;
            x[i] += phasic_response(e, t);
        }
    }
    for (auto& v : x) v = std::clamp(v, p.range.lo(), p.range.hi());
    return Signal(std::move(x), p.sample_rate_hz);
}

}  // namespace ajscc
