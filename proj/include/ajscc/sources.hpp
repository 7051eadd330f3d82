#pragma once

// Source signal synthesis: an impedance-cytometry readout produced by a
// simulated lock-in detection chain, and a GSR-like skin-conductance trace.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ajscc/signal.hpp"

namespace ajscc {

// Mean transit time of a bead across a channel-width electrode gap at the
// given volumetric flow: (channel width + bead diameter) / mean velocity.
constexpr double transit_pulse_width_s(double flow_ul_per_min, double channel_width_um,
                                       double channel_height_um, double bead_diameter_um) {
    const double flow_m3_per_s = flow_ul_per_min * 1e-9 / 60.0;
    const double area_m2 = channel_width_um * 1e-6 * channel_height_um * 1e-6;
    const double velocity_m_per_s = flow_m3_per_s / area_m2;
    return (channel_width_um + bead_diameter_um) * 1e-6 / velocity_m_per_s;
}

struct CytometryParams {
    double f0_hz = 500e3;
    double excitation_amplitude_v = 0.2;
    double baseline_r_ohm = 10e3;
    double delta_r_ohm = 60e3;
    double rf_ohm = 10e3;
    // 30 um x 20 um channel, 0.1 uL/min, 7.8 um beads: about 13.6 ms.
    double pulse_width_s = transit_pulse_width_s(0.1, 30.0, 20.0, 7.8);
    double event_rate_hz = 1.0;
    double lpf_cutoff_hz = 10e3;
    double duration_s = 60.0;
    // Rate of the carrier-level simulation; must be at least 4 * f0.
    double sim_rate_hz = 2e6;
    // +1: impedance pulses raise the readout, -1: they lower it.
    int pulse_polarity = 1;
    std::uint64_t seed = 1;

    double lock_in_gain() const { return rf_ohm / baseline_r_ohm * excitation_amplitude_v; }
    void validate() const;
};

// Bead arrival times of a homogeneous Poisson process on [0, duration).
std::vector<double> bead_arrivals(const CytometryParams& p);

// Dimensionless readout envelope A(t) = 1 + polarity * (dR/R) * sum of
// unit-height Gaussian bumps (FWHM = pulse width) centred on each arrival.
class ImpedanceEnvelope {
public:
    explicit ImpedanceEnvelope(const CytometryParams& p);
    ImpedanceEnvelope(const CytometryParams& p, std::vector<double> arrivals);

    const std::vector<double>& arrivals() const { return arrivals_; }
    double at(double t_s) const;
    // Envelope at t = (first_index + i) / rate for each output slot.
    void render(std::size_t first_index, double rate_hz, std::span<double> out) const;

private:
    std::vector<double> arrivals_;
    double height_;
    double sigma_s_;
    double cutoff_s_;
};

// Envelope sampled at p.sim_rate_hz over p.duration_s.
Signal gen_impedance_envelope(const CytometryParams& p);

// Butterworth low-pass as a cascade of bilinear-transform biquads
// (transposed direct form II). Even orders only; unity gain at DC.
class ButterworthLowpass {
public:
    ButterworthLowpass(int order, double cutoff_hz, double sample_rate_hz);

    double process(double x);
    void process(std::span<const double> in, std::span<double> out);
    // Sets the state to the steady response for a constant input `x`.
    void prime(double x);
    void reset();

    // |H(e^{j 2 pi f / fs})| evaluated from the designed coefficients.
    double magnitude(double f_hz) const;
    int order() const { return static_cast<int>(sections_.size()) * 2; }

private:
    struct Biquad {
        double b0, b1, b2, a1, a2;
        double s1 = 0.0, s2 = 0.0;
    };
    std::vector<Biquad> sections_;
    double sample_rate_hz_;
};

// Streaming excitation -> lock-in gain -> mixer -> low-pass. Feeds envelope
// samples at `sample_rate_hz` and emits the baseband readout, which settles
// to gain * A(t) / 2.
class LockInDetector {
public:
    LockInDetector(const CytometryParams& p, double sample_rate_hz);

    void prime(double envelope_value);
    void process(std::span<const double> envelope, std::span<double> out);

private:
    double f0_hz_;
    double gain_;
    double sample_rate_hz_;
    std::uint64_t n_ = 0;
    ButterworthLowpass lpf_;
};

// Whole-signal lock-in chain. The envelope rate must be at least 4 * f0.
Signal lock_in_chain(const Signal& envelope, const CytometryParams& p);

struct CytometryTrace {
    Signal readout;                // lock-in output at the requested rate
    std::vector<double> arrivals;  // bead arrival times (s)
};

// Runs envelope -> lock-in at p.sim_rate_hz in blocks and keeps every k-th
// output sample, k = sim_rate / output_rate (must be an integer).
CytometryTrace synthesize_cytometry(const CytometryParams& p, double output_rate_hz);

struct PhasicEvent {
    double onset_s;
    double amplitude;
    double rise_s;
    double decay_s;
};

struct GsrParams {
    double tonic_level = 0.25;
    double drift_rate_per_s = 0.001;
    std::vector<PhasicEvent> phasic_events;
    // Extra Poisson-timed phasic responses drawn from the seed.
    double random_event_rate_hz = 0.1;
    double random_amplitude_min = 0.1;
    double random_amplitude_max = 0.3;
    double random_rise_s = 1.0;
    double random_decay_s = 5.0;
    double duration_s = 60.0;
    double sample_rate_hz = 100.0;
    ValueRange range{0.0, 1.0};
    std::uint64_t seed = 2;

    void validate() const;
};

// Explicit events followed by the seeded random ones, sorted by onset.
std::vector<PhasicEvent> gsr_events(const GsrParams& p);

// amplitude * (1 - exp(-t/rise)) * exp(-t/decay) for t >= 0, else 0.
double phasic_response(const PhasicEvent& e, double t_s);

// Tonic level + linear drift + phasic responses, clamped to p.range.
Signal gen_gsr(const GsrParams& p);

}  // namespace ajscc
