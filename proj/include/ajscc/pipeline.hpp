#pragma once

// End-to-end orchestration of the simulated link:
//
//   sources -> AJSCC encode -> stage bias -> FM -> FDMA mux -> AWGN
//           -> windowed FFT receiver -> AJSCC decode -> post-filters -> metrics
//
// Every stage is also exposed on its own so the command-line tool can run
// the chain one step at a time over intermediate CSV files and reproduce the
// pipeline outputs exactly.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ajscc/config.hpp"
#include "ajscc/metrics.hpp"
#include "ajscc/receiver.hpp"

namespace ajscc {

// A failure inside one pipeline stage, tagged with the stage and the config
// block that drives it.
class StageError : public Error {
public:
    StageError(std::string stage, std::string config_key, const std::string& what);
    const std::string& stage() const { return stage_; }
    const std::string& config_key() const { return config_key_; }

private:
    std::string stage_;
    std::string config_key_;
};

enum class SeedStream : std::uint64_t { cytometry = 0, gsr = 1, channel = 2 };

// Independent per-sensor, per-stream seed derived from the run seed.
std::uint64_t derive_seed(std::uint64_t root, std::size_t sensor, SeedStream stream);

// ---- individual stages -------------------------------------------------

CytometryTrace generate_cytometry(const RunConfig& cfg, std::size_t sensor);
Signal generate_gsr(const RunConfig& cfg, std::size_t sensor);

struct EncodeResult {
    Signal encoded;
    std::size_t x1_clamped = 0;
    std::size_t x2_clamped = 0;
};
EncodeResult encode_stage(const Signal& x1, const Signal& x2, const RunConfig& cfg);

// Stage bias (when configured), clamp to [0, L * V_R], FM per band, FDMA sum.
// `encoded` holds one signal per configured sensor, in band order.
Signal modulate_stage(std::span<const Signal> encoded, const RunConfig& cfg);

Signal channel_stage(Signal tx, const RunConfig& cfg);

Demodulated demodulate_stage(const Signal& rx, const RunConfig& cfg, const ReceiverParams& receiver);

struct Filtered {
    ThresholdResult x1;
    Signal x2;
};
Filtered filter_stage(const Signal& x1_decoded, const Signal& x2_decoded, const RunConfig& cfg);

// ---- whole runs -------------------------------------------------------

struct SensorSources {
    Signal x1;
    Signal x2;
    std::vector<double> bead_arrivals;
    EncodeResult encode;
};

// Everything up to and including the channel; reusable across receivers.
struct LinkRecording {
    std::vector<SensorSources> sensors;
    Signal received;
};

LinkRecording simulate_link(const RunConfig& cfg);

struct SensorReport {
    std::string sensor_id;
    std::size_t windows = 0;
    ErrorMetrics x1_decoded;
    ErrorMetrics x1_filtered;
    PulseMetrics pulses;
    double theta = 0.0;
    bool theta_degenerate = false;
    std::size_t x1_clamped = 0;
    ErrorMetrics x2_decoded;
    ErrorMetrics x2_filtered;
    std::size_t x2_clamped = 0;
    // Histogram of (x2_hat - x2) in units of one quantizer step over
    // [-1, 1]; out-of-range errors land in the underflow/overflow counts.
    std::vector<double> quant_bin_edges;
    std::vector<std::size_t> quant_counts;
    std::size_t quant_underflow = 0;
    std::size_t quant_overflow = 0;
    std::vector<std::size_t> stage_occupancy;
};

struct ReconstructionReport {
    std::string scenario;
    std::uint64_t seed = 0;
    double duration_s = 0.0;
    std::vector<SensorReport> sensors;
    std::vector<std::string> warnings;
    // Wall time; kept out of report.json so repeated runs stay byte-identical.
    double runtime_s = 0.0;
};

nlohmann::json to_json(const ReconstructionReport& r);

struct SensorReconstruction {
    Signal recovered;  // encoded voltage per receiver window
    std::vector<std::size_t> peak_bins;
    Signal x1_decoded;
    Signal x2_decoded;
    Filtered filtered;
};

struct PipelineResult {
    ReconstructionReport report;
    LinkRecording recording;
    std::vector<SensorReconstruction> sensors;
};

// Demodulate, decode and filter a recording with the given receiver.
std::vector<SensorReconstruction> reconstruct(const LinkRecording& rec, const RunConfig& cfg,
                                              const ReceiverParams& receiver);

// Runs the full chain. Unless cfg.output_dir is empty, writes per-sensor CSVs
// (`<id>_x1_original.csv`, ...), plot files, report.json and
// effective_config.json into it.
PipelineResult run_pipeline(const RunConfig& cfg);

struct SweepRow {
    std::size_t ns;
    double rmse_x1;
    double rmse_x2;
    double nrmse_x1_pct;
    double nrmse_x2_pct;
    // sqrt((nrmse_x1^2 + nrmse_x2^2) / 2), in percent of range.
    double combined_nrmse_pct;
};

// Re-runs the receiver over one recorded channel output per window size and
// scores the unfiltered decoded signals (pooled over sensors).
std::vector<SweepRow> ns_sweep(const LinkRecording& rec, const RunConfig& cfg, std::span<const std::size_t> ns_values);
// Simulates the link once, sweeps, and writes ns_sweep.csv / ns_sweep.svg
// into cfg.output_dir unless it is empty.
std::vector<SweepRow> ns_sweep(const RunConfig& cfg, std::span<const std::size_t> ns_values);

// Output file names shared by the pipeline and the stage subcommands.
namespace files {
std::string sensor_file(const std::string& sensor_id, const std::string& name);
inline constexpr const char* kTransmitted = "transmitted.csv";
inline constexpr const char* kReceived = "received.csv";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kEffectiveConfig = "effective_config.json";
inline constexpr const char* kSweepTable = "ns_sweep.csv";
inline constexpr const char* kSweepPlot = "ns_sweep.svg";
}  // namespace files

// Event list file: single column `event_time_s`.
void write_events(std::span<const double> times, const std::filesystem::path& path);
std::vector<double> read_events(const std::filesystem::path& path);

}  // namespace ajscc
