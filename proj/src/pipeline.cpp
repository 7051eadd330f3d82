#include "ajscc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "ajscc/svg_plot.hpp"

namespace ajscc {

using nlohmann::json;

StageError::StageError(std::string stage, std::string config_key, const std::string& what)
    : Error("stage '" + stage + "' (config: " + config_key + "): " + what),
      stage_(std::move(stage)),
      config_key_(std::move(config_key)) {}

namespace {

template <typename F>
auto in_stage(const std::string& stage, const std::string& config_key, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const ConfigError& e) {
        throw StageError(stage, e.key(), e.what());
    } catch (const Error& e) {
        throw StageError(stage, config_key, e.what());
    }
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::size_t sample_count(double duration_s, double rate_hz) {
    return static_cast<std::size_t>(std::floor(duration_s * rate_hz * (1.0 + 1e-12)));
}

json metrics_json(const ErrorMetrics& m) {
    return {{"mse", m.mse}, {"rmse", m.rmse}, {"nrmse_pct", m.nrmse_pct}, {"samples", m.samples}};
}

json pulses_json(const PulseMetrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall},     {"matched", m.matched},
            {"detected", m.detected},   {"expected", m.expected}, {"tolerance_s", m.tolerance_s}};
}

SensorReport score_sensor(const SensorSources& src, const SensorReconstruction& rec, const RunConfig& cfg,
                          const std::string& sensor_id) {
    SensorReport r;
    r.sensor_id = sensor_id;
    r.windows = rec.recovered.size();
    r.x1_decoded = error_metrics(src.x1, rec.x1_decoded, cfg.ajscc.x1_range);
    r.x1_filtered = error_metrics(src.x1, rec.filtered.x1.signal, cfg.ajscc.x1_range);
    r.x2_decoded = error_metrics(src.x2, rec.x2_decoded, cfg.ajscc.x2_range);
    r.x2_filtered = error_metrics(src.x2, rec.filtered.x2, cfg.ajscc.x2_range);
    r.theta = rec.filtered.x1.theta;
    r.theta_degenerate = rec.filtered.x1.degenerate;
    r.x1_clamped = src.encode.x1_clamped;
    r.x2_clamped = src.encode.x2_clamped;

    // Only arrivals inside the span the receiver covered can be found.
    const double covered_end = rec.recovered.t0_s() + rec.recovered.duration_s();
    std::vector<double> expected;
    for (double t : src.bead_arrivals) {
        if (t >= rec.recovered.t0_s() && t < covered_end) expected.push_back(t);
    }
    r.pulses = match_pulses(expected, detect_pulses(rec.filtered.x1.signal), cfg.cytometry.pulse_width_s);

    constexpr int kBins = 20;
    for (int i = 0; i <= kBins; ++i) r.quant_bin_edges.push_back(-1.0 + 2.0 * i / kBins);
    r.quant_counts.assign(kBins, 0);
    const double step = cfg.ajscc.x2_range.width() / (cfg.ajscc.levels_l - 1);
    const Signal held = resample_zoh(rec.x2_decoded, src.x2.sample_rate_hz(), src.x2.t0_s(), r.x2_decoded.samples);
    for (std::size_t i = 0; i < held.size(); ++i) {
        const double e = (held[i] - src.x2[i]) / step;
        if (e < -1.0) {
            ++r.quant_underflow;
        } else if (e > 1.0) {
            ++r.quant_overflow;
        } else {
            ++r.quant_counts[std::min(kBins - 1, static_cast<int>(std::floor((e + 1.0) / 2.0 * kBins)))];
        }
    }
    r.stage_occupancy.assign(static_cast<std::size_t>(cfg.ajscc.levels_l), 0);
    for (double v : rec.recovered.samples()) ++r.stage_occupancy[static_cast<std::size_t>(stage_of(v, cfg.ajscc))];
    return r;
}

void write_plots(const std::filesystem::path& dir, const std::string& id, const SensorSources& src,
                 const SensorReconstruction& rec) {
    const std::vector<PlotPanel> sources{
        {"microfluidic (cytometry) x1", "time (s)", "V", {series_from(src.x1, "x1", "#1f77b4")}},
        {"physiological (GSR) x2", "time (s)", "normalized", {series_from(src.x2, "x2", "#2ca02c")}},
        {"AJSCC encoded voltage", "time (s)", "V", {series_from(src.encode.encoded, "encoded", "#d62728")}}};
    write_svg(dir / files::sensor_file(id, "fig_sources.svg"), "Transmitter signals (" + id + ")", sources);

    const std::vector<PlotPanel> x1{
        {"decoded x1, before filtering", "time (s)", "V", {series_from(rec.x1_decoded, "decoded", "#1f77b4")}},
        {"decoded x1, after threshold filter", "time (s)", "V",
         {series_from(rec.filtered.x1.signal, "filtered", "#ff7f0e")}}};
    write_svg(dir / files::sensor_file(id, "fig_x1_decoded.svg"), "Decoded microfluidic signal (" + id + ")", x1);

    const std::vector<PlotPanel> x2{
        {"decoded x2, before filtering", "time (s)", "normalized", {series_from(rec.x2_decoded, "decoded", "#2ca02c")}},
        {"decoded x2, after median filter", "time (s)", "normalized",
         {series_from(rec.filtered.x2, "filtered", "#9467bd")}}};
    write_svg(dir / files::sensor_file(id, "fig_x2_decoded.svg"), "Decoded physiological signal (" + id + ")", x2);
}

void write_effective_config(const RunConfig& cfg, const std::filesystem::path& path) {
    // The output location is an invocation detail, not part of the experiment.
    json j = to_json(cfg);
    j.erase("output_dir");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::size_t sensor, SeedStream stream) {
    return splitmix64(splitmix64(root) ^ (static_cast<std::uint64_t>(sensor) * 4 + static_cast<std::uint64_t>(stream)));
}

std::string files::sensor_file(const std::string& sensor_id, const std::string& name) { return sensor_id + "_" + name; }

void write_events(std::span<const double> times, const std::filesystem::path& path) {
    Table t{{"event_time_s"}, {}};
    for (double v : times) t.rows.push_back({v});
    write_table(t, path);
}

std::vector<double> read_events(const std::filesystem::path& path) {
    const Table t = read_table(path);
    if (t.header.size() != 1 || t.header[0] != "event_time_s") {
        throw ParseError(path.string(), 1, "expected header 'event_time_s'");
    }
    std::vector<double> out;
    for (const auto& row : t.rows) out.push_back(row[0]);
    return out;
}

CytometryTrace generate_cytometry(const RunConfig& cfg, std::size_t sensor) {
    return in_stage("gen-cytometry", "cytometry", [&] {
        CytometryParams p = cfg.cytometry;
        p.duration_s = cfg.duration_s;
        p.seed = derive_seed(cfg.seed, sensor, SeedStream::cytometry);
        return synthesize_cytometry(p, cfg.source_rate_hz());
    });
}

Signal generate_gsr(const RunConfig& cfg, std::size_t sensor) {
    if (cfg.gsr_csv) {
        return in_stage("gen-gsr", "gsr.csv_path", [&] {
            const Signal recorded = read_csv(*cfg.gsr_csv);
            const std::size_t n = sample_count(cfg.duration_s, cfg.source_rate_hz());
            if (n == 0) throw Error("duration_s is too short for a single sample");
            Signal held = resample_zoh(recorded, cfg.source_rate_hz(), 0.0, n);
            std::vector<double> x = std::move(held).take_samples();
            for (auto& v : x) v = std::clamp(v, cfg.gsr.range.lo(), cfg.gsr.range.hi());
            return Signal(std::move(x), cfg.source_rate_hz());
        });
    }
    return in_stage("gen-gsr", "gsr", [&] {
        GsrParams p = cfg.gsr;
        p.duration_s = cfg.duration_s;
        p.sample_rate_hz = cfg.source_rate_hz();
        p.seed = derive_seed(cfg.seed, sensor, SeedStream::gsr);
        return gen_gsr(p);
    });
}

EncodeResult encode_stage(const Signal& x1, const Signal& x2, const RunConfig& cfg) {
    return in_stage("encode", "ajscc", [&] {
        EncodeResult r;
        std::vector<double> scratch(x1.size());
        r.x1_clamped = normalize_all(x1.samples(), cfg.ajscc.x1_range, scratch);
        scratch.resize(x2.size());
        r.x2_clamped = normalize_all(x2.samples(), cfg.ajscc.x2_range, scratch);
        r.encoded = encode_signal(x1, x2, cfg.ajscc);
        return r;
    });
}

Signal modulate_stage(std::span<const Signal> encoded, const RunConfig& cfg) {
    return in_stage("modulate", "link", [&] {
        if (encoded.size() != cfg.link.sensors.size()) {
            throw Error("got " + std::to_string(encoded.size()) + " encoded streams for " +
                        std::to_string(cfg.link.sensors.size()) + " configured sensors");
        }
        std::vector<Signal> tones;
        for (std::size_t i = 0; i < encoded.size(); ++i) {
            Signal v = cfg.link.stage_offsets_v.empty()
                           ? encoded[i]
                           : stage_bias_impairment(encoded[i], cfg.link.stage_offsets_v, cfg.ajscc);
            std::vector<double> clamped = std::move(v).take_samples();
            for (auto& s : clamped) s = std::clamp(s, 0.0, cfg.ajscc.max_voltage());
            const Signal held(std::move(clamped), encoded[i].sample_rate_hz(), encoded[i].t0_s());
            tones.push_back(fm_modulate(held, cfg.link.sensors[i], cfg.link));
        }
        if (tones.size() == 1) return std::move(tones.front());
        return fdma_mux(tones);
    });
}

Signal channel_stage(Signal tx, const RunConfig& cfg) {
    return in_stage("channel", "link.snr_db",
                    [&] { return awgn(std::move(tx), cfg.link.snr_db, derive_seed(cfg.seed, 0, SeedStream::channel)); });
}

Demodulated demodulate_stage(const Signal& rx, const RunConfig& cfg, const ReceiverParams& receiver) {
    return in_stage("demodulate", "receiver", [&] {
        if (rx.sample_rate_hz() != receiver.fs_hz) {
            throw Error("received signal rate " + format_double(rx.sample_rate_hz()) + " Hz differs from receiver.fs_hz");
        }
        return demodulate_stream(rx, receiver, cfg.link.kf_hz_per_v, cfg.ajscc.max_voltage());
    });
}

Filtered filter_stage(const Signal& x1_decoded, const Signal& x2_decoded, const RunConfig& cfg) {
    auto x1 = in_stage("filter", "threshold", [&] { return threshold_filter(x1_decoded, cfg.threshold); });
    auto x2 = in_stage("filter", "median", [&] { return median_filter(x2_decoded, cfg.median); });
    return {std::move(x1), std::move(x2)};
}

LinkRecording simulate_link(const RunConfig& cfg) {
    in_stage("config", "<root>", [&] {
        cfg.validate();
        return 0;
    });
    LinkRecording rec;
    std::vector<Signal> encoded;
    for (std::size_t i = 0; i < cfg.link.sensors.size(); ++i) {
        SensorSources s;
        auto trace = generate_cytometry(cfg, i);
        s.x1 = std::move(trace.readout);
        s.bead_arrivals = std::move(trace.arrivals);
        s.x2 = generate_gsr(cfg, i);
        s.encode = encode_stage(s.x1, s.x2, cfg);
        encoded.push_back(s.encode.encoded);
        rec.sensors.push_back(std::move(s));
    }
    rec.received = channel_stage(modulate_stage(encoded, cfg), cfg);
    return rec;
}

std::vector<SensorReconstruction> reconstruct(const LinkRecording& rec, const RunConfig& cfg,
                                              const ReceiverParams& receiver) {
    Demodulated demod = demodulate_stage(rec.received, cfg, receiver);
    std::vector<SensorReconstruction> out;
    for (std::size_t i = 0; i < demod.streams.size(); ++i) {
        SensorReconstruction s;
        s.recovered = std::move(demod.streams[i]);
        s.peak_bins = std::move(demod.peak_bins[i]);
        auto [x1, x2] = in_stage("decode", "ajscc", [&] { return decode_signal(s.recovered, cfg.ajscc); });
        s.x1_decoded = std::move(x1);
        s.x2_decoded = std::move(x2);
        s.filtered = filter_stage(s.x1_decoded, s.x2_decoded, cfg);
        out.push_back(std::move(s));
    }
    return out;
}

nlohmann::json to_json(const ReconstructionReport& r) {
    json sensors = json::array();
    for (const auto& s : r.sensors) {
        sensors.push_back(
            {{"sensor_id", s.sensor_id},
             {"windows", s.windows},
             {"x1",
              {{"decoded", metrics_json(s.x1_decoded)},
               {"filtered", metrics_json(s.x1_filtered)},
               {"threshold", {{"theta", s.theta}, {"degenerate", s.theta_degenerate}}},
               {"pulses", pulses_json(s.pulses)},
               {"clamped_samples", s.x1_clamped}}},
             {"x2",
              {{"decoded", metrics_json(s.x2_decoded)},
               {"filtered", metrics_json(s.x2_filtered)},
               {"clamped_samples", s.x2_clamped},
               {"quantization_error_histogram",
                {{"bin_edges_steps", s.quant_bin_edges},
                 {"counts", s.quant_counts},
                 {"underflow", s.quant_underflow},
                 {"overflow", s.quant_overflow}}},
               {"stage_occupancy", s.stage_occupancy}}}});
    }
    return {{"scenario", r.scenario},
            {"seed", r.seed},
            {"duration_s", r.duration_s},
            {"sensors", sensors},
            {"warnings", r.warnings}};
}

PipelineResult run_pipeline(const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    PipelineResult result;
    result.recording = simulate_link(cfg);
    result.sensors = reconstruct(result.recording, cfg, cfg.receiver);

    auto& report = result.report;
    report.scenario = cfg.scenario;
    report.seed = cfg.seed;
    report.duration_s = cfg.duration_s;
    for (std::size_t i = 0; i < result.sensors.size(); ++i) {
        const auto& id = cfg.link.sensors[i].sensor_id;
        report.sensors.push_back(in_stage("metrics", "<root>", [&] {
            return score_sensor(result.recording.sensors[i], result.sensors[i], cfg, id);
        }));
        const auto& s = report.sensors.back();
        if (s.theta_degenerate) report.warnings.push_back(id + ": decoded x1 is constant; threshold fell back to its value");
        if (s.x1_clamped) report.warnings.push_back(id + ": " + std::to_string(s.x1_clamped) + " x1 samples clamped to ajscc.x1_range");
        if (s.x2_clamped) report.warnings.push_back(id + ": " + std::to_string(s.x2_clamped) + " x2 samples clamped to ajscc.x2_range");
    }

    if (!cfg.output_dir.empty()) {
        in_stage("write", "output_dir", [&] {
            const auto& dir = cfg.output_dir;
            std::filesystem::create_directories(dir);
            for (std::size_t i = 0; i < result.sensors.size(); ++i) {
                const auto& id = cfg.link.sensors[i].sensor_id;
                const auto& src = result.recording.sensors[i];
                const auto& rec = result.sensors[i];
                write_csv(src.x1, dir / files::sensor_file(id, "x1_original.csv"));
                write_events(src.bead_arrivals, dir / files::sensor_file(id, "x1_events.csv"));
                write_csv(src.x2, dir / files::sensor_file(id, "x2_original.csv"));
                write_csv(src.encode.encoded, dir / files::sensor_file(id, "encoded.csv"));
                write_csv(rec.recovered, dir / files::sensor_file(id, "recovered.csv"));
                write_csv(rec.x1_decoded, dir / files::sensor_file(id, "x1_decoded.csv"));
                write_csv(rec.x2_decoded, dir / files::sensor_file(id, "x2_decoded.csv"));
                write_csv(rec.filtered.x1.signal, dir / files::sensor_file(id, "x1_filtered.csv"));
                write_csv(rec.filtered.x2, dir / files::sensor_file(id, "x2_filtered.csv"));
                if (cfg.write_plots) {
                    try {
                        write_plots(dir, id, src, rec);
                    } catch (const std::exception& e) {
                        report.warnings.push_back(id + ": plot output failed: " + e.what());
                    }
                }
            }
            if (cfg.write_received) write_csv(result.recording.received, dir / files::kReceived);
            write_effective_config(cfg, dir / files::kEffectiveConfig);
            std::ofstream out(dir / files::kReport, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write report.json");
            out << to_json(report).dump(2) << '\n';
            return 0;
        });
    }
    report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::vector<SweepRow> ns_sweep(const LinkRecording& rec, const RunConfig& cfg, std::span<const std::size_t> ns_values) {
    std::vector<SweepRow> rows;
    for (const std::size_t ns : ns_values) {
        ReceiverParams receiver = cfg.receiver;
        receiver.ns = ns;
        if (ns > rec.received.size()) {
            throw StageError("ns-sweep", "receiver.ns",
                             "ns = " + std::to_string(ns) + " exceeds the recording length of " +
                                 std::to_string(rec.received.size()) + " samples");
        }
        const auto sensors = reconstruct(rec, cfg, receiver);
        double se1 = 0.0, se2 = 0.0;
        std::size_t n1 = 0, n2 = 0;
        for (std::size_t i = 0; i < sensors.size(); ++i) {
            const auto m1 = error_metrics(rec.sensors[i].x1, sensors[i].x1_decoded, cfg.ajscc.x1_range);
            const auto m2 = error_metrics(rec.sensors[i].x2, sensors[i].x2_decoded, cfg.ajscc.x2_range);
            se1 += m1.mse * static_cast<double>(m1.samples);
            se2 += m2.mse * static_cast<double>(m2.samples);
            n1 += m1.samples;
            n2 += m2.samples;
        }
        SweepRow row{};
        row.ns = ns;
        row.rmse_x1 = std::sqrt(se1 / static_cast<double>(n1));
        row.rmse_x2 = std::sqrt(se2 / static_cast<double>(n2));
        row.nrmse_x1_pct = 100.0 * row.rmse_x1 / cfg.ajscc.x1_range.width();
        row.nrmse_x2_pct = 100.0 * row.rmse_x2 / cfg.ajscc.x2_range.width();
        row.combined_nrmse_pct =
            std::sqrt((row.nrmse_x1_pct * row.nrmse_x1_pct + row.nrmse_x2_pct * row.nrmse_x2_pct) / 2.0);
        rows.push_back(row);
    }
    return rows;
}

std::vector<SweepRow> ns_sweep(const RunConfig& cfg, std::span<const std::size_t> ns_values) {
    const LinkRecording rec = simulate_link(cfg);
    auto rows = ns_sweep(rec, cfg, ns_values);
    if (!cfg.output_dir.empty()) {
        in_stage("write", "output_dir", [&] {
            std::filesystem::create_directories(cfg.output_dir);
            Table t{{"ns", "rmse_x1", "rmse_x2", "nrmse_x1_pct", "nrmse_x2_pct", "combined_nrmse_pct"}, {}};
            PlotSeries x1{"x1 NRMSE (%)", {}, {}, "#1f77b4", true};
            PlotSeries x2{"x2 NRMSE (%)", {}, {}, "#2ca02c", true};
            PlotSeries both{"combined NRMSE (%)", {}, {}, "#d62728", true};
            for (const auto& r : rows) {
                t.rows.push_back({static_cast<double>(r.ns), r.rmse_x1, r.rmse_x2, r.nrmse_x1_pct, r.nrmse_x2_pct,
                                  r.combined_nrmse_pct});
                const double lx = std::log10(static_cast<double>(r.ns));
                x1.x.push_back(lx), x1.y.push_back(r.nrmse_x1_pct);
                x2.x.push_back(lx), x2.y.push_back(r.nrmse_x2_pct);
                both.x.push_back(lx), both.y.push_back(r.combined_nrmse_pct);
            }
            write_table(t, cfg.output_dir / files::kSweepTable);
            if (cfg.write_plots) {
                try {
                    const std::vector<PlotPanel> panels{{"reconstruction error vs. FFT window", "log10(ns)", "NRMSE (%)", {x1, x2, both}}};
                    write_svg(cfg.output_dir / files::kSweepPlot, "Window-size sweep", panels);
                } catch (const std::exception&) {
                    // Plots are best-effort; the table is the result.
                }
            }
            write_effective_config(cfg, cfg.output_dir / files::kEffectiveConfig);
            return 0;
        });
    }
    return rows;
}

}  // namespace ajscc
