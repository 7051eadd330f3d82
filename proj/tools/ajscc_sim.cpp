// ajscc-sim: command-line front end for the simulated AJSCC sensor link.
//
// `pipeline` runs the whole chain; the other subcommands run one stage each
// over CSV files so intermediate signals can be inspected or replaced.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ajscc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ajscc;

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::vector<std::string> overrides;
    std::size_t sensor = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool per_sensor) {
    cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Root seed (overrides the config)");
    cmd->add_option("--out", o.out, "Output directory (overrides the config)");
    cmd->add_option("--override", o.overrides, "Config override key=value (repeatable)");
    if (per_sensor) cmd->add_option("--sensor", o.sensor, "Sensor index in the band plan");
}

RunConfig load(const CommonOptions& o) {
    std::vector<std::string> overrides = o.overrides;
    if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
    if (!o.out.empty()) overrides.push_back("output_dir=\"" + o.out + "\"");
    RunConfig cfg = load_config(o.config.empty() ? std::nullopt : std::optional<fs::path>(o.config), overrides);
    if (cfg.output_dir.empty()) cfg.output_dir = ".";
    fs::create_directories(cfg.output_dir);
    return cfg;
}

const std::string& sensor_id(const RunConfig& cfg, std::size_t index) {
    if (index >= cfg.link.sensors.size()) {
        throw Error("--sensor " + std::to_string(index) + " is out of range; the plan has " +
                    std::to_string(cfg.link.sensors.size()) + " sensors");
    }
    return cfg.link.sensors[index].sensor_id;
}

fs::path out_file(const RunConfig& cfg, const std::string& id, const std::string& name) {
    return cfg.output_dir / files::sensor_file(id, name);
}

void print_metrics(const char* label, const ErrorMetrics& m) {
    std::printf("  %-12s rmse %.6g  nrmse %.4g%%\n", label, m.rmse, m.nrmse_pct);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulated all-analog AJSCC wearable sensor link"};
    app.require_subcommand(1);

    CommonOptions o;
    std::string in_x1, in_x2, in_file, original, recovered, events, signal_kind = "x1";
    std::vector<std::string> inputs;
    std::vector<std::size_t> ns_values{500, 1000, 5000, 20000};
    double tolerance = -1.0;

    auto* gen_cyto = app.add_subcommand("gen-cytometry", "Synthesize the cytometry readout and its bead arrivals");
    add_common(gen_cyto, o, true);

    auto* gen_gsr_cmd = app.add_subcommand("gen-gsr", "Synthesize (or replay) the GSR signal");
    add_common(gen_gsr_cmd, o, true);

    auto* encode_cmd = app.add_subcommand("encode", "AJSCC-encode an x1/x2 pair");
    add_common(encode_cmd, o, true);
    encode_cmd->add_option("--x1", in_x1, "x1 CSV")->required()->check(CLI::ExistingFile);
    encode_cmd->add_option("--x2", in_x2, "x2 CSV")->required()->check(CLI::ExistingFile);

    auto* modulate_cmd = app.add_subcommand("modulate", "FM-modulate encoded streams and FDMA-multiplex them");
    add_common(modulate_cmd, o, false);
    modulate_cmd->add_option("--in", inputs, "Encoded CSV per sensor, in band order")->required()->check(CLI::ExistingFile);

    auto* channel_cmd = app.add_subcommand("channel", "Pass a transmitted signal through the AWGN channel");
    add_common(channel_cmd, o, false);
    channel_cmd->add_option("--in", in_file, "Transmitted CSV")->required()->check(CLI::ExistingFile);

    auto* demod_cmd = app.add_subcommand("demodulate", "Recover encoded voltages per band");
    add_common(demod_cmd, o, false);
    demod_cmd->add_option("--in", in_file, "Received CSV")->required()->check(CLI::ExistingFile);

    auto* decode_cmd = app.add_subcommand("decode", "AJSCC-decode recovered voltages");
    add_common(decode_cmd, o, true);
    decode_cmd->add_option("--in", in_file, "Recovered-voltage CSV")->required()->check(CLI::ExistingFile);

    auto* filter_cmd = app.add_subcommand("filter", "Threshold-filter x1 and median-filter x2");
    add_common(filter_cmd, o, true);
    filter_cmd->add_option("--x1", in_x1, "Decoded x1 CSV")->check(CLI::ExistingFile);
    filter_cmd->add_option("--x2", in_x2, "Decoded x2 CSV")->check(CLI::ExistingFile);

    auto* metrics_cmd = app.add_subcommand("metrics", "Compare a recovered signal with its original");
    add_common(metrics_cmd, o, false);
    metrics_cmd->add_option("--original", original, "Original CSV")->required()->check(CLI::ExistingFile);
    metrics_cmd->add_option("--recovered", recovered, "Recovered CSV")->required()->check(CLI::ExistingFile);
    metrics_cmd->add_option("--events", events, "Event list CSV for pulse scoring")->check(CLI::ExistingFile);
    metrics_cmd->add_option("--signal", signal_kind, "Which range to normalize by")->check(CLI::IsMember({"x1", "x2"}));
    metrics_cmd->add_option("--tolerance", tolerance, "Pulse match tolerance in seconds (default: pulse width)");

    auto* pipeline_cmd = app.add_subcommand("pipeline", "Run the full chain and write all artifacts");
    add_common(pipeline_cmd, o, false);

    auto* sweep_cmd = app.add_subcommand("ns-sweep", "Re-run the receiver over one recording for several window sizes");
    add_common(sweep_cmd, o, false);
    sweep_cmd->add_option("--ns", ns_values, "Window sizes")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = load(o);

        if (*gen_cyto) {
            const auto& id = sensor_id(cfg, o.sensor);
            const auto trace = generate_cytometry(cfg, o.sensor);
            write_csv(trace.readout, out_file(cfg, id, "x1_original.csv"));
            write_events(trace.arrivals, out_file(cfg, id, "x1_events.csv"));
        } else if (*gen_gsr_cmd) {
            const auto& id = sensor_id(cfg, o.sensor);
            write_csv(generate_gsr(cfg, o.sensor), out_file(cfg, id, "x2_original.csv"));
        } else if (*encode_cmd) {
            const auto& id = sensor_id(cfg, o.sensor);
            const auto r = encode_stage(read_csv(in_x1), read_csv(in_x2), cfg);
            write_csv(r.encoded, out_file(cfg, id, "encoded.csv"));
            if (r.x1_clamped || r.x2_clamped) {
                std::fprintf(stderr, "warning: clamped %zu x1 and %zu x2 samples\n", r.x1_clamped, r.x2_clamped);
            }
        } else if (*modulate_cmd) {
            std::vector<Signal> encoded;
            for (const auto& f : inputs) encoded.push_back(read_csv(f));
            write_csv(modulate_stage(encoded, cfg), cfg.output_dir / files::kTransmitted);
        } else if (*channel_cmd) {
            write_csv(channel_stage(read_csv(in_file), cfg), cfg.output_dir / files::kReceived);
        } else if (*demod_cmd) {
            const auto demod = demodulate_stage(read_csv(in_file), cfg, cfg.receiver);
            for (std::size_t i = 0; i < demod.streams.size(); ++i) {
                write_csv(demod.streams[i], out_file(cfg, cfg.receiver.bands[i].sensor_id, "recovered.csv"));
            }
        } else if (*decode_cmd) {
            const auto& id = sensor_id(cfg, o.sensor);
            const auto [x1, x2] = decode_signal(read_csv(in_file), cfg.ajscc);
            write_csv(x1, out_file(cfg, id, "x1_decoded.csv"));
            write_csv(x2, out_file(cfg, id, "x2_decoded.csv"));
        } else if (*filter_cmd) {
            const auto& id = sensor_id(cfg, o.sensor);
            if (in_x1.empty() && in_x2.empty()) throw Error("filter: give --x1 and/or --x2");
            if (!in_x1.empty()) {
                const auto r = threshold_filter(read_csv(in_x1), cfg.threshold);
                write_csv(r.signal, out_file(cfg, id, "x1_filtered.csv"));
                std::printf("threshold %s%s\n", format_double(r.theta).c_str(),
                            r.degenerate ? " (constant input, fallback)" : "");
            }
            if (!in_x2.empty()) write_csv(median_filter(read_csv(in_x2), cfg.median), out_file(cfg, id, "x2_filtered.csv"));
        } else if (*metrics_cmd) {
            const auto& range = signal_kind == "x1" ? cfg.ajscc.x1_range : cfg.ajscc.x2_range;
            const Signal orig = read_csv(original);
            const Signal rec = read_csv(recovered);
            std::optional<std::vector<double>> ev;
            if (!events.empty()) ev = read_events(events);
            const double tol = tolerance >= 0.0 ? tolerance : cfg.cytometry.pulse_width_s;
            const auto m = ev ? compute_metrics(orig, rec, range, std::span<const double>(*ev), tol)
                              : compute_metrics(orig, rec, range);
            nlohmann::json j{{"mse", m.error.mse}, {"rmse", m.error.rmse}, {"nrmse_pct", m.error.nrmse_pct},
                             {"samples", m.error.samples}};
            if (m.pulses) {
                j["pulses"] = {{"precision", m.pulses->precision}, {"recall", m.pulses->recall},
                               {"matched", m.pulses->matched},     {"detected", m.pulses->detected},
                               {"expected", m.pulses->expected},   {"tolerance_s", m.pulses->tolerance_s}};
            }
            std::cout << j.dump(2) << '\n';
        } else if (*pipeline_cmd) {
            const auto result = run_pipeline(cfg);
            for (const auto& s : result.report.sensors) {
                std::printf("%s: %zu windows\n", s.sensor_id.c_str(), s.windows);
                print_metrics("x1 decoded", s.x1_decoded);
                print_metrics("x2 decoded", s.x2_decoded);
                print_metrics("x2 filtered", s.x2_filtered);
                std::printf("  pulses       recall %.3f  precision %.3f  (%zu events, theta %.4g)\n", s.pulses.recall,
                            s.pulses.precision, s.pulses.expected, s.theta);
            }
            for (const auto& w : result.report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
            std::printf("runtime %.2f s, outputs in %s\n", result.report.runtime_s, cfg.output_dir.string().c_str());
        } else if (*sweep_cmd) {
            const auto rows = ns_sweep(cfg, ns_values);
            std::printf("%8s %12s %12s %14s\n", "ns", "rmse_x1", "rmse_x2", "combined_%");
            for (const auto& r : rows) {
                std::printf("%8zu %12.6g %12.6g %14.4g\n", r.ns, r.rmse_x1, r.rmse_x2, r.combined_nrmse_pct);
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
