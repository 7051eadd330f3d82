#include "ajscc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace ajscc {

using nlohmann::json;

namespace {

json range_json(const ValueRange& r) { return json::array({r.lo(), r.hi()}); }

json snr_json(double snr_db) { return std::isinf(snr_db) ? json("inf") : json(snr_db); }

json band_json(const SensorBand& b) {
    return {{"sensor_id", b.sensor_id},
            {"f_base_hz", b.f_base_hz},
            {"band_width_hz", b.band_width_hz},
            {"guard_hz", b.guard_hz}};
}

json bands_json(const std::vector<SensorBand>& bands) {
    json arr = json::array();
    for (const auto& b : bands) arr.push_back(band_json(b));
    return arr;
}

// Typed access to a resolved document with dotted-path diagnostics.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    Reader at(const std::string& key) const { return Reader(j_.at(key), join(key)); }
    bool is_null(const std::string& key) const { return j_.at(key).is_null(); }
    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }

    double num(const std::string& key) const {
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(join(key), "expected a number");
        return v.get<double>();
    }
    std::int64_t integer(const std::string& key) const {
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(join(key), "expected an integer");
        return v.get<std::int64_t>();
    }
    std::size_t count(const std::string& key) const {
        const auto v = integer(key);
        if (v < 0) throw ConfigError(join(key), "must be non-negative");
        return static_cast<std::size_t>(v);
    }
    std::uint64_t seed(const std::string& key) const {
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw ConfigError(join(key), "expected a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }
    bool boolean(const std::string& key) const {
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(join(key), "expected true or false");
        return v.get<bool>();
    }
    std::string str(const std::string& key) const {
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(join(key), "expected a string");
        return v.get<std::string>();
    }
    ValueRange range(const std::string& key) const {
        const auto& v = j_.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw ConfigError(join(key), "expected [lo, hi]");
        }
        try {
            return ValueRange(v[0].get<double>(), v[1].get<double>());
        } catch (const Error& e) {
            throw ConfigError(join(key), e.what());
        }
    }
    double snr(const std::string& key) const {
        const auto& v = j_.at(key);
        if (v.is_null() || (v.is_string() && (v == "inf" || v == "+inf"))) return kNoiseDisabled;
        if (!v.is_number()) throw ConfigError(join(key), "expected a number or \"inf\"");
        return v.get<double>();
    }
    std::vector<double> numbers(const std::string& key) const {
        const auto& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(join(key), "expected an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(join(key), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }
    template <typename F>
    auto parse_enum(const std::string& key, F&& from_string) const {
        try {
            return from_string(str(key));
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(join(key), e.what());
        }
    }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const json& j_;
    std::string path_;
};

void deep_merge(json& base, const json& patch) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
            deep_merge(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

void reject_unknown(const json& doc, const json& schema, const std::string& path) {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!schema.contains(it.key())) throw ConfigError(key, "unknown key");
        if (it.value().is_object() && schema[it.key()].is_object()) reject_unknown(it.value(), schema[it.key()], key);
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError(assignment, "override must look like key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty()) throw ConfigError(key, "empty path segment");
        if (!node->is_object()) throw ConfigError(key, "path does not lead through an object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

SensorBand parse_band(const Reader& r) {
    SensorBand b;
    b.sensor_id = r.str("sensor_id");
    b.f_base_hz = r.num("f_base_hz");
    b.band_width_hz = r.num("band_width_hz");
    b.guard_hz = r.num("guard_hz");
    return b;
}

std::vector<SensorBand> parse_bands(const Reader& r, const std::string& key) {
    const auto& arr = r.raw().at(key);
    if (!arr.is_array()) throw ConfigError(r.join(key), "expected an array of bands");
    std::vector<SensorBand> bands;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        bands.push_back(parse_band(Reader(arr[i], r.join(key) + "[" + std::to_string(i) + "]")));
    }
    return bands;
}

template <typename F>
void checked(const std::string& key, F&& check) {
    try {
        check();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(key, e.what());
    }
}

}  // namespace

nlohmann::json default_config_json() {
    RunConfig c;
    json j = to_json(c);
    j["link"]["kf_hz_per_v"] = nullptr;
    j["link"]["num_sensors"] = nullptr;
    j["link"]["sensors"] = nullptr;
    j["link"]["hold_window"] = nullptr;
    j["receiver"]["fs_hz"] = nullptr;
    j["receiver"]["bands"] = nullptr;
    return j;
}

nlohmann::json to_json(const RunConfig& c) {
    json events = json::array();
    for (const auto& e : c.gsr.phasic_events) {
        events.push_back({{"onset_s", e.onset_s}, {"amplitude", e.amplitude}, {"rise_s", e.rise_s}, {"decay_s", e.decay_s}});
    }
    json j;
    j["scenario"] = c.scenario;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir.string();
    j["duration_s"] = c.duration_s;
    j["cytometry"] = {{"f0_hz", c.cytometry.f0_hz},
                      {"excitation_amplitude_v", c.cytometry.excitation_amplitude_v},
                      {"baseline_r_ohm", c.cytometry.baseline_r_ohm},
                      {"delta_r_ohm", c.cytometry.delta_r_ohm},
                      {"rf_ohm", c.cytometry.rf_ohm},
                      {"pulse_width_s", c.cytometry.pulse_width_s},
                      {"event_rate_hz", c.cytometry.event_rate_hz},
                      {"lpf_cutoff_hz", c.cytometry.lpf_cutoff_hz},
                      {"sim_rate_hz", c.cytometry.sim_rate_hz},
                      {"pulse_polarity", c.cytometry.pulse_polarity}};
    j["gsr"] = {{"tonic_level", c.gsr.tonic_level},
                {"drift_rate_per_s", c.gsr.drift_rate_per_s},
                {"phasic_events", events},
                {"random_event_rate_hz", c.gsr.random_event_rate_hz},
                {"random_amplitude_min", c.gsr.random_amplitude_min},
                {"random_amplitude_max", c.gsr.random_amplitude_max},
                {"random_rise_s", c.gsr.random_rise_s},
                {"random_decay_s", c.gsr.random_decay_s},
                {"range", range_json(c.gsr.range)},
                {"csv_path", c.gsr_csv ? json(c.gsr_csv->string()) : json(nullptr)}};
    j["ajscc"] = {{"levels_l", c.ajscc.levels_l},
                  {"v_r", c.ajscc.v_r},
                  {"x1_range", range_json(c.ajscc.x1_range)},
                  {"x2_range", range_json(c.ajscc.x2_range)},
                  {"folding", to_string(c.ajscc.folding)}};
    j["link"] = {{"fs_hz", c.link.fs_hz},
                 {"kf_hz_per_v", c.link.kf_hz_per_v},
                 {"num_sensors", c.link.sensors.size()},
                 {"sensors", bands_json(c.link.sensors)},
                 {"snr_db", snr_json(c.link.snr_db)},
                 {"hold_window", c.link.hold_window},
                 {"stage_offsets_v", c.link.stage_offsets_v}};
    j["receiver"] = {{"fs_hz", c.receiver.fs_hz},
                     {"ns", c.receiver.ns},
                     {"hop", c.receiver.hop},
                     {"window_fn", to_string(c.receiver.window_fn)},
                     {"interpolation", to_string(c.receiver.interpolation)},
                     {"bands", bands_json(c.receiver.bands)}};
    j["threshold"] = {{"mode", to_string(c.threshold.mode)},
                      {"theta", c.threshold.theta},
                      {"auto_percentile", c.threshold.auto_percentile},
                      {"auto_margin", c.threshold.auto_margin}};
    j["median"] = {{"order_k", c.median.order_k}, {"edge_policy", to_string(c.median.edge_policy)}};
    j["outputs"] = {{"write_received", c.write_received}, {"plots", c.write_plots}};
    return j;
}

RunConfig resolve_config(const nlohmann::json& user, const std::vector<std::string>& overrides) {
    if (!user.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
    const json schema = default_config_json();
    json doc = schema;
    deep_merge(doc, user);
    for (const auto& o : overrides) apply_override(doc, o);
    reject_unknown(doc, schema, "");

    const Reader root(doc, "");
    RunConfig c;
    c.scenario = root.str("scenario");
    c.seed = root.seed("seed");
    c.output_dir = root.str("output_dir");
    c.duration_s = root.num("duration_s");

    const auto cy = root.at("cytometry");
    c.cytometry.f0_hz = cy.num("f0_hz");
    c.cytometry.excitation_amplitude_v = cy.num("excitation_amplitude_v");
    c.cytometry.baseline_r_ohm = cy.num("baseline_r_ohm");
    c.cytometry.delta_r_ohm = cy.num("delta_r_ohm");
    c.cytometry.rf_ohm = cy.num("rf_ohm");
    c.cytometry.pulse_width_s = cy.num("pulse_width_s");
    c.cytometry.event_rate_hz = cy.num("event_rate_hz");
    c.cytometry.lpf_cutoff_hz = cy.num("lpf_cutoff_hz");
    c.cytometry.sim_rate_hz = cy.num("sim_rate_hz");
    c.cytometry.pulse_polarity = static_cast<int>(cy.integer("pulse_polarity"));
    c.cytometry.duration_s = c.duration_s;

    const auto g = root.at("gsr");
    c.gsr.tonic_level = g.num("tonic_level");
    c.gsr.drift_rate_per_s = g.num("drift_rate_per_s");
    c.gsr.random_event_rate_hz = g.num("random_event_rate_hz");
    c.gsr.random_amplitude_min = g.num("random_amplitude_min");
    c.gsr.random_amplitude_max = g.num("random_amplitude_max");
    c.gsr.random_rise_s = g.num("random_rise_s");
    c.gsr.random_decay_s = g.num("random_decay_s");
    c.gsr.range = g.range("range");
    c.gsr.duration_s = c.duration_s;
    const auto& events = doc["gsr"]["phasic_events"];
    if (!events.is_array()) throw ConfigError("gsr.phasic_events", "expected an array");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Reader e(events[i], "gsr.phasic_events[" + std::to_string(i) + "]");
        c.gsr.phasic_events.push_back({e.num("onset_s"), e.num("amplitude"), e.num("rise_s"), e.num("decay_s")});
    }
    if (!g.is_null("csv_path")) c.gsr_csv = g.str("csv_path");

    const auto a = root.at("ajscc");
    c.ajscc.levels_l = static_cast<int>(a.integer("levels_l"));
    c.ajscc.v_r = a.num("v_r");
    c.ajscc.x1_range = a.range("x1_range");
    c.ajscc.x2_range = a.range("x2_range");
    c.ajscc.folding = a.parse_enum("folding", folding_from_string);
    checked("ajscc", [&] { c.ajscc.validate(); });

    const auto l = root.at("link");
    c.link.fs_hz = l.num("fs_hz");
    c.link.snr_db = l.snr("snr_db");
    c.link.stage_offsets_v = l.numbers("stage_offsets_v");
    if (l.is_null("sensors")) {
        const std::size_t n = l.is_null("num_sensors") ? 1 : l.count("num_sensors");
        BandPlan plan;
        // Bases sit on the receiver's bin grid so a resting input does not fall between two bins.
        const std::size_t ns = root.at("receiver").count("ns");
        const double grid = ns > 0 ? c.link.fs_hz / static_cast<double>(ns) : 0.0;
        checked("link.num_sensors", [&] { plan = make_band_plan(n, c.ajscc.max_voltage(), 15e3, 235e3, grid); });
        c.link.sensors = plan.bands;
        c.link.kf_hz_per_v = l.is_null("kf_hz_per_v") ? plan.kf_hz_per_v : l.num("kf_hz_per_v");
    } else {
        c.link.sensors = parse_bands(l, "sensors");
        if (!l.is_null("num_sensors") && l.count("num_sensors") != c.link.sensors.size()) {
            throw ConfigError("link.num_sensors", "does not match the number of listed sensors");
        }
        if (l.is_null("kf_hz_per_v")) {
            // Largest kf whose tone span fits every listed band.
            double kf = std::numeric_limits<double>::infinity();
            for (const auto& b : c.link.sensors) kf = std::min(kf, (b.band_width_hz - b.guard_hz) / c.ajscc.max_voltage());
            c.link.kf_hz_per_v = kf;
        } else {
            c.link.kf_hz_per_v = l.num("kf_hz_per_v");
        }
    }

    const auto r = root.at("receiver");
    c.receiver.ns = r.count("ns");
    c.receiver.hop = r.count("hop");
    c.receiver.window_fn = r.parse_enum("window_fn", window_from_string);
    c.receiver.interpolation = r.parse_enum("interpolation", interpolation_from_string);
    c.receiver.fs_hz = r.is_null("fs_hz") ? c.link.fs_hz : r.num("fs_hz");
    c.receiver.bands = r.is_null("bands") ? c.link.sensors : parse_bands(r, "bands");
    c.link.hold_window = l.is_null("hold_window") ? c.receiver.ns : l.count("hold_window");

    const auto t = root.at("threshold");
    c.threshold.mode = t.parse_enum("mode", threshold_mode_from_string);
    c.threshold.theta = t.num("theta");
    c.threshold.auto_percentile = t.num("auto_percentile");
    c.threshold.auto_margin = t.num("auto_margin");

    const auto m = root.at("median");
    c.median.order_k = m.count("order_k");
    c.median.edge_policy = m.parse_enum("edge_policy", edge_policy_from_string);

    const auto o = root.at("outputs");
    c.write_received = o.boolean("write_received");
    c.write_plots = o.boolean("plots");

    c.validate();
    return c;
}

void RunConfig::validate() const {
    // Zero is left to the source generators, which report it as their own stage error.
    if (!(duration_s >= 0.0 && std::isfinite(duration_s))) throw ConfigError("duration_s", "must be finite and non-negative");
    checked("cytometry", [&] { cytometry.validate(); });
    checked("gsr", [&] { gsr.validate(); });
    checked("ajscc", [&] { ajscc.validate(); });
    checked("link", [&] { link.validate(ajscc); });
    checked("receiver", [&] { receiver.validate(); });
    checked("threshold", [&] { threshold.validate(); });
    checked("median", [&] { median.validate(); });
    if (receiver.fs_hz != link.fs_hz) throw ConfigError("receiver.fs_hz", "must equal link.fs_hz");
    if (receiver.bands != link.sensors) throw ConfigError("receiver.bands", "must mirror link.sensors");
    const double ratio = cytometry.sim_rate_hz / source_rate_hz();
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw ConfigError("cytometry.sim_rate_hz", "must be an integer multiple of link.fs_hz / link.hold_window");
    }
}

RunConfig load_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides) {
    json user = json::object();
    if (path) {
        std::ifstream in(*path);
        if (!in) throw ConfigError(path->string(), "cannot open config file");
        user = json::parse(in, nullptr, false);
        if (user.is_discarded()) throw ConfigError(path->string(), "not valid JSON");
    }
    return resolve_config(user, overrides);
}

void write_config(const RunConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << to_json(c).dump(2) << '\n';
}

}  // namespace ajscc
