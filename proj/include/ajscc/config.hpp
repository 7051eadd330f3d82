#pragma once

// Run configuration: every parameter block of the link plus output settings.
// Stored as JSON; unspecified keys take their defaults and the fully
// resolved ("effective") document is written next to every run's outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ajscc/codec.hpp"
#include "ajscc/fm_link.hpp"
#include "ajscc/post_filters.hpp"
#include "ajscc/receiver.hpp"
#include "ajscc/sources.hpp"

namespace ajscc {

// Invalid configuration. `key` is the dotted config path at fault.
class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : Error("config '" + key + "': " + what), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct RunConfig {
    std::string scenario = "default";
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
    double duration_s = 60.0;

    // Per-sensor seeds are derived from `seed`; the seed fields in these
    // blocks are overwritten when sources are generated.
    CytometryParams cytometry;
    GsrParams gsr;
    // Recorded GSR trace replayed instead of the synthetic generator.
    std::optional<std::filesystem::path> gsr_csv;
    AjsccParams ajscc;
    FmLinkParams link;
    ReceiverParams receiver;
    ThresholdParams threshold;
    MedianParams median;

    bool write_received = false;
    bool write_plots = true;

    // Encoded-sample rate fs / hold_window, also the rate sources are sampled at.
    double source_rate_hz() const { return link.fs_hz / static_cast<double>(link.hold_window); }

    // Per-block checks plus cross-block consistency (receiver mirrors the
    // link's rate and band plan). Throws ConfigError.
    void validate() const;
};

// Built-in defaults as a JSON document (auto-resolved fields left null).
nlohmann::json default_config_json();

// Deep-merges `user` over the defaults, applies `key=value` overrides
// (dotted paths, values parsed as JSON or taken as strings) and resolves the
// result. Unknown keys are rejected.
RunConfig resolve_config(const nlohmann::json& user, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::vector<std::string>& overrides = {});

// Fully explicit document; resolve_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& c);
void write_config(const RunConfig& c, const std::filesystem::path& path);

}  // namespace ajscc
