#pragma once

#include <optional>
#include <string>

#include "gasest/model.hpp"
#include "gasest/montecarlo.hpp"

namespace gasest {

// Identifies which sweep the config's experiment section describes.
enum class ExperimentKind { kRmseVsN, kTheoryVsMc, kMetabolic, kRandomWalk };

struct ParsedConfig {
    std::optional<ZoneParams> zone;
    std::optional<double> sigma_ppm;
    std::optional<OccupancyProfile> profile;
    std::optional<ExperimentConfig> experiment;
    std::optional<ExperimentKind> experiment_kind;
};

// Strict parse: unknown keys, missing required keys, ambiguous unit variants
// and malformed values all raise ConfigError naming the offending entry.
ParsedConfig parse_config(const std::string& json_text);
ParsedConfig load_config(const std::string& path);

} // namespace gasest
