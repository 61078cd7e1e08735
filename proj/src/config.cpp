#include "gasest/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gasest/errors.hpp"
#include "gasest/units.hpp"

namespace gasest {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section,
                const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
        throw ConfigError("section '" + section + "' must be an object");
    }
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            throw ConfigError("unknown key '" + item.key() + "' in section '" +
                              section + "'");
        }
    }
}

double get_number(const json& obj, const std::string& section, const std::string& key) {
    if (!obj.contains(key)) {
        throw ConfigError("section '" + section + "' is missing key '" + key + "'");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError("key '" + key + "' in section '" + section +
                          "' must be a number");
    }
    return v.get<double>();
}

// Exactly one of the listed unit variants must be present; returns its key.
std::string pick_unit_variant(const json& obj, const std::string& section,
                              std::initializer_list<const char*> variants,
                              const std::string& quantity) {
    std::string found;
    for (const char* key : variants) {
        if (obj.contains(key)) {
            if (!found.empty()) {
                throw ConfigError("section '" + section + "' gives " + quantity +
                                  " in more than one unit ('" + found + "' and '" +
                                  key + "')");
            }
            found = key;
        }
    }
    if (found.empty()) {
        throw ConfigError("section '" + section + "' is missing the " + quantity);
    }
    return found;
}

ZoneParams parse_zone(const json& obj) {
    if (obj.contains("preset")) {
        check_keys(obj, "zone", {"preset"});
        if (!obj.at("preset").is_string()) {
            throw ConfigError("key 'preset' in section 'zone' must be a string");
        }
        try {
            return scenario_preset(obj.at("preset").get<std::string>());
        } catch (const ParameterError& e) {
            throw ConfigError(std::string("section 'zone': ") + e.what());
        }
    }
    check_keys(obj, "zone",
               {"volume_m3", "volume_cuft", "flow_m3s", "flow_cfm", "c_m3s", "c_slpm",
                "c0_ppm", "ts_s"});
    ZoneParams p;
    try {
        const std::string vol =
            pick_unit_variant(obj, "zone", {"volume_m3", "volume_cuft"}, "volume");
        p.volume_m3 = vol == "volume_m3" ? get_number(obj, "zone", vol)
                                         : units::cuft_to_m3(get_number(obj, "zone", vol));
        const std::string flow =
            pick_unit_variant(obj, "zone", {"flow_m3s", "flow_cfm"}, "inflow");
        p.inflow_m3s = flow == "flow_m3s" ? get_number(obj, "zone", flow)
                                          : units::cfm_to_m3s(get_number(obj, "zone", flow));
        const std::string gen =
            pick_unit_variant(obj, "zone", {"c_m3s", "c_slpm"}, "generation rate");
        p.generation_m3s = gen == "c_m3s" ? get_number(obj, "zone", gen)
                                          : units::slpm_to_m3s(get_number(obj, "zone", gen));
        p.background_ppm = get_number(obj, "zone", "c0_ppm");
        p.sample_interval_s = get_number(obj, "zone", "ts_s");
        p.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("section 'zone': ") + e.what());
    }
    return p;
}

double parse_noise(const json& obj) {
    check_keys(obj, "noise", {"sigma_ppm"});
    const double sigma = get_number(obj, "noise", "sigma_ppm");
    if (!(sigma >= 0.0)) {
        throw ConfigError("section 'noise': sigma_ppm must be >= 0");
    }
    return sigma;
}

OccupancyProfile parse_profile(const json& obj) {
    if (!obj.is_object() || !obj.contains("type") || !obj.at("type").is_string()) {
        throw ConfigError("section 'profile' needs a string key 'type'");
    }
    const std::string type = obj.at("type").get<std::string>();
    if (type == "constant") {
        check_keys(obj, "profile", {"type", "occupants"});
        ConstantOccupancy c;
        c.occupants = get_number(obj, "profile", "occupants");
        if (!(c.occupants >= 0.0)) {
            throw ConfigError("section 'profile': occupants must be >= 0");
        }
        return c;
    }
    if (type == "random_walk") {
        check_keys(obj, "profile", {"type", "start", "step_sd", "floor"});
        RandomWalkOccupancy w;
        w.start = get_number(obj, "profile", "start");
        w.step_sd = get_number(obj, "profile", "step_sd");
        if (obj.contains("floor")) {
            if (!obj.at("floor").is_boolean()) {
                throw ConfigError("key 'floor' in section 'profile' must be a boolean");
            }
            w.floor_to_integer = obj.at("floor").get<bool>();
        }
        if (!(w.start >= 0.0) || !(w.step_sd >= 0.0)) {
            throw ConfigError("section 'profile': start and step_sd must be >= 0");
        }
        return w;
    }
    if (type == "heterogeneous") {
        check_keys(obj, "profile",
                   {"type", "met_rates", "dubois_area_m2", "respiratory_quotient"});
        HeterogeneousOccupancy h;
        if (!obj.contains("met_rates") || !obj.at("met_rates").is_array() ||
            obj.at("met_rates").empty()) {
            throw ConfigError("section 'profile' needs a non-empty array 'met_rates'");
        }
        for (const auto& r : obj.at("met_rates")) {
            if (!r.is_number()) {
                throw ConfigError("section 'profile': met_rates entries must be numbers");
            }
            h.met_rates.push_back(r.get<double>());
        }
        if (obj.contains("dubois_area_m2")) {
            h.dubois_area_m2 = get_number(obj, "profile", "dubois_area_m2");
        }
        if (obj.contains("respiratory_quotient")) {
            h.respiratory_quotient = get_number(obj, "profile", "respiratory_quotient");
        }
        return h;
    }
    throw ConfigError("section 'profile': unknown type '" + type + "'");
}

std::vector<EstimatorKind> parse_estimators(const json& arr) {
    if (!arr.is_array() || arr.empty()) {
        throw ConfigError("key 'estimators' in section 'experiment' must be a non-empty array");
    }
    std::vector<EstimatorKind> kinds;
    for (const auto& item : arr) {
        if (!item.is_string()) {
            throw ConfigError("estimator names must be strings");
        }
        const std::string name = item.get<std::string>();
        if (name == "mle") {
            kinds.push_back(EstimatorKind::kMle);
        } else if (name == "rls") {
            kinds.push_back(EstimatorKind::kRls);
        } else if (name == "mme2") {
            kinds.push_back(EstimatorKind::kMme2);
        } else if (name == "mme3") {
            kinds.push_back(EstimatorKind::kMme3);
        } else {
            throw ConfigError("unknown estimator '" + name + "'");
        }
    }
    return kinds;
}

template <typename T>
std::vector<T> parse_grid(const json& obj, const std::string& key) {
    const json& arr = obj.at(key);
    if (!arr.is_array() || arr.empty()) {
        throw ConfigError("key '" + key + "' in section 'experiment.sweep' must be a non-empty array");
    }
    std::vector<T> grid;
    for (const auto& item : arr) {
        if (!item.is_number()) {
            throw ConfigError("entries of '" + key + "' must be numbers");
        }
        grid.push_back(item.get<T>());
    }
    return grid;
}

void parse_experiment(const json& obj, ParsedConfig& out) {
    check_keys(obj, "experiment",
               {"scenario", "estimators", "trials", "seed", "sigma_ppm", "sweep",
                "horizons", "occupants", "walk_start", "threads"});
    ExperimentConfig cfg;

    if (!obj.contains("scenario") || !obj.at("scenario").is_string()) {
        throw ConfigError("section 'experiment' needs a string key 'scenario'");
    }
    const std::string scenario = obj.at("scenario").get<std::string>();
    if (scenario == "custom") {
        if (!out.zone) {
            throw ConfigError("scenario 'custom' needs a 'zone' section");
        }
        cfg.zone = *out.zone;
    } else {
        try {
            cfg.zone = scenario_preset(scenario);
        } catch (const ParameterError& e) {
            throw ConfigError(std::string("section 'experiment': ") + e.what());
        }
    }

    if (!obj.contains("estimators")) {
        throw ConfigError("section 'experiment' is missing key 'estimators'");
    }
    cfg.estimators = parse_estimators(obj.at("estimators"));

    if (obj.contains("trials")) {
        cfg.trials = static_cast<int>(get_number(obj, "experiment", "trials"));
        if (cfg.trials < 1) throw ConfigError("experiment trials must be >= 1");
    }
    if (obj.contains("seed")) {
        cfg.seed = static_cast<std::uint64_t>(get_number(obj, "experiment", "seed"));
    }
    if (obj.contains("sigma_ppm")) {
        cfg.sigma_ppm = get_number(obj, "experiment", "sigma_ppm");
    } else if (out.sigma_ppm) {
        cfg.sigma_ppm = *out.sigma_ppm;
    }
    if (obj.contains("occupants")) {
        cfg.occupants = get_number(obj, "experiment", "occupants");
    }
    if (obj.contains("walk_start")) {
        cfg.walk_start = get_number(obj, "experiment", "walk_start");
    }
    if (obj.contains("threads")) {
        cfg.threads = static_cast<int>(get_number(obj, "experiment", "threads"));
    }
    if (obj.contains("horizons")) {
        cfg.horizons = parse_grid<int>(obj, "horizons");
    }

    if (!obj.contains("sweep") || !obj.at("sweep").is_object()) {
        throw ConfigError("section 'experiment' needs an object key 'sweep'");
    }
    const json& sweep = obj.at("sweep");
    check_keys(sweep, "experiment.sweep",
               {"n_grid", "k_grid", "population_grid", "gamma_grid"});
    int variants = 0;
    if (sweep.contains("n_grid")) {
        cfg.sample_grid = parse_grid<int>(sweep, "n_grid");
        out.experiment_kind = ExperimentKind::kRmseVsN;
        ++variants;
    }
    if (sweep.contains("k_grid")) {
        cfg.air_change_grid = parse_grid<double>(sweep, "k_grid");
        out.experiment_kind = ExperimentKind::kTheoryVsMc;
        ++variants;
    }
    if (sweep.contains("population_grid")) {
        cfg.population_grid = parse_grid<int>(sweep, "population_grid");
        out.experiment_kind = ExperimentKind::kMetabolic;
        ++variants;
    }
    if (sweep.contains("gamma_grid")) {
        cfg.step_sd_grid = parse_grid<double>(sweep, "gamma_grid");
        out.experiment_kind = ExperimentKind::kRandomWalk;
        ++variants;
    }
    if (variants != 1) {
        throw ConfigError("section 'experiment.sweep' must define exactly one grid");
    }
    out.experiment = std::move(cfg);
}

} // namespace

ParsedConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    check_keys(root, "<root>", {"zone", "noise", "profile", "experiment"});

    ParsedConfig out;
    if (root.contains("zone")) out.zone = parse_zone(root.at("zone"));
    if (root.contains("noise")) out.sigma_ppm = parse_noise(root.at("noise"));
    if (root.contains("profile")) out.profile = parse_profile(root.at("profile"));
    if (root.contains("experiment")) parse_experiment(root.at("experiment"), out);
    return out;
}

ParsedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

} // namespace gasest
