#include "hst/config.hpp"

#include <fstream>

#include "config_detail.hpp"
#include "hst/errors.hpp"

namespace hst::cli {
namespace {

using detail::json;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path, -1, "cannot open config file");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw DataError(path, -1, std::string("malformed JSON: ") + e.what());
    }
}

[[noreturn]] void fail(const std::string& path, const std::vector<std::string>& issues) {
    std::string msg = path + ": invalid configuration:";
    for (const auto& s : issues) msg += "\n  - " + s;
    throw ConfigError(msg);
}

}  // namespace

RunConfig parse_run_config(const std::string& path) {
    const json j = load_json_file(path);
    std::vector<std::string> issues;
    if (!j.is_object()) fail(path, {"top level must be an object"});

    detail::check_keys(j, "config",
                       {"model", "seed", "data", "output_dir", "sae", "dnn", "cnn", "stages",
                        "error_model"},
                       issues);

    RunConfig cfg;
    if (const auto m = detail::str_at(j, "model", "config", issues)) {
        try {
            cfg.kind = model::model_kind_from(*m);
        } catch (const ConfigError& e) {
            issues.push_back(e.what());
        }
    } else {
        issues.push_back("config.model: required");
    }

    // seeds must be explicit — no wall-clock fallback
    if (j.contains("seed") && j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0) {
        cfg.seed = j["seed"].get<std::uint64_t>();
    } else {
        issues.push_back("config.seed: required non-negative integer");
    }

    if (j.contains("data")) {
        detail::check_keys(j["data"], "config.data", {"cache_dir"}, issues);
        if (const auto d = detail::str_at(j["data"], "cache_dir", "config.data", issues)) {
            cfg.cache_dir = *d;
        }
    }
    if (const auto d = detail::str_at(j, "output_dir", "config", issues)) {
        cfg.output_dir = *d;
    } else {
        issues.push_back("config.output_dir: required");
    }

    if (j.contains("sae")) {
        const json& js = j["sae"];
        detail::check_keys(js, "config.sae",
                           {"enabled", "encoder_widths", "learning_rate", "beta1", "beta2",
                            "epsilon", "batch_size", "max_epochs", "early_stop", "scheduler"},
                           issues);
        if (const auto en = detail::bool_at(js, "enabled", "config.sae", issues)) {
            cfg.sae_enabled = *en;
        }
        cfg.sae = detail::sae_config_from_json(js, "config.sae", issues);
        if (cfg.sae_enabled) {
            cfg.sae_hyper = detail::stage_hyper_from_json(js, "config.sae", issues,
                                                          /*check=*/false);
        }
    } else if (cfg.sae_enabled) {
        issues.push_back("config.sae: required (or set sae.enabled = false)");
    }

    if (j.contains("dnn")) cfg.dnn = detail::dnn_config_from_json(j["dnn"], "config.dnn", issues);
    if (j.contains("cnn")) cfg.cnn = detail::cnn_config_from_json(j["cnn"], "config.cnn", issues);
    cfg.dnn.sae = cfg.sae;
    cfg.cnn.sae = cfg.sae;

    if (j.contains("stages") && j["stages"].is_array()) {
        int s = 0;
        for (const auto& stage : j["stages"]) {
            cfg.stages.push_back(detail::stage_hyper_from_json(
                stage, "config.stages[" + std::to_string(s) + "]", issues));
            ++s;
        }
    } else {
        issues.push_back("config.stages: required array");
    }
    const int want = model::num_stages(cfg.kind);
    if (!cfg.stages.empty() && static_cast<int>(cfg.stages.size()) != want) {
        issues.push_back("config.stages: " + std::string(model::model_kind_name(cfg.kind)) +
                         " takes " + std::to_string(want) + " stage entries, got " +
                         std::to_string(cfg.stages.size()));
    }

    if (j.contains("error_model")) {
        cfg.error_model = detail::error_model_from_json(j["error_model"], "config.error_model",
                                                        issues);
    }

    if (!issues.empty()) fail(path, issues);
    return cfg;
}

data::SyntheticConfig parse_synthetic_config(const std::string& path) {
    const json j = load_json_file(path);
    std::vector<std::string> issues;
    if (!j.is_object()) fail(path, {"top level must be an object"});

    detail::check_keys(j, "synthetic",
                       {"buildings", "floors_per_building", "num_aps", "path_loss_exponent",
                        "ref_power_dbm", "noise_sigma_db", "detect_threshold_dbm", "train_records",
                        "test_records", "floor_height_m", "building_w_m", "building_d_m",
                        "building_origins", "ap_height_m", "receiver_height_m"},
                       issues);

    data::SyntheticConfig cfg;
    if (const auto v = detail::int_at(j, "buildings", "synthetic", issues)) {
        cfg.plan.num_buildings = static_cast<int>(*v);
    }
    if (j.contains("floors_per_building") && j["floors_per_building"].is_array()) {
        cfg.plan.floors_per_building.clear();
        for (const auto& f : j["floors_per_building"]) {
            if (f.is_number_integer()) cfg.plan.floors_per_building.push_back(f.get<int>());
        }
    } else if (j.contains("buildings")) {
        cfg.plan.floors_per_building.assign(cfg.plan.num_buildings, 3);
    }
    if (const auto v = detail::int_at(j, "num_aps", "synthetic", issues)) {
        cfg.plan.num_aps = static_cast<int>(*v);
    }
    if (const auto v = detail::num_at(j, "path_loss_exponent", "synthetic", issues)) {
        cfg.path_loss_exponent = *v;
    }
    if (const auto v = detail::num_at(j, "ref_power_dbm", "synthetic", issues)) {
        cfg.ref_power_dbm = *v;
    }
    if (const auto v = detail::num_at(j, "noise_sigma_db", "synthetic", issues)) {
        cfg.noise_sigma_db = *v;
    }
    if (const auto v = detail::num_at(j, "detect_threshold_dbm", "synthetic", issues)) {
        cfg.detect_threshold_dbm = *v;
    }
    if (const auto v = detail::int_at(j, "train_records", "synthetic", issues)) {
        cfg.train_records = static_cast<int>(*v);
    }
    if (const auto v = detail::int_at(j, "test_records", "synthetic", issues)) {
        cfg.test_records = static_cast<int>(*v);
    }
    if (const auto v = detail::num_at(j, "floor_height_m", "synthetic", issues)) {
        cfg.floor_height_m = *v;
    }
    if (const auto v = detail::num_at(j, "building_w_m", "synthetic", issues)) {
        cfg.building_w_m = *v;
    }
    if (const auto v = detail::num_at(j, "building_d_m", "synthetic", issues)) {
        cfg.building_d_m = *v;
    }
    if (j.contains("building_origins")) {
        const json& arr = j["building_origins"];
        if (!arr.is_array()) {
            issues.push_back("synthetic.building_origins: expected an array of [x, y]");
        } else {
            cfg.building_origins.clear();
            for (const auto& o : arr) {
                if (!o.is_array() || o.size() != 2 || !o[0].is_number() || !o[1].is_number()) {
                    issues.push_back("synthetic.building_origins: entries must be [x, y]");
                    break;
                }
                cfg.building_origins.emplace_back(o[0].get<double>(), o[1].get<double>());
            }
        }
    }
    if (const auto v = detail::num_at(j, "ap_height_m", "synthetic", issues)) cfg.ap_height_m = *v;
    if (const auto v = detail::num_at(j, "receiver_height_m", "synthetic", issues)) {
        cfg.receiver_height_m = *v;
    }

    if (cfg.plan.num_buildings < 1 || cfg.plan.num_aps < 1 ||
        static_cast<int>(cfg.plan.floors_per_building.size()) != cfg.plan.num_buildings) {
        issues.push_back("synthetic: needs buildings >= 1, num_aps >= 1 and one floor count per "
                         "building");
    }
    if (cfg.train_records < 1 || cfg.test_records < 0) {
        issues.push_back("synthetic: train_records >= 1 and test_records >= 0 required");
    }
    if (!cfg.building_origins.empty() &&
        static_cast<int>(cfg.building_origins.size()) != cfg.plan.num_buildings) {
        issues.push_back("synthetic.building_origins: one [x, y] entry per building");
    }

    if (!issues.empty()) fail(path, issues);
    return cfg;
}

eval::ErrorModelConfig parse_error_model_name(const std::string& name,
                                              eval::ErrorModelConfig base) {
    if (name == "penalty") {
        base.kind = eval::ErrorModelKind::Penalty;
    } else if (name == "euclidean3d") {
        base.kind = eval::ErrorModelKind::Euclidean3d;
    } else {
        throw ConfigError("unknown error model \"" + name +
                          "\" (expected penalty or euclidean3d)");
    }
    return base;
}

}  // namespace hst::cli
