#pragma once

// JSON <-> domain-struct helpers shared by the run-config parser and the
// model/manifest writers. Parse helpers append problems to an issue list
// instead of throwing so every config error is reported in one pass.

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "hst/dataset.hpp"
#include "hst/evaluate.hpp"
#include "hst/models.hpp"

namespace hst::cli::detail {

using nlohmann::json;
using nlohmann::ordered_json;

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed,
                       std::vector<std::string>& issues) {
    if (!obj.is_object()) return;
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) issues.push_back(where + ": unknown key \"" + key + "\"");
    }
}

inline std::optional<double> num_at(const json& j, const char* key, const std::string& where,
                                    std::vector<std::string>& issues) {
    if (!j.is_object() || !j.contains(key)) return std::nullopt;
    if (!j[key].is_number()) {
        issues.push_back(where + "." + key + ": expected a number");
        return std::nullopt;
    }
    return j[key].get<double>();
}

inline std::optional<long long> int_at(const json& j, const char* key, const std::string& where,
                                       std::vector<std::string>& issues) {
    if (!j.is_object() || !j.contains(key)) return std::nullopt;
    if (!j[key].is_number_integer()) {
        issues.push_back(where + "." + key + ": expected an integer");
        return std::nullopt;
    }
    return j[key].get<long long>();
}

inline std::optional<std::string> str_at(const json& j, const char* key, const std::string& where,
                                         std::vector<std::string>& issues) {
    if (!j.is_object() || !j.contains(key)) return std::nullopt;
    if (!j[key].is_string()) {
        issues.push_back(where + "." + key + ": expected a string");
        return std::nullopt;
    }
    return j[key].get<std::string>();
}

inline std::optional<bool> bool_at(const json& j, const char* key, const std::string& where,
                                   std::vector<std::string>& issues) {
    if (!j.is_object() || !j.contains(key)) return std::nullopt;
    if (!j[key].is_boolean()) {
        issues.push_back(where + "." + key + ": expected true/false");
        return std::nullopt;
    }
    return j[key].get<bool>();
}

inline std::optional<std::vector<std::size_t>> widths_at(const json& j, const char* key,
                                                         const std::string& where,
                                                         std::vector<std::string>& issues) {
    if (!j.is_object() || !j.contains(key)) return std::nullopt;
    const json& arr = j[key];
    if (!arr.is_array() || arr.empty()) {
        issues.push_back(where + "." + key + ": expected a non-empty array of widths");
        return std::nullopt;
    }
    std::vector<std::size_t> out;
    for (const auto& v : arr) {
        if (!v.is_number_integer() || v.get<long long>() < 1) {
            issues.push_back(where + "." + key + ": widths must be integers >= 1");
            return std::nullopt;
        }
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

inline eval::ErrorModelConfig error_model_from_json(const json& j, const std::string& where,
                                                    std::vector<std::string>& issues) {
    eval::ErrorModelConfig m;
    if (!j.is_object()) {
        issues.push_back(where + ": expected an object");
        return m;
    }
    check_keys(j, where, {"kind", "building_penalty_m", "floor_penalty_m", "floor_height_m"},
               issues);
    if (const auto kind = str_at(j, "kind", where, issues)) {
        if (*kind == "penalty") {
            m.kind = eval::ErrorModelKind::Penalty;
        } else if (*kind == "euclidean3d") {
            m.kind = eval::ErrorModelKind::Euclidean3d;
        } else {
            issues.push_back(where + ".kind: expected \"penalty\" or \"euclidean3d\"");
        }
    }
    if (const auto v = num_at(j, "building_penalty_m", where, issues)) m.building_penalty_m = *v;
    if (const auto v = num_at(j, "floor_penalty_m", where, issues)) m.floor_penalty_m = *v;
    if (const auto v = num_at(j, "floor_height_m", where, issues)) m.floor_height_m = *v;
    if (m.building_penalty_m < 0 || m.floor_penalty_m < 0 || m.floor_height_m < 0) {
        issues.push_back(where + ": penalties must be >= 0");
    }
    return m;
}

inline ordered_json error_model_to_json(const eval::ErrorModelConfig& m) {
    ordered_json j;
    j["kind"] = m.kind == eval::ErrorModelKind::Penalty ? "penalty" : "euclidean3d";
    j["building_penalty_m"] = m.building_penalty_m;
    j["floor_penalty_m"] = m.floor_penalty_m;
    j["floor_height_m"] = m.floor_height_m;
    return j;
}

inline data::SitePlan site_plan_from_json(const json& j, const std::string& where,
                                          std::vector<std::string>& issues) {
    data::SitePlan p;
    if (!j.is_object()) {
        issues.push_back(where + ": expected an object");
        return p;
    }
    check_keys(j, where, {"num_buildings", "floors_per_building", "num_aps"}, issues);
    if (const auto v = int_at(j, "num_buildings", where, issues)) p.num_buildings = int(*v);
    if (const auto v = int_at(j, "num_aps", where, issues)) p.num_aps = int(*v);
    if (j.contains("floors_per_building") && j["floors_per_building"].is_array()) {
        for (const auto& f : j["floors_per_building"]) {
            if (f.is_number_integer()) p.floors_per_building.push_back(f.get<int>());
        }
    }
    if (p.num_buildings < 1 || p.num_aps < 1 ||
        int(p.floors_per_building.size()) != p.num_buildings) {
        issues.push_back(where + ": needs num_buildings >= 1, num_aps >= 1 and one floor count "
                                 "per building");
    }
    for (int f : p.floors_per_building) {
        if (f < 1) issues.push_back(where + ": floor counts must be >= 1");
    }
    return p;
}

inline ordered_json site_plan_to_json(const data::SitePlan& p) {
    ordered_json j;
    j["num_buildings"] = p.num_buildings;
    j["floors_per_building"] = p.floors_per_building;
    j["num_aps"] = p.num_aps;
    return j;
}

inline data::ScalerParams scaler_from_json(const json& j, const std::string& where,
                                           std::vector<std::string>& issues) {
    data::ScalerParams s;
    if (!j.is_object()) {
        issues.push_back(where + ": expected an object");
        return s;
    }
    check_keys(j, where, {"rssi_min", "rssi_max", "x_min", "x_max", "y_min", "y_max"}, issues);
    if (const auto v = num_at(j, "rssi_min", where, issues)) s.rssi_min = *v;
    if (const auto v = num_at(j, "rssi_max", where, issues)) s.rssi_max = *v;
    if (const auto v = num_at(j, "x_min", where, issues)) s.x_min = *v;
    if (const auto v = num_at(j, "x_max", where, issues)) s.x_max = *v;
    if (const auto v = num_at(j, "y_min", where, issues)) s.y_min = *v;
    if (const auto v = num_at(j, "y_max", where, issues)) s.y_max = *v;
    if (!(s.rssi_min < s.rssi_max) || !(s.x_min < s.x_max) || !(s.y_min < s.y_max)) {
        issues.push_back(where + ": min values must be below max values");
    }
    return s;
}

inline ordered_json scaler_to_json(const data::ScalerParams& s) {
    ordered_json j;
    j["rssi_min"] = s.rssi_min;
    j["rssi_max"] = s.rssi_max;
    j["x_min"] = s.x_min;
    j["x_max"] = s.x_max;
    j["y_min"] = s.y_min;
    j["y_max"] = s.y_max;
    return j;
}

inline model::SaeConfig sae_config_from_json(const json& j, const std::string& where,
                                             std::vector<std::string>& issues) {
    model::SaeConfig cfg;
    if (const auto w = widths_at(j, "encoder_widths", where, issues)) cfg.encoder_widths = *w;
    return cfg;
}

inline model::DnnConfig dnn_config_from_json(const json& j, const std::string& where,
                                             std::vector<std::string>& issues) {
    model::DnnConfig cfg;
    if (!j.is_object()) {
        issues.push_back(where + ": expected an object");
        return cfg;
    }
    check_keys(j, where, {"common_widths", "location_hidden"}, issues);
    if (const auto w = widths_at(j, "common_widths", where, issues)) cfg.common_widths = *w;
    if (const auto v = int_at(j, "location_hidden", where, issues)) {
        if (*v < 1) {
            issues.push_back(where + ".location_hidden: must be >= 1");
        } else {
            cfg.location_hidden = static_cast<std::size_t>(*v);
        }
    }
    return cfg;
}

inline ordered_json dnn_config_to_json(const model::DnnConfig& cfg) {
    ordered_json j;
    j["common_widths"] = cfg.common_widths;
    j["location_hidden"] = cfg.location_hidden;
    return j;
}

inline model::CnnConfig cnn_config_from_json(const json& j, const std::string& where,
                                             std::vector<std::string>& issues) {
    model::CnnConfig cfg;
    if (!j.is_object()) {
        issues.push_back(where + ": expected an object");
        return cfg;
    }
    check_keys(j, where, {"building_hidden", "conv"}, issues);
    if (const auto w = widths_at(j, "building_hidden", where, issues)) cfg.building_hidden = *w;
    if (j.contains("conv")) {
        const json& arr = j["conv"];
        if (!arr.is_array() || arr.empty()) {
            issues.push_back(where + ".conv: expected a non-empty array of [channels, kernel]");
        } else {
            cfg.conv.clear();
            for (const auto& c : arr) {
                if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() ||
                    !c[1].is_number_integer() || c[0].get<long long>() < 1 ||
                    c[1].get<long long>() < 1) {
                    issues.push_back(where + ".conv: entries must be [channels >= 1, kernel >= 1]");
                    break;
                }
                cfg.conv.push_back({c[0].get<std::size_t>(), c[1].get<std::size_t>()});
            }
        }
    }
    return cfg;
}

inline ordered_json cnn_config_to_json(const model::CnnConfig& cfg) {
    ordered_json j;
    j["building_hidden"] = cfg.building_hidden;
    ordered_json conv = ordered_json::array();
    for (const auto& c : cfg.conv) conv.push_back({c.channels, c.kernel});
    j["conv"] = conv;
    return j;
}

// `check` is off when the caller owns key validation (sections mixing loop
// settings with other keys, like config.sae).
inline model::StageHyper stage_hyper_from_json(const json& j, const std::string& where,
                                               std::vector<std::string>& issues,
                                               bool check = true) {
    model::StageHyper h;
    if (!j.is_object()) {
        issues.push_back(where + ": expected an object");
        return h;
    }
    if (check) {
        check_keys(j, where,
                   {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "max_epochs",
                    "early_stop", "scheduler"},
                   issues);
    }
    if (const auto v = num_at(j, "learning_rate", where, issues)) {
        h.optimizer.learning_rate = *v;
        if (!(*v > 0)) issues.push_back(where + ".learning_rate: must be > 0");
    } else {
        issues.push_back(where + ".learning_rate: required");
    }
    if (const auto v = num_at(j, "beta1", where, issues)) h.optimizer.beta1 = *v;
    if (const auto v = num_at(j, "beta2", where, issues)) h.optimizer.beta2 = *v;
    if (const auto v = num_at(j, "epsilon", where, issues)) h.optimizer.epsilon = *v;
    if (const auto v = int_at(j, "batch_size", where, issues)) {
        if (*v < 1) {
            issues.push_back(where + ".batch_size: must be >= 1");
        } else {
            h.batch_size = static_cast<std::size_t>(*v);
        }
    } else {
        issues.push_back(where + ".batch_size: required");
    }
    if (const auto v = int_at(j, "max_epochs", where, issues)) {
        if (*v < 0) {
            issues.push_back(where + ".max_epochs: must be >= 0");
        } else {
            h.max_epochs = static_cast<int>(*v);
        }
    } else {
        issues.push_back(where + ".max_epochs: required");
    }
    if (j.contains("early_stop")) {
        const json& es = j["early_stop"];
        if (es.is_boolean() && !es.get<bool>()) {
            h.early_stop.reset();
        } else if (es.is_object()) {
            check_keys(es, where + ".early_stop", {"patience", "val_fraction"}, issues);
            train::EarlyStopConfig e;
            if (const auto v = int_at(es, "patience", where + ".early_stop", issues)) {
                e.patience = static_cast<int>(*v);
            }
            if (const auto v = num_at(es, "val_fraction", where + ".early_stop", issues)) {
                e.val_fraction = *v;
            }
            if (e.patience < 0) issues.push_back(where + ".early_stop.patience: must be >= 0");
            if (!(e.val_fraction > 0.0) || !(e.val_fraction < 1.0)) {
                issues.push_back(where + ".early_stop.val_fraction: must be in (0, 1)");
            }
            h.early_stop = e;
        } else {
            issues.push_back(where + ".early_stop: expected false or an object");
        }
    }
    if (j.contains("scheduler")) {
        const json& sc = j["scheduler"];
        if (!sc.is_object()) {
            issues.push_back(where + ".scheduler: expected an object");
        } else {
            check_keys(sc, where + ".scheduler", {"factor", "patience"}, issues);
            nn::PlateauConfig p;
            if (const auto v = num_at(sc, "factor", where + ".scheduler", issues)) p.factor = *v;
            if (const auto v = int_at(sc, "patience", where + ".scheduler", issues)) {
                p.patience = static_cast<int>(*v);
            }
            if (!(p.factor > 0.0) || p.factor > 1.0) {
                issues.push_back(where + ".scheduler.factor: must be in (0, 1]");
            }
            if (p.patience < 0) issues.push_back(where + ".scheduler.patience: must be >= 0");
            h.scheduler = p;
        }
    }
    return h;
}

}  // namespace hst::cli::detail
