#include "hst/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hst/errors.hpp"
#include "hst/rng.hpp"

namespace hst::data {

nn::Tensor<float> Dataset::features_tensor() const {
    return nn::Tensor<float>({count(), width}, features);
}

nn::Tensor<float> Dataset::one_hot_concat() const {
    const std::size_t w = static_cast<std::size_t>(plan.label_width());
    nn::Tensor<float> t({count(), w});
    for (std::size_t i = 0; i < count(); ++i) {
        const auto row = encode_building_floor(building[i], floor[i], plan);
        std::copy(row.begin(), row.end(), t.data.begin() + i * w);
    }
    return t;
}

nn::Tensor<float> Dataset::one_hot_building() const {
    const std::size_t w = static_cast<std::size_t>(plan.num_buildings);
    nn::Tensor<float> t({count(), w});
    for (std::size_t i = 0; i < count(); ++i) {
        if (building[i] < 0 || building[i] >= plan.num_buildings) {
            throw DataError("building id " + std::to_string(building[i]) + " out of range");
        }
        t(i, static_cast<std::size_t>(building[i])) = 1.0f;
    }
    return t;
}

nn::Tensor<float> Dataset::one_hot_floor() const {
    const std::size_t w = static_cast<std::size_t>(plan.num_floors());
    nn::Tensor<float> t({count(), w});
    for (std::size_t i = 0; i < count(); ++i) {
        if (floor[i] < 0 || floor[i] >= plan.num_floors()) {
            throw DataError("floor id " + std::to_string(floor[i]) + " out of range");
        }
        t(i, static_cast<std::size_t>(floor[i])) = 1.0f;
    }
    return t;
}

nn::Tensor<float> Dataset::scaled_coords() const {
    nn::Tensor<float> t({count(), 2});
    for (std::size_t i = 0; i < count(); ++i) {
        t(i, 0) = static_cast<float>(scaler.scale_x(x_m[i]));
        t(i, 1) = static_cast<float>(scaler.scale_y(y_m[i]));
    }
    return t;
}

Dataset Dataset::subset(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.plan = plan;
    out.scaler = scaler;
    out.tag = tag;
    out.width = width;
    out.features.reserve(idx.size() * width);
    for (std::size_t i : idx) {
        out.features.insert(out.features.end(), features.begin() + i * width,
                            features.begin() + (i + 1) * width);
        out.building.push_back(building[i]);
        out.floor.push_back(floor[i]);
        out.x_m.push_back(x_m[i]);
        out.y_m.push_back(y_m[i]);
        if (!space_id.empty()) out.space_id.push_back(space_id[i]);
        if (!relative_position.empty()) out.relative_position.push_back(relative_position[i]);
        if (!user_id.empty()) out.user_id.push_back(user_id[i]);
        if (!phone_id.empty()) out.phone_id.push_back(phone_id[i]);
        if (!timestamp.empty()) out.timestamp.push_back(timestamp[i]);
    }
    return out;
}

std::vector<Prediction> ground_truth(const Dataset& d) {
    std::vector<Prediction> out(d.count());
    for (std::size_t i = 0; i < d.count(); ++i) {
        out[i] = {d.building[i], d.floor[i], d.x_m[i], d.y_m[i]};
    }
    return out;
}

std::vector<float> encode_building_floor(int building_id, int floor_id, const SitePlan& plan) {
    if (building_id < 0 || building_id >= plan.num_buildings) {
        throw DataError("building id " + std::to_string(building_id) + " outside [0," +
                        std::to_string(plan.num_buildings) + ")");
    }
    if (floor_id < 0 || floor_id >= plan.num_floors()) {
        throw DataError("floor id " + std::to_string(floor_id) + " outside [0," +
                        std::to_string(plan.num_floors()) + ")");
    }
    std::vector<float> v(static_cast<std::size_t>(plan.label_width()), 0.0f);
    v[static_cast<std::size_t>(building_id)] = 1.0f;
    v[static_cast<std::size_t>(plan.num_buildings + floor_id)] = 1.0f;
    return v;
}

Dataset build_dataset(const std::vector<FingerprintRecord>& records, const SitePlan& plan,
                      const ScalerParams& scaler, const std::string& tag) {
    Dataset d;
    d.plan = plan;
    d.scaler = scaler;
    d.tag = tag;
    d.width = static_cast<std::size_t>(plan.num_aps);
    d.features.reserve(records.size() * d.width);
    for (const auto& r : records) {
        if (r.rssi.size() != d.width) {
            throw DataError("record has " + std::to_string(r.rssi.size()) + " RSSI values, plan has " +
                            std::to_string(d.width) + " APs");
        }
        for (float v : r.rssi) d.features.push_back(scaler.scale_rssi(v));
        d.building.push_back(r.building_id);
        d.floor.push_back(r.floor_id);
        d.x_m.push_back(r.longitude);
        d.y_m.push_back(r.latitude);
        d.space_id.push_back(r.space_id);
        d.relative_position.push_back(r.relative_position);
        d.user_id.push_back(r.user_id);
        d.phone_id.push_back(r.phone_id);
        d.timestamp.push_back(r.timestamp);
    }
    return d;
}

ScalerParams fit_scaler(const std::vector<FingerprintRecord>& records, ScalerParams base) {
    if (records.empty()) throw DataError("cannot fit scaler on empty record list");
    ScalerParams p = base;
    p.x_min = p.x_max = records[0].longitude;
    p.y_min = p.y_max = records[0].latitude;
    for (const auto& r : records) {
        p.x_min = std::min(p.x_min, r.longitude);
        p.x_max = std::max(p.x_max, r.longitude);
        p.y_min = std::min(p.y_min, r.latitude);
        p.y_max = std::max(p.y_max, r.latitude);
    }
    if (p.x_max <= p.x_min || p.y_max <= p.y_min) {
        throw DataError("degenerate coordinate range while fitting scaler");
    }
    if (p.rssi_min >= p.rssi_max) throw DataError("rssi_min must be below rssi_max");
    return p;
}

SitePlan infer_site_plan(const std::vector<FingerprintRecord>& records, int num_aps) {
    SitePlan plan;
    plan.num_aps = num_aps;
    for (const auto& r : records) plan.num_buildings = std::max(plan.num_buildings, r.building_id + 1);
    plan.floors_per_building.assign(static_cast<std::size_t>(plan.num_buildings), 1);
    for (const auto& r : records) {
        auto& f = plan.floors_per_building[static_cast<std::size_t>(r.building_id)];
        f = std::max(f, r.floor_id + 1);
    }
    return plan;
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& full, double fraction,
                                            std::uint64_t seed,
                                            std::vector<std::string>* warnings) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("validation fraction must lie in (0,1)");
    }
    const std::size_t n = full.count();
    if (n < 2) throw DataError("cannot split a dataset with fewer than 2 records");

    std::map<std::pair<int, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < n; ++i) strata[{full.building[i], full.floor[i]}].push_back(i);

    bool stratified = true;
    for (const auto& [key, idx] : strata) {
        if (static_cast<std::size_t>(std::llround(fraction * idx.size())) == 0) {
            stratified = false;
            break;
        }
    }

    std::vector<std::size_t> val_idx, train_idx;
    Rng rng(derive_seed(seed, 0x5147u));  // split stream
    if (stratified) {
        for (auto& [key, idx] : strata) {
            rng.shuffle(idx);
            const std::size_t k = static_cast<std::size_t>(std::llround(fraction * idx.size()));
            val_idx.insert(val_idx.end(), idx.begin(), idx.begin() + k);
            train_idx.insert(train_idx.end(), idx.begin() + k, idx.end());
        }
    } else {
        if (warnings) {
            warnings->push_back("stratified split degenerate (some stratum too small); "
                                "falling back to unstratified split");
        }
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        rng.shuffle(idx);
        std::size_t k = static_cast<std::size_t>(std::llround(fraction * n));
        k = std::max<std::size_t>(1, std::min(k, n - 1));
        val_idx.assign(idx.begin(), idx.begin() + k);
        train_idx.assign(idx.begin() + k, idx.end());
    }
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    Dataset tr = full.subset(train_idx);
    Dataset va = full.subset(val_idx);
    tr.tag = "train";
    va.tag = "validation";
    return {std::move(tr), std::move(va)};
}

}  // namespace hst::data
