#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hst/tensor.hpp"

namespace hst::data {

// Value the UJIIndoorLoc CSVs use for "AP not detected".
inline constexpr double kNotDetected = 100.0;

// Building/floor/AP counts of a site. num_floors() is the max over
// buildings; one-hot floor vectors are padded to it.
struct SitePlan {
    int num_buildings = 0;
    std::vector<int> floors_per_building;
    int num_aps = 0;

    int num_floors() const {
        int m = 0;
        for (int f : floors_per_building) m = std::max(m, f);
        return m;
    }
    int label_width() const { return num_buildings + num_floors(); }
};

// Affine feature/coordinate scalers. RSSI maps [rssi_min, rssi_max] -> [0,1]
// with clamping; the not-detected marker maps to 0. Coordinates are min-max
// per axis, fitted on the training split, unclamped (so out-of-range test
// points round-trip exactly).
struct ScalerParams {
    double rssi_min = -110.0;
    double rssi_max = 0.0;
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;

    float scale_rssi(double dbm) const {
        if (dbm == kNotDetected) return 0.0f;
        double v = (dbm - rssi_min) / (rssi_max - rssi_min);
        return static_cast<float>(std::min(1.0, std::max(0.0, v)));
    }
    double scale_x(double x) const { return (x - x_min) / (x_max - x_min); }
    double scale_y(double y) const { return (y - y_min) / (y_max - y_min); }
    double unscale_x(double sx) const { return x_min + sx * (x_max - x_min); }
    double unscale_y(double sy) const { return y_min + sy * (y_max - y_min); }
};

// One Wi-Fi scan: raw per-AP RSSI (dBm, kNotDetected marker for absent APs)
// plus labels, coordinates and opaque survey metadata.
struct FingerprintRecord {
    std::vector<float> rssi;
    int building_id = 0;
    int floor_id = 0;
    double longitude = 0.0;
    double latitude = 0.0;
    int space_id = 0;
    int relative_position = 0;
    int user_id = 0;
    int phone_id = 0;
    long long timestamp = 0;
};

// Scaled feature matrix plus labels; the unit the trainer and evaluator
// consume. Coordinates are kept in meters and scaled on demand.
struct Dataset {
    SitePlan plan;
    ScalerParams scaler;
    std::string tag;  // train | validation | test
    std::size_t width = 0;

    std::vector<float> features;  // count x width, scaled to [0,1]
    std::vector<int> building;
    std::vector<int> floor;
    std::vector<double> x_m, y_m;
    // retained metadata (unused by training)
    std::vector<int> space_id, relative_position, user_id, phone_id;
    std::vector<long long> timestamp;

    std::size_t count() const { return building.size(); }

    nn::Tensor<float> features_tensor() const;
    nn::Tensor<float> one_hot_concat() const;    // (n, N_B + N_F)
    nn::Tensor<float> one_hot_building() const;  // (n, N_B)
    nn::Tensor<float> one_hot_floor() const;     // (n, N_F)
    nn::Tensor<float> scaled_coords() const;     // (n, 2)

    Dataset subset(const std::vector<std::size_t>& idx) const;
};

// A localization output (or ground truth): building/floor ids plus 2-D
// coordinates in meters.
struct Prediction {
    int building = 0;
    int floor = 0;
    double x_m = 0.0;
    double y_m = 0.0;
};

// Ground-truth fixes of a dataset, record order.
std::vector<Prediction> ground_truth(const Dataset& d);

// Concatenated one-hot encoding of (building, floor): exactly one 1 in the
// first N_B slots and one in the next N_F slots. Throws on out-of-range ids.
std::vector<float> encode_building_floor(int building_id, int floor_id, const SitePlan& plan);

// Scale raw records into a Dataset using already-fitted scaler params.
Dataset build_dataset(const std::vector<FingerprintRecord>& records, const SitePlan& plan,
                      const ScalerParams& scaler, const std::string& tag);

// Coordinate scaler fitted on the given records (training split only);
// rssi_min/rssi_max are taken from `base`.
ScalerParams fit_scaler(const std::vector<FingerprintRecord>& records, ScalerParams base = {});

// Site plan implied by record labels (N_B = max building id + 1, per-building
// floor counts = max floor id + 1).
SitePlan infer_site_plan(const std::vector<FingerprintRecord>& records, int num_aps);

// Seeded split, stratified by (building, floor). Falls back to an
// unstratified split (with a warning appended to `warnings` when non-null)
// if any stratum would contribute no validation sample.
std::pair<Dataset, Dataset> split_train_val(const Dataset& full, double fraction,
                                            std::uint64_t seed,
                                            std::vector<std::string>* warnings = nullptr);

}  // namespace hst::data
