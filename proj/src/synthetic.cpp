#include "hst/synthetic.hpp"

#include <cmath>

#include "hst/errors.hpp"
#include "hst/rng.hpp"

namespace hst::data {
namespace {

struct Ap {
    double x, y, z;
};

struct Layout {
    std::vector<Ap> aps;
    std::vector<std::pair<double, double>> origins;
};

Layout place_aps(const SyntheticConfig& cfg, Rng& rng) {
    Layout layout;
    layout.origins = cfg.building_origins;
    if (layout.origins.empty()) {
        for (int b = 0; b < cfg.plan.num_buildings; ++b) {
            layout.origins.emplace_back(120.0 * b, 0.0);
        }
    }
    if (static_cast<int>(layout.origins.size()) != cfg.plan.num_buildings) {
        throw ConfigError("building_origins must list one origin per building");
    }
    // one (building, floor) slot per AP, round-robin, position uniform in the footprint
    std::vector<std::pair<int, int>> slots;
    for (int b = 0; b < cfg.plan.num_buildings; ++b) {
        for (int f = 0; f < cfg.plan.floors_per_building[static_cast<std::size_t>(b)]; ++f) {
            slots.emplace_back(b, f);
        }
    }
    for (int a = 0; a < cfg.plan.num_aps; ++a) {
        const auto [b, f] = slots[static_cast<std::size_t>(a) % slots.size()];
        const auto [ox, oy] = layout.origins[static_cast<std::size_t>(b)];
        layout.aps.push_back({ox + rng.uniform(0.0, cfg.building_w_m),
                              oy + rng.uniform(0.0, cfg.building_d_m),
                              f * cfg.floor_height_m + cfg.ap_height_m});
    }
    return layout;
}

std::vector<FingerprintRecord> sample_records(const SyntheticConfig& cfg, const Layout& layout,
                                              int total, Rng& rng) {
    std::vector<std::pair<int, int>> slots;
    for (int b = 0; b < cfg.plan.num_buildings; ++b) {
        for (int f = 0; f < cfg.plan.floors_per_building[static_cast<std::size_t>(b)]; ++f) {
            slots.emplace_back(b, f);
        }
    }
    std::vector<FingerprintRecord> records;
    records.reserve(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) {
        const auto [b, f] = slots[static_cast<std::size_t>(i) % slots.size()];
        const auto [ox, oy] = layout.origins[static_cast<std::size_t>(b)];
        FingerprintRecord rec;
        rec.building_id = b;
        rec.floor_id = f;
        rec.longitude = ox + rng.uniform(0.0, cfg.building_w_m);
        rec.latitude = oy + rng.uniform(0.0, cfg.building_d_m);
        const double rz = f * cfg.floor_height_m + cfg.receiver_height_m;
        rec.rssi.resize(static_cast<std::size_t>(cfg.plan.num_aps));
        for (std::size_t a = 0; a < layout.aps.size(); ++a) {
            const Ap& ap = layout.aps[a];
            const double dx = rec.longitude - ap.x;
            const double dy = rec.latitude - ap.y;
            const double dz = rz - ap.z;
            const double d = std::max(0.01, std::sqrt(dx * dx + dy * dy + dz * dz));
            double rssi = path_loss_rssi(cfg.ref_power_dbm, cfg.path_loss_exponent, d);
            if (cfg.noise_sigma_db > 0.0) rssi += cfg.noise_sigma_db * rng.normal();
            rec.rssi[a] = rssi < cfg.detect_threshold_dbm ? static_cast<float>(kNotDetected)
                                                          : static_cast<float>(rssi);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

double path_loss_rssi(double ref_power_dbm, double exponent, double distance_m) {
    return ref_power_dbm - 10.0 * exponent * std::log10(distance_m);
}

SyntheticSite generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
    if (cfg.plan.num_buildings < 1 || cfg.plan.num_aps < 1 ||
        static_cast<int>(cfg.plan.floors_per_building.size()) != cfg.plan.num_buildings) {
        throw ConfigError("invalid synthetic site plan");
    }
    if (cfg.noise_sigma_db < 0.0) throw ConfigError("noise sigma must be >= 0");
    if (cfg.train_records < 1 || cfg.test_records < 1) {
        throw ConfigError("record counts must be positive");
    }

    Rng ap_rng(derive_seed(seed, 0xA9));
    Rng train_rng(derive_seed(seed, 0x7121));
    Rng test_rng(derive_seed(seed, 0x7e57));

    const Layout layout = place_aps(cfg, ap_rng);
    auto train_records = sample_records(cfg, layout, cfg.train_records, train_rng);
    auto test_records = sample_records(cfg, layout, cfg.test_records, test_rng);

    SyntheticSite site;
    site.plan = cfg.plan;

    ScalerParams base;
    base.rssi_min = cfg.detect_threshold_dbm - 1.0;  // detected values stay strictly positive
    base.rssi_max = 0.0;
    const ScalerParams scaler = fit_scaler(train_records, base);

    site.train = build_dataset(train_records, site.plan, scaler, "train");
    site.test = build_dataset(test_records, site.plan, scaler, "test");

    bool any_detected = false;
    for (float v : site.train.features) {
        if (v != 0.0f) {
            any_detected = true;
            break;
        }
    }
    if (!any_detected) {
        site.warnings.push_back("detection threshold leaves every AP undetected; "
                                "all features are zero");
    }
    return site;
}

}  // namespace hst::data
