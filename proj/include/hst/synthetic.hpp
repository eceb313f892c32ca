#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hst/dataset.hpp"

namespace hst::data {

// Desk-scale stand-in for a fingerprint survey: log-distance path loss over
// randomly placed per-floor APs.
//   RSSI = ref_power_dbm - 10 * path_loss_exponent * log10(d) + N(0, sigma^2)
// with d the 3-D distance (floor height included); values below
// detect_threshold_dbm become not-detected.
struct SyntheticConfig {
    SitePlan plan{2, {3, 3}, 50};
    double path_loss_exponent = 4.5;  // obstructed-office range
    double ref_power_dbm = -30.0;   // at 1 m
    double noise_sigma_db = 4.0;
    double detect_threshold_dbm = -95.0;
    int train_records = 2000;  // spread evenly over all floors
    int test_records = 200;
    double floor_height_m = 4.0;
    double building_w_m = 16.0;
    double building_d_m = 10.0;
    // per-building origin offsets; defaults place buildings 120 m apart on x
    std::vector<std::pair<double, double>> building_origins;
    double ap_height_m = 2.2;
    double receiver_height_m = 1.2;
};

struct SyntheticSite {
    Dataset train;
    Dataset test;
    SitePlan plan;
    std::vector<std::string> warnings;
};

// Deterministic given (cfg, seed). AP placement, record placement and noise
// all derive from `seed`.
SyntheticSite generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

// Noise-free RSSI at 3-D distance d (meters); exposed for tests.
double path_loss_rssi(double ref_power_dbm, double exponent, double distance_m);

}  // namespace hst::data
