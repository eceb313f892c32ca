#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "hst/knn.hpp"
#include "hst/synthetic.hpp"

using namespace hst::data;

TEST_CASE("path loss: reference power at 1 m, +6.02 dB per doubling at n=2") {
    CHECK(path_loss_rssi(-30.0, 3.5, 1.0) == doctest::Approx(-30.0));
    const double d1 = path_loss_rssi(-30.0, 2.0, 5.0);
    const double d2 = path_loss_rssi(-30.0, 2.0, 10.0);
    CHECK(d1 - d2 == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-9));  // 6.02 dB
    // monotone decreasing in distance
    CHECK(path_loss_rssi(-30.0, 3.5, 2.0) > path_loss_rssi(-30.0, 3.5, 3.0));
}

TEST_CASE("synthetic: deterministic, counted, and label-complete") {
    const SyntheticConfig cfg;  // 2 buildings x 3 floors, 50 APs, 2000/200
    const auto a = generate_synthetic(cfg, 9);
    const auto b = generate_synthetic(cfg, 9);
    const auto c = generate_synthetic(cfg, 10);

    CHECK(a.train.count() == 2000);
    CHECK(a.test.count() == 200);
    CHECK(a.train.width == 50);
    CHECK(a.train.features == b.train.features);
    CHECK(a.test.features == b.test.features);
    CHECK(a.train.features != c.train.features);

    // every (building, floor) pair occurs in the training split
    std::set<std::pair<int, int>> strata;
    for (std::size_t i = 0; i < a.train.count(); ++i) {
        CHECK(a.train.building[i] >= 0);
        CHECK(a.train.building[i] < 2);
        CHECK(a.train.floor[i] >= 0);
        CHECK(a.train.floor[i] < 3);
        strata.insert({a.train.building[i], a.train.floor[i]});
    }
    CHECK(strata.size() == 6);
    CHECK(a.warnings.empty());

    // coordinates stay inside each building's footprint
    for (std::size_t i = 0; i < a.train.count(); ++i) {
        const double ox = 120.0 * a.train.building[i];
        CHECK(a.train.x_m[i] >= ox);
        CHECK(a.train.x_m[i] <= ox + cfg.building_w_m);
        CHECK(a.train.y_m[i] >= 0.0);
        CHECK(a.train.y_m[i] <= cfg.building_d_m);
    }
}

TEST_CASE("synthetic: threshold above reference power yields all-zero features") {
    SyntheticConfig cfg = testutil::tiny_site_config();
    cfg.detect_threshold_dbm = 0.0;  // above ref_power_dbm=-30: nothing detected
    const auto site = generate_synthetic(cfg, 4);
    CHECK(!site.warnings.empty());
    for (float v : site.train.features) CHECK(v == 0.0f);
}

TEST_CASE("synthetic: origins validated") {
    SyntheticConfig cfg;
    cfg.building_origins = {{0.0, 0.0}};  // 2 buildings need 2 origins
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), hst::ConfigError);
}

TEST_CASE("knn: exact-match query returns its own record at k=1") {
    const auto site = testutil::tiny_site();
    Dataset queries = site.train.subset({5, 17, 40});
    const auto preds = knn_oracle(site.train, queries, 1);
    REQUIRE(preds.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(preds[i].building == queries.building[i]);
        CHECK(preds[i].floor == queries.floor[i]);
        CHECK(preds[i].x_m == doctest::Approx(queries.x_m[i]));
        CHECK(preds[i].y_m == doctest::Approx(queries.y_m[i]));
    }
}

TEST_CASE("knn: k=3 coordinates are the neighbor centroid") {
    // three training points, one query equidistant-ish: centroid expected
    const SitePlan plan{1, {1}, 2};
    ScalerParams scaler;
    scaler.x_min = 0;
    scaler.x_max = 10;
    scaler.y_min = 0;
    scaler.y_max = 10;

    std::vector<FingerprintRecord> recs(3);
    for (int i = 0; i < 3; ++i) {
        recs[i].rssi = {float(-10 * (i + 1)), -50.0f};
        recs[i].building_id = 0;
        recs[i].floor_id = 0;
        recs[i].longitude = i;      // x: 0, 1, 2
        recs[i].latitude = 3 * i;   // y: 0, 3, 6
    }
    const Dataset train = build_dataset(recs, plan, scaler, "train");
    const Dataset query = train.subset({1});
    const auto preds = knn_oracle(train, query, 3);
    REQUIRE(preds.size() == 1);
    CHECK(preds[0].x_m == doctest::Approx(1.0));
    CHECK(preds[0].y_m == doctest::Approx(3.0));
}

TEST_CASE("knn: majority vote with smallest-id tie break") {
    const SitePlan plan{2, {2, 2}, 1};
    ScalerParams scaler;
    scaler.x_min = 0;
    scaler.x_max = 1;
    scaler.y_min = 0;
    scaler.y_max = 1;

    // two equidistant neighbors with different buildings -> tie -> building 0
    std::vector<FingerprintRecord> recs(2);
    recs[0].rssi = {-40.0f};
    recs[0].building_id = 1;
    recs[0].floor_id = 1;
    recs[0].longitude = 0.2;
    recs[0].latitude = 0.2;
    recs[1].rssi = {-60.0f};
    recs[1].building_id = 0;
    recs[1].floor_id = 0;
    recs[1].longitude = 0.4;
    recs[1].latitude = 0.9;
    const Dataset train = build_dataset(recs, plan, scaler, "train");

    std::vector<FingerprintRecord> q(1);
    q[0].rssi = {-50.0f};
    q[0].building_id = 0;
    q[0].floor_id = 0;
    q[0].longitude = 0.5;
    q[0].latitude = 0.5;
    const Dataset queries = build_dataset(q, plan, scaler, "test");

    const auto preds = knn_oracle(train, queries, 2);
    REQUIRE(preds.size() == 1);
    CHECK(preds[0].building == 0);
    CHECK(preds[0].floor == 0);

    CHECK_THROWS_AS(knn_oracle(train, queries, 0), hst::ConfigError);
    CHECK_THROWS_AS(knn_oracle(Dataset{}, queries, 1), hst::ConfigError);  // k > record count
}

TEST_CASE("knn: oracle beats chance on the tiny site") {
    const auto site = testutil::tiny_site();
    const auto preds = knn_oracle(site.train, site.test, 3);
    const auto truth = ground_truth(site.test);
    std::size_t floor_hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        floor_hits += preds[i].floor == truth[i].floor;
    }
    CHECK(double(floor_hits) / preds.size() > 0.5);
}
