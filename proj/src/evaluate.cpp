#include "hst/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hst/errors.hpp"

namespace hst::eval {
namespace {

// Kahan-compensated accumulator; keeps the reduction deterministic and
// well-conditioned regardless of record count.
struct CompensatedSum {
    double sum = 0.0, c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

double positioning_error(const data::Prediction& pred, const data::Prediction& truth,
                         const ErrorModelConfig& cfg) {
    const double dx = truth.x_m - pred.x_m;
    const double dy = truth.y_m - pred.y_m;
    const double dist2d = std::sqrt(dx * dx + dy * dy);
    const double dfloor = std::abs(truth.floor - pred.floor);
    const double bpen = truth.building != pred.building ? cfg.building_penalty_m : 0.0;
    if (cfg.kind == ErrorModelKind::Euclidean3d) {
        const double dz = cfg.floor_height_m * dfloor;
        return std::sqrt(dist2d * dist2d + dz * dz) + bpen;
    }
    return dist2d + bpen + cfg.floor_penalty_m * dfloor;
}

EvalReport evaluate(const std::vector<data::Prediction>& predictions,
                    const std::vector<data::Prediction>& truths, const ErrorModelConfig& cfg) {
    if (predictions.size() != truths.size()) {
        throw DataError("prediction count " + std::to_string(predictions.size()) +
                        " does not match truth count " + std::to_string(truths.size()));
    }
    if (predictions.empty()) throw DataError("cannot evaluate an empty prediction set");

    const std::size_t n = predictions.size();
    EvalReport rep;
    rep.count = n;
    rep.error_model = cfg;

    std::vector<double> errors(n);
    std::size_t b_hits = 0, f_hits = 0;
    CompensatedSum sum;
    for (std::size_t i = 0; i < n; ++i) {
        b_hits += predictions[i].building == truths[i].building;
        f_hits += predictions[i].floor == truths[i].floor;
        errors[i] = positioning_error(predictions[i], truths[i], cfg);
        sum.add(errors[i]);
    }
    rep.building_hit_rate = static_cast<double>(b_hits) / static_cast<double>(n);
    rep.floor_hit_rate = static_cast<double>(f_hits) / static_cast<double>(n);
    rep.error_avg_m = sum.sum / static_cast<double>(n);

    CompensatedSum sq;
    for (double e : errors) {
        const double d = e - rep.error_avg_m;
        sq.add(d * d);
    }
    rep.error_std_m = std::sqrt(sq.sum / static_cast<double>(n));

    std::sort(errors.begin(), errors.end());
    rep.error_min_m = errors.front();
    rep.error_max_m = errors.back();
    rep.error_median_m = errors[(n - 1) / 2];  // lower middle value for even n
    return rep;
}

Comparison compare_reports(const EvalReport& a, const EvalReport& b) {
    if (a.count == 0 || b.count == 0) throw DataError("cannot compare an empty report");
    Comparison cmp;
    if (!(a.error_model == b.error_model)) {
        cmp.warnings.push_back("error models differ between reports");
    }
    if (a.dataset_tag != b.dataset_tag || a.count != b.count) {
        cmp.warnings.push_back("reports describe different datasets (" + a.dataset_tag + "/" +
                               std::to_string(a.count) + " vs " + b.dataset_tag + "/" +
                               std::to_string(b.count) + ")");
    }
    // sign convention: +1 when higher-is-better, -1 when lower-is-better
    const std::pair<const char*, int> fields[] = {
        {"building_hit_rate", +1}, {"floor_hit_rate", +1}, {"error_avg_m", -1},
        {"error_std_m", -1},       {"error_min_m", -1},    {"error_median_m", -1},
        {"error_max_m", -1},
    };
    const auto get = [](const EvalReport& r, const std::string& f) {
        if (f == "building_hit_rate") return r.building_hit_rate;
        if (f == "floor_hit_rate") return r.floor_hit_rate;
        if (f == "error_avg_m") return r.error_avg_m;
        if (f == "error_std_m") return r.error_std_m;
        if (f == "error_min_m") return r.error_min_m;
        if (f == "error_median_m") return r.error_median_m;
        return r.error_max_m;
    };
    for (const auto& [name, good_sign] : fields) {
        ReportDelta d;
        d.field = name;
        d.a = get(a, name);
        d.b = get(b, name);
        d.delta = d.b - d.a;
        if (d.delta != 0.0) {
            const bool improved = (d.delta > 0.0) == (good_sign > 0);
            (improved ? cmp.fields_improved : cmp.fields_regressed) += 1;
        }
        cmp.deltas.push_back(d);
    }
    return cmp;
}

std::string report_table(const std::vector<EvalReport>& rows) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-20s %12s %12s %9s %8s %8s %8s %8s\n", "Model",
                  "Building hit", "Floor hit", "Average", "Std.", "Min.", "Median", "Max.");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-20s %11.2f%% %11.2f%% %8.2fm %7.2fm %7.2fm %7.2fm %7.2fm\n",
                      r.model.c_str(), 100.0 * r.building_hit_rate, 100.0 * r.floor_hit_rate,
                      r.error_avg_m, r.error_std_m, r.error_min_m, r.error_median_m, r.error_max_m);
        out += buf;
    }
    return out;
}

std::string comparison_table(const Comparison& cmp) {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof(buf), "%-20s %12s %12s %12s\n", "Field", "a", "b", "delta");
    out += buf;
    for (const auto& d : cmp.deltas) {
        std::snprintf(buf, sizeof(buf), "%-20s %12.4f %12.4f %+12.4f\n", d.field.c_str(), d.a, d.b,
                      d.delta);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "improved %d, regressed %d\n", cmp.fields_improved,
                  cmp.fields_regressed);
    out += buf;
    for (const auto& w : cmp.warnings) out += "warning: " + w + "\n";
    return out;
}

}  // namespace hst::eval
