#pragma once

#include <string>
#include <vector>

#include "hst/dataset.hpp"

namespace hst::eval {

enum class ErrorModelKind { Penalty, Euclidean3d };

// 3-D localization error model.
//   Penalty:     err = dist2d + building_penalty_m * [b != b^] + floor_penalty_m * |f - f^|
//   Euclidean3d: err = sqrt(dist2d^2 + (floor_height_m * |f - f^|)^2)
//                      + building_penalty_m * [b != b^]
struct ErrorModelConfig {
    ErrorModelKind kind = ErrorModelKind::Penalty;
    double building_penalty_m = 50.0;
    double floor_penalty_m = 4.0;
    double floor_height_m = 4.0;  // euclidean3d only

    bool operator==(const ErrorModelConfig&) const = default;
};

// Hit rates plus 3-D error statistics, the per-run result row.
struct EvalReport {
    std::string model;
    std::string dataset_tag;
    std::size_t count = 0;
    double building_hit_rate = 0.0;
    double floor_hit_rate = 0.0;
    double error_avg_m = 0.0;
    double error_std_m = 0.0;
    double error_min_m = 0.0;
    double error_median_m = 0.0;
    double error_max_m = 0.0;
    ErrorModelConfig error_model;
};

double positioning_error(const data::Prediction& pred, const data::Prediction& truth,
                         const ErrorModelConfig& cfg);

// Floor hits are counted independently of building correctness. Median for
// even counts is the lower of the two middle values; std is the population
// standard deviation.
EvalReport evaluate(const std::vector<data::Prediction>& predictions,
                    const std::vector<data::Prediction>& truths, const ErrorModelConfig& cfg);

struct ReportDelta {
    std::string field;
    double a = 0.0, b = 0.0, delta = 0.0;  // delta = b - a
};

struct Comparison {
    std::vector<ReportDelta> deltas;
    int fields_improved = 0;   // error fields lower / hit rates higher in b
    int fields_regressed = 0;
    std::vector<std::string> warnings;
};

Comparison compare_reports(const EvalReport& a, const EvalReport& b);

std::string report_table(const std::vector<EvalReport>& rows);
std::string comparison_table(const Comparison& cmp);

}  // namespace hst::eval
