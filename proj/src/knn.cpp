#include "hst/knn.hpp"

#include <algorithm>
#include <map>

#include "hst/errors.hpp"

namespace hst::data {

Prediction knn_oracle_single(const Dataset& train, const float* query, int k) {
    const std::size_t n = train.count();
    const std::size_t w = train.width;
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float* row = train.features.data() + i * w;
        double d2 = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            const double d = static_cast<double>(row[j]) - query[j];
            d2 += d * d;
        }
        dist[i] = {d2, i};
    }
    const std::size_t kk = static_cast<std::size_t>(k);
    std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());

    std::map<int, int> b_votes, f_votes;
    double sx = 0.0, sy = 0.0;
    for (std::size_t r = 0; r < kk; ++r) {
        const std::size_t i = dist[r].second;
        ++b_votes[train.building[i]];
        ++f_votes[train.floor[i]];
        sx += train.x_m[i];
        sy += train.y_m[i];
    }
    const auto majority = [](const std::map<int, int>& votes) {
        int best_id = 0, best_count = -1;
        for (const auto& [id, count] : votes) {  // map order: ties go to the smallest id
            if (count > best_count) {
                best_id = id;
                best_count = count;
            }
        }
        return best_id;
    };
    return {majority(b_votes), majority(f_votes), sx / static_cast<double>(kk),
            sy / static_cast<double>(kk)};
}

std::vector<Prediction> knn_oracle(const Dataset& train, const Dataset& queries, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (static_cast<std::size_t>(k) > train.count()) {
        throw ConfigError("k exceeds the number of training records");
    }
    if (queries.width != train.width) {
        throw DataError("query feature width does not match the training set");
    }
    std::vector<Prediction> out(queries.count());
    for (std::size_t q = 0; q < queries.count(); ++q) {
        out[q] = knn_oracle_single(train, queries.features.data() + q * queries.width, k);
    }
    return out;
}

}  // namespace hst::data
