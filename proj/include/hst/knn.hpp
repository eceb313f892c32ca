#pragma once

#include <vector>

#include "hst/dataset.hpp"

namespace hst::data {

// Brute-force k-nearest-neighbor baseline in scaled-RSSI space (Euclidean).
// Building/floor by majority vote (ties -> smallest id); coordinates as the
// unweighted mean of the k neighbors. Independent of the network stack; used
// as the desk-scale oracle.
std::vector<Prediction> knn_oracle(const Dataset& train, const Dataset& queries, int k);

Prediction knn_oracle_single(const Dataset& train, const float* query, int k);

}  // namespace hst::data
