#pragma once

#include <string>

#include "hst/dataset.hpp"

namespace hst::io {

// Binary dataset cache ("HSTCACHE"): scaled features, labels, coordinates and
// survey metadata, all little-endian. Written by prepare-data/synth, read by
// train/evaluate. Layout is deterministic — same dataset, same bytes.
void save_dataset_cache(const std::string& path, const data::Dataset& d);
data::Dataset load_dataset_cache(const std::string& path);

}  // namespace hst::io
