#pragma once

#include <string>
#include <vector>

#include "hst/dataset.hpp"

namespace hst::data {

inline constexpr int kUjiApCount = 520;
inline constexpr int kUjiColumnCount = 529;
inline constexpr std::size_t kUjiTrainRecords = 19937;
inline constexpr std::size_t kUjiTestRecords = 1111;

enum class UjiRole { Train, Test };

struct UjiLoadResult {
    std::vector<FingerprintRecord> records;
    std::vector<std::string> warnings;
};

// Parse a UJIIndoorLoc CSV (header row, 529 columns: WAP001..WAP520,
// LONGITUDE, LATITUDE, FLOOR, BUILDINGID, SPACEID, RELATIVEPOSITION, USERID,
// PHONEID, TIMESTAMP). Detected RSSI must lie in [-104, 0] dBm; the value
// 100 marks "not detected". A record count differing from the canonical
// 19937/1111 is reported as a warning, not an error.
UjiLoadResult load_ujiindoorloc_csv(const std::string& path, UjiRole role);

}  // namespace hst::data
