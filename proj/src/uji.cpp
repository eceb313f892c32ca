#include "hst/uji.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hst/errors.hpp"

namespace hst::data {
namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

double parse_double(std::string_view s, const std::string& path, long line, const char* what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw DataError(path, line, std::string("unparseable ") + what + " value '" +
                                        std::string(s) + "'");
    }
    return v;
}

long long parse_int(std::string_view s, const std::string& path, long line, const char* what) {
    // some forks store integer columns as decimals (e.g. "2.0")
    const double v = parse_double(s, path, line, what);
    return static_cast<long long>(v);
}

}  // namespace

UjiLoadResult load_ujiindoorloc_csv(const std::string& path, UjiRole role) {
    std::ifstream in(path);
    if (!in) throw DataError(path, -1, "cannot open file");

    UjiLoadResult result;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path, 1, "missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string_view> fields;
    split_fields(line, fields);
    if (fields.size() != kUjiColumnCount) {
        throw DataError(path, 1, "expected " + std::to_string(kUjiColumnCount) + " columns, found " +
                                     std::to_string(fields.size()));
    }
    if (fields[0] != "WAP001" || fields[519] != "WAP520" || fields[520] != "LONGITUDE") {
        throw DataError(path, 1, "header does not match the published UJIIndoorLoc column names");
    }

    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        split_fields(line, fields);
        if (fields.size() != kUjiColumnCount) {
            throw DataError(path, line_no, "row has " + std::to_string(fields.size()) +
                                               " columns, expected " +
                                               std::to_string(kUjiColumnCount));
        }
        FingerprintRecord rec;
        rec.rssi.resize(kUjiApCount);
        for (int i = 0; i < kUjiApCount; ++i) {
            const double v = parse_double(fields[static_cast<std::size_t>(i)], path, line_no, "RSSI");
            if (v != kNotDetected && (v < -104.0 || v > 0.0)) {
                throw DataError(path, line_no, "RSSI " + std::to_string(v) +
                                                   " outside [-104,0] dBm and not the marker 100");
            }
            rec.rssi[static_cast<std::size_t>(i)] = static_cast<float>(v);
        }
        rec.longitude = parse_double(fields[520], path, line_no, "LONGITUDE");
        rec.latitude = parse_double(fields[521], path, line_no, "LATITUDE");
        rec.floor_id = static_cast<int>(parse_int(fields[522], path, line_no, "FLOOR"));
        rec.building_id = static_cast<int>(parse_int(fields[523], path, line_no, "BUILDINGID"));
        rec.space_id = static_cast<int>(parse_int(fields[524], path, line_no, "SPACEID"));
        rec.relative_position =
            static_cast<int>(parse_int(fields[525], path, line_no, "RELATIVEPOSITION"));
        rec.user_id = static_cast<int>(parse_int(fields[526], path, line_no, "USERID"));
        rec.phone_id = static_cast<int>(parse_int(fields[527], path, line_no, "PHONEID"));
        rec.timestamp = parse_int(fields[528], path, line_no, "TIMESTAMP");
        if (rec.floor_id < 0 || rec.building_id < 0) {
            throw DataError(path, line_no, "negative building/floor id");
        }
        result.records.push_back(std::move(rec));
    }

    const std::size_t expected = role == UjiRole::Train ? kUjiTrainRecords : kUjiTestRecords;
    if (result.records.size() != expected) {
        result.warnings.push_back(path + ": " + std::to_string(result.records.size()) +
                                  " records, canonical file has " + std::to_string(expected));
    }
    return result;
}

}  // namespace hst::data
