#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "hst/archive.hpp"
#include "hst/cache.hpp"
#include "hst/sha256.hpp"

using namespace hst;
using testutil::TempDir;

namespace {

io::BlockWeights sample_weights() {
    io::BlockWeights w;
    w["E"] = {testutil::random_tensor({4, 3}, 1).cast<float>(),
              testutil::random_tensor({3}, 2).cast<float>()};
    w["C"] = {testutil::random_tensor({3, 2, 2}, 3).cast<float>(),
              testutil::random_tensor({2}, 4).cast<float>()};
    return w;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream(path, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("sha256: known vectors") {
    CHECK(sha256_hex(std::string{}) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex(std::string{"abc"}) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("base64: round trip and error handling") {
    const unsigned char raw[] = {0x00, 0x01, 0xfe, 0xff, 0x42};
    for (std::size_t n = 0; n <= sizeof raw; ++n) {
        const std::string enc = io::base64_encode(raw, n);
        const auto dec = io::base64_decode(enc);
        CHECK(dec == std::vector<unsigned char>(raw, raw + n));
    }
    CHECK(io::base64_encode(nullptr, 0).empty());
    CHECK_THROWS_AS(io::base64_decode("not base64!!"), DataError);
    CHECK_THROWS_AS(io::base64_decode("abc"), DataError);  // bad length
}

TEST_CASE("weights checksum: stable and content-sensitive") {
    const auto w = sample_weights();
    auto w2 = w;
    CHECK(io::weights_checksum(w) == io::weights_checksum(w2));
    w2.at("E")[0].data[0] += 1e-6f;
    CHECK(io::weights_checksum(w) != io::weights_checksum(w2));

    // symbol order does not matter (serialization sorts)
    io::BlockWeights reordered;
    reordered["C"] = w.at("C");
    reordered["E"] = w.at("E");
    CHECK(io::weights_checksum(w) == io::weights_checksum(reordered));
}

TEST_CASE("archive: load(save(w)) is bitwise identical") {
    TempDir dir("arch");
    const io::WeightsArchive archive{"linked-dnn", 2, "location", sample_weights()};
    io::save_weights_archive(dir.str("w.json"), archive);

    const auto loaded = io::load_weights_archive(dir.str("w.json"));
    CHECK(loaded.model == "linked-dnn");
    CHECK(loaded.stage == 2);
    CHECK(loaded.stage_name == "location");
    REQUIRE(loaded.blocks.size() == archive.blocks.size());
    for (const auto& [sym, tensors] : archive.blocks) {
        const auto& got = loaded.blocks.at(sym);
        REQUIRE(got.size() == tensors.size());
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            CHECK(got[i].shape == tensors[i].shape);
            CHECK(got[i].data == tensors[i].data);  // bitwise via float equality
        }
    }

    // a second save of the loaded archive produces identical bytes
    io::save_weights_archive(dir.str("w2.json"), loaded);
    CHECK(slurp(dir.str("w.json")) == slurp(dir.str("w2.json")));
}

TEST_CASE("archive: corruption is detected") {
    TempDir dir("arch");
    io::save_weights_archive(dir.str("w.json"), {"sae", 0, "sae", sample_weights()});
    std::string text = slurp(dir.str("w.json"));

    // flip one base64 payload character (single-bit-level corruption)
    const auto pos = text.find("\"data\": \"");
    REQUIRE(pos != std::string::npos);
    const std::size_t target = pos + 10;
    text[target] = text[target] == 'A' ? 'B' : 'A';
    spit(dir.str("bad.json"), text);
    CHECK_THROWS_WITH_AS(io::load_weights_archive(dir.str("bad.json")),
                         doctest::Contains("checksum"), DataError);

    spit(dir.str("junk.json"), "{\"format\": \"something-else\"}");
    CHECK_THROWS_AS(io::load_weights_archive(dir.str("junk.json")), DataError);
    spit(dir.str("trunc.json"), text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(io::load_weights_archive(dir.str("trunc.json")), DataError);
    CHECK_THROWS_AS(io::load_weights_archive(dir.str("absent.json")), DataError);
}

TEST_CASE("dataset cache: round trip preserves every field") {
    TempDir dir("cache");
    const auto site = testutil::tiny_site();
    const auto& d = site.train;
    io::save_dataset_cache(dir.str("d.bin"), d);
    const auto r = io::load_dataset_cache(dir.str("d.bin"));

    CHECK(r.plan.num_buildings == d.plan.num_buildings);
    CHECK(r.plan.floors_per_building == d.plan.floors_per_building);
    CHECK(r.plan.num_aps == d.plan.num_aps);
    CHECK(r.scaler.rssi_min == d.scaler.rssi_min);
    CHECK(r.scaler.x_min == d.scaler.x_min);
    CHECK(r.scaler.y_max == d.scaler.y_max);
    CHECK(r.tag == d.tag);
    CHECK(r.width == d.width);
    CHECK(r.features == d.features);
    CHECK(r.building == d.building);
    CHECK(r.floor == d.floor);
    CHECK(r.x_m == d.x_m);
    CHECK(r.y_m == d.y_m);
    CHECK(r.space_id == d.space_id);
    CHECK(r.relative_position == d.relative_position);
    CHECK(r.user_id == d.user_id);
    CHECK(r.phone_id == d.phone_id);
    CHECK(r.timestamp == d.timestamp);

    // same dataset, same bytes
    io::save_dataset_cache(dir.str("d2.bin"), r);
    CHECK(slurp(dir.str("d.bin")) == slurp(dir.str("d2.bin")));
}

TEST_CASE("dataset cache: rejects damaged files") {
    TempDir dir("cache");
    const auto site = testutil::tiny_site();
    io::save_dataset_cache(dir.str("d.bin"), site.train);
    const std::string bytes = slurp(dir.str("d.bin"));

    spit(dir.str("trunc.bin"), bytes.substr(0, bytes.size() - 7));
    CHECK_THROWS_AS(io::load_dataset_cache(dir.str("trunc.bin")), DataError);

    spit(dir.str("trail.bin"), bytes + "x");
    CHECK_THROWS_AS(io::load_dataset_cache(dir.str("trail.bin")), DataError);

    spit(dir.str("magic.bin"), "NOTCACHE" + bytes.substr(8));
    CHECK_THROWS_AS(io::load_dataset_cache(dir.str("magic.bin")), DataError);

    CHECK_THROWS_AS(io::load_dataset_cache(dir.str("absent.bin")), DataError);
}
