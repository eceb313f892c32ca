#include "hst/cache.hpp"

#include <cstring>
#include <fstream>

#include "hst/errors.hpp"

namespace hst::io {
namespace {

constexpr char kMagic[8] = {'H', 'S', 'T', 'C', 'A', 'C', 'H', 'E'};
constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw DataError(path, -1, "cannot open cache for writing");
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v)); }
    void f32(float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        le(u);
    }
    void f64(double v) {
        std::uint64_t u;
        std::memcpy(&u, &v, 8);
        le(u);
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    void finish() {
        out_.flush();
        if (!out_) throw DataError(path_, -1, "cache write failed");
    }

private:
    template <typename U>
    void le(U v) {
        unsigned char b[sizeof(U)];
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
        }
        bytes(b, sizeof(U));
    }

    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw DataError(path, -1, "cannot open cache");
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw DataError(path_, -1, "truncated cache file");
        }
    }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    std::int32_t i32() { return static_cast<std::int32_t>(le<std::uint32_t>()); }
    std::int64_t i64() { return static_cast<std::int64_t>(le<std::uint64_t>()); }
    float f32() {
        const std::uint32_t u = le<std::uint32_t>();
        float v;
        std::memcpy(&v, &u, 4);
        return v;
    }
    double f64() {
        const std::uint64_t u = le<std::uint64_t>();
        double v;
        std::memcpy(&v, &u, 8);
        return v;
    }
    std::string str() {
        std::string s(u32(), '\0');
        bytes(s.data(), s.size());
        return s;
    }
    bool at_end() {
        in_.peek();
        return in_.eof();
    }
    const std::string& path() const { return path_; }

private:
    template <typename U>
    U le() {
        unsigned char b[sizeof(U)];
        bytes(b, sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
        return v;
    }

    std::string path_;
    std::ifstream in_;
};

}  // namespace

void save_dataset_cache(const std::string& path, const data::Dataset& d) {
    Writer w(path);
    w.bytes(kMagic, sizeof(kMagic));
    w.u32(kVersion);
    w.u64(d.count());
    w.u64(d.width);
    w.i32(d.plan.num_buildings);
    for (int f : d.plan.floors_per_building) w.i32(f);
    w.i32(d.plan.num_aps);
    w.f64(d.scaler.rssi_min);
    w.f64(d.scaler.rssi_max);
    w.f64(d.scaler.x_min);
    w.f64(d.scaler.x_max);
    w.f64(d.scaler.y_min);
    w.f64(d.scaler.y_max);
    w.str(d.tag);
    for (float v : d.features) w.f32(v);
    for (int v : d.building) w.i32(v);
    for (int v : d.floor) w.i32(v);
    for (double v : d.x_m) w.f64(v);
    for (double v : d.y_m) w.f64(v);
    for (int v : d.space_id) w.i32(v);
    for (int v : d.relative_position) w.i32(v);
    for (int v : d.user_id) w.i32(v);
    for (int v : d.phone_id) w.i32(v);
    for (long long v : d.timestamp) w.i64(v);
    w.finish();
}

data::Dataset load_dataset_cache(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) {
        throw DataError(path, -1, "not a dataset cache (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw DataError(path, -1, "unsupported cache version " + std::to_string(version));
    }
    data::Dataset d;
    const std::uint64_t count = r.u64();
    d.width = r.u64();
    d.plan.num_buildings = r.i32();
    d.plan.floors_per_building.resize(d.plan.num_buildings > 0 ? d.plan.num_buildings : 0);
    for (int& f : d.plan.floors_per_building) f = r.i32();
    d.plan.num_aps = r.i32();
    d.scaler.rssi_min = r.f64();
    d.scaler.rssi_max = r.f64();
    d.scaler.x_min = r.f64();
    d.scaler.x_max = r.f64();
    d.scaler.y_min = r.f64();
    d.scaler.y_max = r.f64();
    d.tag = r.str();
    d.features.resize(count * d.width);
    for (float& v : d.features) v = r.f32();
    d.building.resize(count);
    for (int& v : d.building) v = r.i32();
    d.floor.resize(count);
    for (int& v : d.floor) v = r.i32();
    d.x_m.resize(count);
    for (double& v : d.x_m) v = r.f64();
    d.y_m.resize(count);
    for (double& v : d.y_m) v = r.f64();
    d.space_id.resize(count);
    for (int& v : d.space_id) v = r.i32();
    d.relative_position.resize(count);
    for (int& v : d.relative_position) v = r.i32();
    d.user_id.resize(count);
    for (int& v : d.user_id) v = r.i32();
    d.phone_id.resize(count);
    for (int& v : d.phone_id) v = r.i32();
    d.timestamp.resize(count);
    for (long long& v : d.timestamp) v = r.i64();
    if (!r.at_end()) throw DataError(path, -1, "trailing bytes after cache payload");
    return d;
}

}  // namespace hst::io
