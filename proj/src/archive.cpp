#include "hst/archive.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

#include "hst/errors.hpp"
#include "hst/sha256.hpp"

namespace hst::io {
namespace {

constexpr const char* kB64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

void append_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

// float32 payload as explicit little-endian bytes
std::vector<unsigned char> tensor_bytes(const nn::Tensor<float>& t) {
    std::vector<unsigned char> out;
    out.reserve(t.size() * 4);
    for (float f : t.data) {
        std::uint32_t u = 0;
        std::memcpy(&u, &f, 4);
        out.push_back(static_cast<unsigned char>(u & 0xff));
        out.push_back(static_cast<unsigned char>((u >> 8) & 0xff));
        out.push_back(static_cast<unsigned char>((u >> 16) & 0xff));
        out.push_back(static_cast<unsigned char>((u >> 24) & 0xff));
    }
    return out;
}

nn::Tensor<float> tensor_from_bytes(const std::vector<std::size_t>& shape,
                                    const std::vector<unsigned char>& bytes) {
    const std::size_t n = nn::shape_product(shape);
    if (bytes.size() != n * 4) {
        throw DataError("tensor payload has " + std::to_string(bytes.size()) +
                        " bytes, expected " + std::to_string(n * 4));
    }
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t u = static_cast<std::uint32_t>(bytes[4 * i]) |
                          (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                          (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                          (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
        std::memcpy(&data[i], &u, 4);
    }
    return nn::Tensor<float>(shape, std::move(data));
}

}  // namespace

std::string base64_encode(const unsigned char* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        const unsigned b0 = data[i];
        const unsigned b1 = i + 1 < len ? data[i + 1] : 0;
        const unsigned b2 = i + 2 < len ? data[i + 2] : 0;
        out.push_back(kB64Alphabet[b0 >> 2]);
        out.push_back(kB64Alphabet[((b0 & 0x3) << 4) | (b1 >> 4)]);
        out.push_back(i + 1 < len ? kB64Alphabet[((b1 & 0xf) << 2) | (b2 >> 6)] : '=');
        out.push_back(i + 2 < len ? kB64Alphabet[b2 & 0x3f] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    static int rev[256];
    static bool init = false;
    if (!init) {
        std::fill(std::begin(rev), std::end(rev), -1);
        for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(kB64Alphabet[i])] = i;
        init = true;
    }
    if (text.size() % 4 != 0) throw DataError("base64 payload length not a multiple of 4");
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int v[4];
        int pad = 0;
        for (int j = 0; j < 4; ++j) {
            const char c = text[i + j];
            if (c == '=') {
                v[j] = 0;
                ++pad;
            } else {
                v[j] = rev[static_cast<unsigned char>(c)];
                if (v[j] < 0 || pad > 0) throw DataError("invalid base64 payload");
            }
        }
        out.push_back(static_cast<unsigned char>((v[0] << 2) | (v[1] >> 4)));
        if (pad < 2) out.push_back(static_cast<unsigned char>(((v[1] & 0xf) << 4) | (v[2] >> 2)));
        if (pad < 1) out.push_back(static_cast<unsigned char>(((v[2] & 0x3) << 6) | v[3]));
    }
    return out;
}

std::vector<unsigned char> serialize_weights(const BlockWeights& blocks) {
    std::vector<unsigned char> out;
    for (const auto& [symbol, tensors] : blocks) {
        out.insert(out.end(), symbol.begin(), symbol.end());
        out.push_back(0);
        append_u64(out, tensors.size());
        for (const auto& t : tensors) {
            append_u64(out, t.shape.size());
            for (std::size_t d : t.shape) append_u64(out, d);
            const auto payload = tensor_bytes(t);
            out.insert(out.end(), payload.begin(), payload.end());
        }
    }
    return out;
}

std::string weights_checksum(const BlockWeights& blocks) {
    return sha256_hex(serialize_weights(blocks));
}

void save_weights_archive(const std::string& path, const WeightsArchive& archive) {
    nlohmann::ordered_json doc;
    doc["format"] = "hst-weights";
    doc["version"] = 1;
    doc["model"] = archive.model;
    doc["stage"] = archive.stage;
    doc["stage_name"] = archive.stage_name;
    doc["blocks"] = nlohmann::ordered_json::array();
    for (const auto& [symbol, tensors] : archive.blocks) {
        nlohmann::ordered_json jb;
        jb["symbol"] = symbol;
        jb["tensors"] = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            nlohmann::ordered_json jt;
            jt["name"] = std::to_string(i / 2) + (i % 2 == 0 ? ".weight" : ".bias");
            jt["shape"] = tensors[i].shape;
            jt["dtype"] = "f32";
            const auto bytes = tensor_bytes(tensors[i]);
            jt["data"] = base64_encode(bytes.data(), bytes.size());
            jb["tensors"].push_back(std::move(jt));
        }
        doc["blocks"].push_back(std::move(jb));
    }
    doc["sha256"] = weights_checksum(archive.blocks);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path, -1, "cannot open archive for writing");
    out << doc.dump(1) << "\n";
    if (!out) throw DataError(path, -1, "write failed");
}

WeightsArchive load_weights_archive(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path, -1, "cannot open archive");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path, -1, std::string("malformed archive JSON: ") + e.what());
    }
    try {
        if (doc.at("format") != "hst-weights") throw DataError(path, -1, "not a weights archive");
        WeightsArchive archive;
        archive.model = doc.at("model").get<std::string>();
        archive.stage = doc.at("stage").get<int>();
        archive.stage_name = doc.value("stage_name", "");
        for (const auto& jb : doc.at("blocks")) {
            std::vector<nn::Tensor<float>> tensors;
            for (const auto& jt : jb.at("tensors")) {
                if (jt.at("dtype") != "f32") throw DataError(path, -1, "unsupported tensor dtype");
                const auto shape = jt.at("shape").get<std::vector<std::size_t>>();
                tensors.push_back(
                    tensor_from_bytes(shape, base64_decode(jt.at("data").get<std::string>())));
            }
            archive.blocks[jb.at("symbol").get<std::string>()] = std::move(tensors);
        }
        const std::string expect = doc.at("sha256").get<std::string>();
        const std::string actual = weights_checksum(archive.blocks);
        if (expect != actual) {
            throw DataError(path, -1, "archive checksum mismatch (expected " + expect + ", got " +
                                          actual + ")");
        }
        return archive;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path, -1, std::string("malformed archive: ") + e.what());
    }
}

}  // namespace hst::io
