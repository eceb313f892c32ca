#pragma once

#include <map>
#include <string>
#include <vector>

#include "hst/tensor.hpp"

namespace hst::io {

using BlockWeights = std::map<std::string, std::vector<nn::Tensor<float>>>;

// On-disk weights archive: JSON manifest with base64 little-endian float32
// payloads and a SHA-256 content checksum. load(save(w)) is bitwise
// identical; the checksum is verified on load.
struct WeightsArchive {
    std::string model;       // model kind or "sae"
    int stage = 0;           // 0 for pretraining artifacts
    std::string stage_name;
    BlockWeights blocks;
};

void save_weights_archive(const std::string& path, const WeightsArchive& archive);
WeightsArchive load_weights_archive(const std::string& path);

// Canonical byte serialization of a weight set (symbols sorted); the basis
// of archive checksums and of the stage freeze check.
std::vector<unsigned char> serialize_weights(const BlockWeights& blocks);
std::string weights_checksum(const BlockWeights& blocks);

std::string base64_encode(const unsigned char* data, std::size_t len);
std::vector<unsigned char> base64_decode(const std::string& text);

}  // namespace hst::io
