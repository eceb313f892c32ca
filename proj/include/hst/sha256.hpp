#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hst {

std::string sha256_hex(const unsigned char* data, std::size_t len);
std::string sha256_hex(const std::string& data);
std::string sha256_hex(const std::vector<unsigned char>& data);

// Streaming hash of a file's contents; throws DataError if unreadable.
std::string sha256_file_hex(const std::string& path);

}  // namespace hst
