#include "hst/sha256.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>

#include "hst/errors.hpp"

namespace hst {
namespace {

std::string to_hex(const unsigned char* digest, unsigned len) {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

using CtxPtr = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

CtxPtr make_ctx() {
    CtxPtr ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 init failed");
    }
    return ctx;
}

}  // namespace

std::string sha256_hex(const unsigned char* data, std::size_t len) {
    auto ctx = make_ctx();
    if (EVP_DigestUpdate(ctx.get(), data, len) != 1) throw Error("sha256 update failed");
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned dlen = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest, &dlen) != 1) throw Error("sha256 final failed");
    return to_hex(digest, dlen);
}

std::string sha256_hex(const std::string& data) {
    return sha256_hex(reinterpret_cast<const unsigned char*>(data.data()), data.size());
}

std::string sha256_hex(const std::vector<unsigned char>& data) {
    return sha256_hex(data.data(), data.size());
}

std::string sha256_file_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path, -1, "cannot open file for hashing");
    auto ctx = make_ctx();
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        if (got > 0 && EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(got)) != 1) {
            throw Error("sha256 update failed");
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned dlen = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest, &dlen) != 1) throw Error("sha256 final failed");
    return to_hex(digest, dlen);
}

}  // namespace hst
