#ifndef RFVAR_DIGEST_HPP
#define RFVAR_DIGEST_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "rfvar/common.hpp"

namespace rfvar {

inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw IoError("sha256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0F]);
    }
    return out;
}

inline std::string file_sha256(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open for digest: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return sha256_hex(buffer.str());
}

}  // namespace rfvar

#endif  // RFVAR_DIGEST_HPP
