#include "ipg/digest.hpp"

#include <openssl/evp.h>

#include <fstream>

#include "ipg/error.hpp"

namespace ipg {

std::array<uint8_t, 32> sha256(const void* data, size_t len) {
  std::array<uint8_t, 32> out{};
  unsigned int out_len = 0;
  EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr);
  return out;
}

std::string sha256_file_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return to_hex(sha256(bytes.data(), bytes.size()));
}

std::string to_hex(const std::array<uint8_t, 32>& digest) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (uint8_t b : digest) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 0xf]);
  }
  return s;
}

}  // namespace ipg
