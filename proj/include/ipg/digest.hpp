#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ipg {

/// SHA-256 of a byte buffer.
std::array<uint8_t, 32> sha256(const void* data, size_t len);

/// SHA-256 of a file's contents as a lowercase hex string.
/// Throws InputError if the file cannot be read.
std::string sha256_file_hex(const std::string& path);

std::string to_hex(const std::array<uint8_t, 32>& digest);

}  // namespace ipg
