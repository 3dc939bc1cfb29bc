#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ipg/error.hpp"

namespace ipg::utf8 {

/// Byte length of the UTF-8 sequence starting with `lead`, or 0 if `lead`
/// is not a valid leading byte.
inline int sequence_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 0;
}

/// Splits a UTF-8 string into one std::string per code point.
/// Throws InputError on malformed input.
inline std::vector<std::string> chars(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    int len = sequence_length(static_cast<unsigned char>(s[i]));
    if (len == 0 || i + len > s.size())
      throw InputError("invalid UTF-8 at byte " + std::to_string(i));
    for (int k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2)
        throw InputError("invalid UTF-8 continuation at byte " + std::to_string(i + k));
    }
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

/// Number of code points in a UTF-8 string.
inline size_t length(std::string_view s) { return chars(s).size(); }

/// Concatenates character tokens back into one string.
inline std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (const auto& t : toks) out += t;
  return out;
}

}  // namespace ipg::utf8
