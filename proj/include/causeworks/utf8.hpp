#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Narrative offsets and budgets are measured in Unicode code points so that
// glyphs such as arrows count as one character.
namespace causeworks::utf8 {

inline bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

inline std::size_t length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if (!is_continuation(c)) ++n;
  }
  return n;
}

// Byte offset of the code point with index `cp`; s.size() when past the end.
inline std::size_t byte_offset(std::string_view s, std::size_t cp) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(s[i]))) continue;
    if (seen == cp) return i;
    ++seen;
  }
  return s.size();
}

inline std::string substr(std::string_view s, std::size_t start, std::size_t end) {
  const std::size_t b = byte_offset(s, start);
  const std::size_t e = byte_offset(s, end);
  return std::string(s.substr(b, e - b));
}

}  // namespace causeworks::utf8
