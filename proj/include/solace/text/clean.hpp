#pragma once

#include <string>
#include <string_view>

#include "solace/text/utf8.hpp"

namespace solace::text {

/// True for code points in the CJK Unified Ideographs block and its
/// extensions A through H.
constexpr bool is_cjk_ideograph(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // main block
         (cp >= 0x3400 && cp <= 0x4DBF) ||    // ext A
         (cp >= 0x20000 && cp <= 0x2A6DF) ||  // ext B
         (cp >= 0x2A700 && cp <= 0x2EBEF) ||  // ext C-F, I
         (cp >= 0x30000 && cp <= 0x323AF);    // ext G-H
}

enum class CleanProfile { cjk, passthrough };

/// Keeps only CJK ideographs, in order. Punctuation, Latin letters, digits,
/// whitespace and everything else are dropped.
inline std::string clean_text(std::string_view raw, CleanProfile profile = CleanProfile::cjk) {
  if (profile == CleanProfile::passthrough) return std::string(raw);
  std::string out;
  out.reserve(raw.size());
  for (char32_t cp : utf8_decode(raw))
    if (is_cjk_ideograph(cp)) utf8_append(out, cp);
  return out;
}

}  // namespace solace::text
