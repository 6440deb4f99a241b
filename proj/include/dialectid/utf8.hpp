#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace dialectid::utf8 {

struct Decoded {
  char32_t codepoint;
  std::size_t length;  // bytes consumed, always >= 1
};

// Decodes the code point starting at `pos`. Malformed sequences consume one
// byte and yield U+FFFD so callers can still copy the raw bytes through.
Decoded decode(std::string_view text, std::size_t pos);

std::string encode(char32_t cp);

// Combining marks and the spacing modifier letters that IPA writes after the
// symbol they modify (length marks, aspiration, palatalization, ...).
bool binds_left(char32_t cp);

// U+0361 and U+035C join the preceding and following base symbols.
bool is_tie_bar(char32_t cp);

bool is_space(char32_t cp);

// Number of terminal columns: one per code point, zero for combining marks.
std::size_t display_width(std::string_view text);

// Lowercases ASCII letters and the German umlauts.
std::string to_lower_german(std::string_view text);

}  // namespace dialectid::utf8
