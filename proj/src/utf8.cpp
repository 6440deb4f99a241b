#include "dialectid/utf8.hpp"

namespace dialectid::utf8 {

Decoded decode(std::string_view text, std::size_t pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  const unsigned char lead = byte(pos);
  if (lead < 0x80) return {lead, 1};

  std::size_t length = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    length = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    length = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    length = 4;
    cp = lead & 0x07;
  } else {
    return {0xFFFD, 1};
  }
  if (pos + length > text.size()) return {0xFFFD, 1};
  for (std::size_t i = 1; i < length; ++i) {
    const unsigned char b = byte(pos + i);
    if ((b & 0xC0) != 0x80) return {0xFFFD, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, length};
}

std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

namespace {

bool is_combining(char32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x1AB0 && cp <= 0x1AFF) ||
         (cp >= 0x1DC0 && cp <= 0x1DFF) || (cp >= 0x20D0 && cp <= 0x20FF);
}

}  // namespace

bool binds_left(char32_t cp) {
  if (is_combining(cp)) return true;
  switch (cp) {
    case 0x02D0:  // ː length
    case 0x02D1:  // ˑ half-length
    case 0x02B0:  // ʰ
    case 0x02B1:  // ʱ
    case 0x02B2:  // ʲ
    case 0x02B7:  // ʷ
    case 0x02BC:  // ʼ
    case 0x02DE:  // ˞
    case 0x02E0:  // ˠ
    case 0x02E1:  // ˡ
    case 0x02E4:  // ˤ
    case 0x207F:  // ⁿ
      return true;
    default:
      return false;
  }
}

bool is_tie_bar(char32_t cp) { return cp == 0x0361 || cp == 0x035C; }

bool is_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\v' || cp == U'\f';
}

std::size_t display_width(std::string_view text) {
  std::size_t width = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto d = decode(text, pos);
    if (!is_combining(d.codepoint)) ++width;
    pos += d.length;
  }
  return width;
}

std::string to_lower_german(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t pos = 0; pos < text.size();) {
    const auto d = decode(text, pos);
    char32_t cp = d.codepoint;
    if (cp >= U'A' && cp <= U'Z') {
      cp = cp - U'A' + U'a';
    } else if (cp == U'Ä') {
      cp = U'ä';
    } else if (cp == U'Ö') {
      cp = U'ö';
    } else if (cp == U'Ü') {
      cp = U'ü';
    } else if (cp == 0x1E9E) {
      cp = U'ß';
    }
    if (cp == 0xFFFD && d.length == 1) {
      out.push_back(text[pos]);
    } else {
      out += encode(cp);
    }
    pos += d.length;
  }
  return out;
}

}  // namespace dialectid::utf8
