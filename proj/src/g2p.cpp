#include "dialectid/g2p.hpp"

#include <fstream>
#include <sstream>

#include "dialectid/error.hpp"
#include "dialectid/utf8.hpp"

namespace dialectid::align {

namespace {

constexpr std::u32string_view kVowelLetters = U"aeiouäöüy";

std::u32string to_u32(std::string_view text) {
  std::u32string out;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto d = utf8::decode(text, pos);
    out.push_back(d.codepoint);
    pos += d.length;
  }
  return out;
}

bool is_letter(char32_t cp) {
  if (cp >= U'a' && cp <= U'z') return true;
  if (cp < 0xC0) return false;
  if (cp == 0xD7 || cp == 0xF7) return false;  // × ÷
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
  return true;
}

bool is_vowel_letter(char32_t cp) { return kVowelLetters.find(cp) != std::u32string_view::npos; }

bool token_matches(char32_t token, char32_t letter) {
  switch (token) {
    case U'V':
      return is_vowel_letter(letter);
    case U'C':
      return !is_vowel_letter(letter);
    case U'.':
      return true;
    default:
      return token == letter;
  }
}

}  // namespace

GermanG2P GermanG2P::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open G2P rule table " + path.string());
  return parse(in, path.string());
}

GermanG2P GermanG2P::parse(std::istream& in, std::string_view source_name) {
  GermanG2P g2p;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) {
    throw ConfigError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string> fields;
    std::istringstream row(line);
    for (std::string field; std::getline(row, field, '\t');) fields.push_back(field);
    if (fields.size() != 3) fail("expected pattern<TAB>context<TAB>output");

    Rule rule;
    rule.pattern = to_u32(utf8::to_lower_german(fields[0]));
    if (rule.pattern.empty()) fail("empty pattern");

    if (fields[1] != "_" && !fields[1].empty()) {
      std::istringstream alts(fields[1]);
      for (std::string alt; std::getline(alts, alt, '|');) {
        const auto bar = alt.find('_');
        if (bar == std::string::npos || alt.find('_', bar + 1) != std::string::npos) {
          fail("context alternative '" + alt + "' needs exactly one '_'");
        }
        rule.contexts.push_back({to_u32(alt.substr(0, bar)), to_u32(alt.substr(bar + 1))});
      }
    }

    if (fields[2] != "∅") {
      std::istringstream symbols(fields[2]);
      for (std::string symbol; symbols >> symbol;) rule.output.push_back(symbol);
      if (rule.output.empty()) fail("empty output (write ∅ for silence)");
    }
    g2p.rules_.push_back(std::move(rule));
  }
  return g2p;
}

bool GermanG2P::context_matches(const Rule& rule, const std::u32string& word,
                                std::size_t start) const {
  if (rule.contexts.empty()) return true;
  const std::size_t end = start + rule.pattern.size();
  for (const auto& ctx : rule.contexts) {
    bool ok = true;
    std::size_t cursor = start;
    for (auto it = ctx.left.rbegin(); ok && it != ctx.left.rend(); ++it) {
      if (*it == U'#') {
        ok = cursor == 0;
      } else {
        ok = cursor > 0 && token_matches(*it, word[cursor - 1]);
        if (ok) --cursor;
      }
    }
    cursor = end;
    for (auto it = ctx.right.begin(); ok && it != ctx.right.end(); ++it) {
      if (*it == U'#') {
        ok = cursor == word.size();
      } else {
        ok = cursor < word.size() && token_matches(*it, word[cursor]);
        if (ok) ++cursor;
      }
    }
    if (ok) return true;
  }
  return false;
}

std::vector<std::string> GermanG2P::transcribe(std::string_view word) const {
  std::u32string letters;
  for (char32_t cp : to_u32(utf8::to_lower_german(word))) {
    if (is_letter(cp)) letters.push_back(cp);
  }

  std::vector<std::string> phones;
  for (std::size_t pos = 0; pos < letters.size();) {
    const Rule* best = nullptr;
    for (const auto& rule : rules_) {
      const std::size_t len = rule.pattern.size();
      if (best && len <= best->pattern.size()) continue;
      if (pos + len > letters.size()) continue;
      if (letters.compare(pos, len, rule.pattern) != 0) continue;
      if (!context_matches(rule, letters, pos)) continue;
      best = &rule;
    }
    if (!best) {
      phones.push_back(utf8::encode(letters[pos]));
      ++pos;
      continue;
    }
    phones.insert(phones.end(), best->output.begin(), best->output.end());
    pos += best->pattern.size();
  }
  return phones;
}

ipa::PhoneSequence GermanG2P::ref_phones(std::string_view word, const ipa::IpaChart& chart) const {
  ipa::PhoneSequence seq;
  for (const auto& symbol : transcribe(word)) seq.phones.push_back(ipa::features_of(symbol, chart));
  return seq;
}

}  // namespace dialectid::align
