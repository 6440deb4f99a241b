#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dialectid/ipa.hpp"

namespace dialectid::align {

// Rule-based German grapheme-to-phone conversion driven by an ordered rewrite
// table (pattern, context, output). At each position the longest pattern
// whose context matches wins; equal lengths resolve to the earlier row.
// Approximate citation forms only: no stress, no schwa deletion.
class GermanG2P {
 public:
  static GermanG2P load(const std::filesystem::path& path);
  static GermanG2P parse(std::istream& in, std::string_view source_name);

  // Phone symbols for one word. Non-letters are ignored; letters with no
  // rule pass through unchanged.
  std::vector<std::string> transcribe(std::string_view word) const;

  ipa::PhoneSequence ref_phones(std::string_view word, const ipa::IpaChart& chart) const;

  std::size_t rule_count() const { return rules_.size(); }

 private:
  // One context alternative: tokens left and right of the pattern.
  // '#' word boundary, 'V' vowel letter, 'C' consonant letter, '.' any
  // letter, anything else a literal letter.
  struct Context {
    std::u32string left;
    std::u32string right;
  };
  struct Rule {
    std::u32string pattern;
    std::vector<Context> contexts;  // empty = unconditional
    std::vector<std::string> output;
  };

  bool context_matches(const Rule& rule, const std::u32string& word, std::size_t start) const;

  std::vector<Rule> rules_;
};

}  // namespace dialectid::align
