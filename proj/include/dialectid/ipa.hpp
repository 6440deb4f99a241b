#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dialectid::ipa {

enum class Category { Vowel, Consonant, Unknown };

// Ordinal scales; distance costs are proportional to the step count.
enum class Height { Close, NearClose, CloseMid, Mid, OpenMid, NearOpen, Open };
enum class Backness { Front, Central, Back };
enum class Place {
  Bilabial,
  Labiodental,
  Dental,
  Alveolar,
  Postalveolar,
  Retroflex,
  Palatal,
  Velar,
  Uvular,
  Pharyngeal,
  Glottal
};
enum class Manner {
  Plosive,
  Nasal,
  Trill,
  Tap,
  Fricative,
  LateralFricative,
  Approximant,
  LateralApproximant
};

struct VowelFeatures {
  Height height;
  Backness backness;
  bool rounded;
  bool operator==(const VowelFeatures&) const = default;
};

struct ConsonantFeatures {
  Place place;
  Manner manner;
  bool voiced;
  bool operator==(const ConsonantFeatures&) const = default;
};

// monostate = unknown symbol.
using FeatureBundle = std::variant<std::monostate, VowelFeatures, ConsonantFeatures>;

class Phone {
 public:
  Phone(std::string symbol, FeatureBundle features, bool is_long);

  const std::string& symbol() const { return symbol_; }
  Category category() const;
  const VowelFeatures* vowel() const { return std::get_if<VowelFeatures>(&features_); }
  const ConsonantFeatures* consonant() const { return std::get_if<ConsonantFeatures>(&features_); }
  const FeatureBundle& features() const { return features_; }
  bool is_long() const { return long_; }

  bool operator==(const Phone&) const = default;

 private:
  std::string symbol_;
  FeatureBundle features_;
  bool long_;
};

// A whitespace run that tokenize() dropped, placed before phone `before`.
struct WordBreak {
  std::size_t before;
  std::string text;
  bool operator==(const WordBreak&) const = default;
};

struct PhoneSequence {
  std::vector<Phone> phones;
  std::vector<WordBreak> breaks;

  std::size_t size() const { return phones.size(); }
  bool empty() const { return phones.empty(); }

  // Phone symbols interleaved with the recorded whitespace: the tokenizer input.
  std::string reconstruct() const;
  // Space-joined symbols, for logs and error messages.
  std::string joined(std::string_view sep = " ") const;
  bool operator==(const PhoneSequence&) const = default;
};

std::string_view category_name(Category c);
std::string_view height_name(Height h);
std::string_view backness_name(Backness b);
std::string_view place_name(Place p);
std::string_view manner_name(Manner m);

// Symbol -> feature bundle table for single base code points. Immutable after
// load and safe to share across threads.
class IpaChart {
 public:
  static IpaChart load(const std::filesystem::path& path);
  static IpaChart parse(std::istream& in, std::string_view source_name);

  // nullptr when the base symbol is not charted.
  const FeatureBundle* find(std::string_view base_symbol) const;
  std::vector<std::string> symbols() const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, FeatureBundle, std::less<>> entries_;
};

struct DistanceWeights {
  double height_step;
  double backness_step;
  double rounding;
  double place_step;
  double manner_step;
  double voicing;
  double length;
  // Cost for distinct symbols whose charted features coincide (e.g. t vs tʰ).
  double distinct_floor;
  double unknown_penalty;
  double cross_category;

  static DistanceWeights load(const std::filesystem::path& path);
  static DistanceWeights parse(std::string_view json_text, std::string_view source_name);
};

// Diacritics and the length mark attach to the preceding base symbol; a tie
// bar also pulls in the following base symbol. Whitespace is dropped into
// `breaks`. Never fails: uncharted symbols become Category::Unknown phones.
PhoneSequence tokenize(std::string_view ipa_text, const IpaChart& chart);

// Chart lookup on the first code point; only the length mark changes the result.
Phone features_of(std::string_view symbol, const IpaChart& chart);

// 0 iff symbols are identical; symmetric; cross-category pairs cost
// `cross_category`, pairs with an unknown phone cost `unknown_penalty`, and
// same-category pairs cost the clamped weighted feature mismatch.
double phone_distance(const Phone& a, const Phone& b, const DistanceWeights& weights);

// Symbols in `seq` that the chart does not cover, deduplicated, in first-seen order.
std::vector<std::string> unknown_symbols(const PhoneSequence& seq);

}  // namespace dialectid::ipa
