#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialectid/g2p.hpp"
#include "dialectid/ipa.hpp"

namespace dialectid::align {

// A Standard German word (etymon) and its approximate citation pronunciation.
struct ReferenceWord {
  std::string orthography;
  ipa::PhoneSequence ref_phones;
};

enum class Op { Match, Substitute, Insert, Delete };

// Insert: dialect phone with no reference counterpart.
// Delete: reference phone with no dialect counterpart.
struct AlignUnit {
  std::size_t ref_word_index;
  Op op;
  std::optional<ipa::Phone> ref_phone;
  std::optional<ipa::Phone> dialect_phone;
  double cost;
};

struct Alignment {
  std::vector<AlignUnit> units;
  double total_cost = 0.0;
  // Orthography of each reference word, indexed by AlignUnit::ref_word_index.
  std::vector<std::string> words;
};

struct AlignOptions {
  double gap_penalty = 0.6;
};

// Splits Standard German text on whitespace, strips punctuation and converts
// each word; words that yield no phones are dropped.
std::vector<ReferenceWord> reference_words(std::string_view standard_german, const GermanG2P& g2p,
                                           const ipa::IpaChart& chart);

// Globally optimal alignment of the dialect phones against the concatenated
// reference phones. Substitutions cost phone_distance, gaps cost
// gap_penalty. Ties resolve match/substitute > delete > insert at every cell,
// so the result is fully determined by the inputs.
Alignment align(const ipa::PhoneSequence& dialect, const std::vector<ReferenceWord>& refs,
                const ipa::DistanceWeights& weights, const AlignOptions& options = {});

std::string_view op_symbol(Op op);  // "=", "~", "+", "-"

// Fixed-width text table, one block per reference word in word order.
// Empty alignment renders as the empty string.
std::string render_alignment(const Alignment& alignment);

}  // namespace dialectid::align
