#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dialectid/alignment.hpp"
#include "dialectid/ipa.hpp"
#include "dialectid/labels.hpp"
#include "dialectid/prediction.hpp"
#include "dialectid/resources.hpp"
#include "dialectid/segment.hpp"

namespace dialectid::features {

// Conjunction of constraints on one phone; empty lists mean "any".
struct PhonePredicate {
  std::vector<std::string> symbols;
  std::optional<ipa::Category> category;
  std::vector<ipa::Height> heights;
  std::vector<ipa::Backness> backness;
  std::optional<bool> rounded;
  std::vector<ipa::Place> places;
  std::vector<ipa::Manner> manners;
  std::optional<bool> voiced;
  std::optional<bool> is_long;

  bool matches(const ipa::Phone& phone) const;
};

enum class WordPosition { Any, Initial, Final };

struct RefPattern {
  PhonePredicate phone;
  std::optional<std::string> ortho;  // lowercase substring of the reference word
  WordPosition position = WordPosition::Any;
};

struct DialectPattern {
  PhonePredicate phone;
  bool gap = false;  // matches a deleted reference phone instead of a dialect phone
};

using ClassWeights = std::vector<std::pair<Label, double>>;

struct FeatureRule {
  std::string id;
  std::string name;
  std::string description;
  RefPattern ref_pattern;
  DialectPattern dialect_pattern;
  ClassWeights class_weights;
  Task scope = Task::Binary;

  double weight(Label label) const;
};

class RuleSet {
 public:
  // One JSON object per line; '#' lines and blank lines are skipped.
  // Validation failures throw DataError naming the offending rule.
  static RuleSet load(const std::filesystem::path& path, const ipa::IpaChart& chart);
  static RuleSet parse(std::istream& in, std::string_view source_name, const ipa::IpaChart& chart);

  std::span<const FeatureRule> rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  // Every class weight multiplied by `factor` (> 0).
  RuleSet scaled(double factor) const;

 private:
  std::vector<FeatureRule> rules_;
};

struct FeatureHit {
  std::string rule_id;
  std::size_t first_unit;  // inclusive unit range in the alignment
  std::size_t last_unit;
  std::size_t ref_word_index;
  std::string ref_word;
  std::vector<std::string> dialect_phones;
  ClassWeights class_weights;
};

// A rule fires at a unit whose reference phone satisfies ref_pattern when the
// unit itself or an adjacent unit of the same reference word satisfies
// dialect_pattern. Only rules scoped to `task` fire. Ordered by position.
std::vector<FeatureHit> detect(const align::Alignment& alignment, const RuleSet& rules, Task task);

// Softmax over summed class weights in the task's label space.
ClassScores score(std::span<const FeatureHit> hits, Task task);

struct Analysis {
  align::Alignment alignment;
  std::vector<FeatureHit> hits;
  ClassScores scores;
};

Analysis analyze(std::string_view ipa_text, std::string_view standard_german, const RuleSet& rules,
                 Task task, const Resources& resources);

// tokenize -> reference words -> align -> detect -> score -> argmax.
Prediction classify_rules(const Segment& segment, const RuleSet& rules, Task task,
                          const Resources& resources);

}  // namespace dialectid::features
