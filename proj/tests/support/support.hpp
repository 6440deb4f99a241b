#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dialectid/alignment.hpp"
#include "dialectid/dataset.hpp"
#include "dialectid/eval.hpp"
#include "dialectid/features.hpp"
#include "dialectid/prediction.hpp"
#include "dialectid/resources.hpp"
#include "dialectid/segment.hpp"

namespace testsupport {

using namespace dialectid;

std::filesystem::path source_dir();
std::filesystem::path data_dir();
std::filesystem::path fixture(const std::string& name);
std::filesystem::path cli_path();

// Loaded once per process.
const Resources& resources();
const features::RuleSet& starter_rules();
const data::DatasetConfig& dataset_config();

// The annotated synthetic manifest and its configured splits.
const std::vector<Segment>& fixture_manifest();
const data::Splits& fixture_splits(Task task);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct CliResult {
  int exit_code = -1;
  std::string out;  // stdout and stderr, interleaved
};
CliResult run_cli(const std::string& args);

// Hand-rolled generators for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  std::uint64_t next() { return rng_(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }

  // Charted symbols, diacritics, tie bars, stray marks, whitespace runs and
  // occasional malformed bytes.
  std::string ipa_text(std::size_t max_units);
  // Phones drawn from the chart, with length marks and the odd unknown symbol.
  ipa::PhoneSequence phones(std::size_t min_len, std::size_t max_len);
  ipa::Phone phone();

 private:
  std::mt19937_64 rng_;
};

// Exhaustive minimum over every alignment path (no dynamic programming).
double brute_force_alignment_cost(const std::vector<ipa::Phone>& dialect, const std::vector<ipa::Phone>& ref,
                                  const ipa::DistanceWeights& weights, double gap);

// Reference words built from a phone list split at the given sizes.
std::vector<align::ReferenceWord> split_words(const std::vector<ipa::Phone>& ref, Gen& gen);

// Decisions matching the human-annotation scenario: 80 binary segments, 58
// decided with 47 correct, 22 abstentions (10 on High, 12 on Highest gold).
struct HumanScenario {
  std::vector<Segment> golds;
  std::vector<Prediction> predictions;
};
HumanScenario human_scenario();

std::string slurp(const std::filesystem::path& path);

}  // namespace testsupport
