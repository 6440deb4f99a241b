#include "support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dialectid/utf8.hpp"

namespace fs = std::filesystem;

namespace testsupport {

fs::path source_dir() { return DIALECTID_SOURCE_DIR; }
fs::path data_dir() { return source_dir() / "data"; }
fs::path fixture(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }
fs::path cli_path() { return DIALECTID_CLI_PATH; }

const Resources& resources() {
  static const Resources r = Resources::load(data_dir());
  return r;
}

const features::RuleSet& starter_rules() {
  static const features::RuleSet rules = features::RuleSet::load(data_dir() / "rules" / "starter.jsonl", resources().chart);
  return rules;
}

const data::DatasetConfig& dataset_config() {
  static const data::DatasetConfig config = data::DatasetConfig::load(data_dir() / "dataset_config.json");
  return config;
}

const std::vector<Segment>& fixture_manifest() {
  static const std::vector<Segment> manifest =
      data::annotate(data::load_manifest(fixture("manifest.jsonl")), dataset_config());
  return manifest;
}

const data::Splits& fixture_splits(Task task) {
  static const data::Splits binary = data::sample_splits(fixture_manifest(), dataset_config().spec(Task::Binary));
  static const data::Splits eight = data::sample_splits(fixture_manifest(), dataset_config().spec(Task::Eight));
  return task == Task::Binary ? binary : eight;
}

TempDir::TempDir() {
  std::string pattern = (fs::temp_directory_path() / "dialectid-test-XXXXXX").string();
  if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

CliResult run_cli(const std::string& args) {
  const std::string command = "'" + cli_path().string() + "' " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  CliResult result;
  char buffer[4096];
  std::size_t n;
  while ((n = fread(buffer, 1, sizeof buffer, pipe)) > 0) result.out.append(buffer, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string Gen::ipa_text(std::size_t max_units) {
  static const std::vector<std::string> marks{"ː", "ˑ", "ʰ", "ʲ", "ʷ", "̃", "̥", "̯", "̩"};
  static const std::vector<std::string> spaces{" ", "  ", "\t", "\n", " \t "};
  static const std::vector<std::string> odd{"\xff", "\xc3", "?", "7", "ʘ", "͡", "ɚ"};
  const auto symbols = resources().chart.symbols();
  std::string out;
  const std::size_t units = below(max_units + 1);
  for (std::size_t i = 0; i < units; ++i) {
    const std::size_t kind = below(20);
    if (kind < 12) {
      out += pick(symbols);
    } else if (kind < 15) {
      out += pick(marks);
    } else if (kind < 17) {
      out += pick(spaces);
    } else if (kind < 19) {
      out += pick(symbols) + "͡" + pick(symbols);
    } else {
      out += pick(odd);
    }
  }
  return out;
}

ipa::Phone Gen::phone() {
  static const std::vector<std::string> unknown{"ʘ", "?", "ɚ"};
  const auto& chart = resources().chart;
  static const auto symbols = chart.symbols();
  std::string symbol = chance(0.03) ? pick(unknown) : pick(symbols);
  if (chance(0.2)) symbol += "ː";
  return ipa::features_of(symbol, chart);
}

ipa::PhoneSequence Gen::phones(std::size_t min_len, std::size_t max_len) {
  ipa::PhoneSequence seq;
  const std::size_t n = min_len + below(max_len - min_len + 1);
  for (std::size_t i = 0; i < n; ++i) seq.phones.push_back(phone());
  return seq;
}

namespace {

double brute(const std::vector<ipa::Phone>& d, const std::vector<ipa::Phone>& r, std::size_t i, std::size_t j,
             const ipa::DistanceWeights& w, double gap) {
  if (i == d.size() && j == r.size()) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  if (i < d.size() && j < r.size()) best = std::min(best, ipa::phone_distance(r[j], d[i], w) + brute(d, r, i + 1, j + 1, w, gap));
  if (i < d.size()) best = std::min(best, gap + brute(d, r, i + 1, j, w, gap));
  if (j < r.size()) best = std::min(best, gap + brute(d, r, i, j + 1, w, gap));
  return best;
}

}  // namespace

double brute_force_alignment_cost(const std::vector<ipa::Phone>& dialect, const std::vector<ipa::Phone>& ref,
                                  const ipa::DistanceWeights& weights, double gap) {
  return brute(dialect, ref, 0, 0, weights, gap);
}

std::vector<align::ReferenceWord> split_words(const std::vector<ipa::Phone>& ref, Gen& gen) {
  std::vector<align::ReferenceWord> words;
  std::size_t at = 0;
  while (at < ref.size()) {
    const std::size_t len = 1 + gen.below(std::min<std::size_t>(3, ref.size() - at));
    align::ReferenceWord w;
    w.orthography = "w" + std::to_string(words.size());
    w.ref_phones.phones.assign(ref.begin() + static_cast<std::ptrdiff_t>(at),
                               ref.begin() + static_cast<std::ptrdiff_t>(at + len));
    words.push_back(std::move(w));
    at += len;
  }
  return words;
}

HumanScenario human_scenario() {
  HumanScenario s;
  // (gold, decision) blocks; nullopt = abstain.
  struct Block {
    Label gold;
    std::optional<Label> decision;
    int count;
  };
  const std::vector<Block> blocks{
      {Label::High, Label::High, 27},       {Label::High, Label::Highest, 3},   {Label::High, std::nullopt, 10},
      {Label::Highest, Label::High, 8},     {Label::Highest, Label::Highest, 20}, {Label::Highest, std::nullopt, 12},
  };
  int n = 0;
  for (const auto& b : blocks) {
    for (int i = 0; i < b.count; ++i, ++n) {
      Segment seg;
      seg.id = "h" + std::to_string(n);
      seg.corpus = Corpus::STT;
      seg.ipa_transcription = "a";
      seg.standard_german = "a";
      seg.label2 = b.gold;
      s.golds.push_back(seg);
      Prediction p;
      p.segment_id = seg.id;
      p.task = Task::Binary;
      p.source = Source::Human;
      p.label = b.decision;
      p.abstained = !b.decision;
      p.run_id = "human";
      s.predictions.push_back(p);
    }
  }
  return s;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testsupport
