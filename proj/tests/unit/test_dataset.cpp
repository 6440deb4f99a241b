#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "dialectid/dataset.hpp"
#include "dialectid/error.hpp"
#include "support.hpp"

using namespace dialectid;
using namespace testsupport;

namespace {

constexpr const char* kHeader = "{\"format\":\"dialectid-manifest\",\"version\":1}\n";

std::vector<Segment> parse(const std::string& text) {
  std::istringstream in(text);
  return data::parse_manifest(in, "m.jsonl");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

// The split invariants every sampled split set must satisfy.
void check_splits(const data::Splits& s, const data::SplitSpec& spec, const std::vector<Segment>& manifest) {
  const std::vector<std::pair<const std::vector<Segment>*, std::size_t>> parts{
      {&s.train, spec.sizes.train}, {&s.validation, spec.sizes.validation}, {&s.test, spec.sizes.test}};
  std::set<std::string> ids;
  std::map<std::string, int> sentence_owner;
  std::map<std::string, std::size_t> manifest_pos;
  for (std::size_t i = 0; i < manifest.size(); ++i) manifest_pos[manifest[i].id] = i;

  for (std::size_t part = 0; part < parts.size(); ++part) {
    const auto& segs = *parts[part].first;
    ASSERT_EQ(segs.size(), parts[part].second);
    std::map<Label, std::size_t> per_class;
    std::map<Label, std::map<SourceClass, std::size_t>> per_source;
    std::size_t last_pos = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& seg = segs[i];
      ASSERT_TRUE(manifest_pos.count(seg.id));
      if (i > 0) ASSERT_GT(manifest_pos[seg.id], last_pos);  // manifest order
      last_pos = manifest_pos[seg.id];
      ASSERT_TRUE(ids.insert(seg.id).second) << "id in two splits: " << seg.id;
      if (seg.sentence_id) {
        auto [it, fresh] = sentence_owner.emplace(*seg.sentence_id, static_cast<int>(part));
        ASSERT_EQ(it->second, static_cast<int>(part)) << "sentence in two splits: " << *seg.sentence_id;
      }
      const Label gold = spec.task == Task::Binary ? *seg.label2 : *seg.label8;
      ++per_class[gold];
      if (spec.task == Task::Binary) ++per_source[gold][*seg.source_class];
    }
    const auto space = labels_for(spec.task);
    for (Label l : space) ASSERT_EQ(per_class[l], parts[part].second / space.size()) << label_code(l);
    for (const auto& [label, sources] : per_source) {
      std::size_t lo = SIZE_MAX, hi = 0;
      for (const auto& [source, n] : sources) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
      }
      // Every source with segments in the manifest participates.
      std::set<SourceClass> available;
      for (const auto& seg : manifest) {
        if (seg.label2 == label && seg.source_class) available.insert(*seg.source_class);
      }
      if (parts[part].second / space.size() >= available.size()) ASSERT_EQ(sources.size(), available.size());
      ASSERT_LE(hi - lo, 1u) << label_code(label);
    }
  }
}

}  // namespace

TEST(Manifest, RoundTrip) {
  const auto& m = fixture_manifest();
  ASSERT_EQ(m.size(), 240u);
  const std::string text = data::format_manifest(m);
  EXPECT_EQ(parse(text), m);
  EXPECT_EQ(data::format_manifest(parse(text)), text);
}

TEST(Manifest, ErrorsCarryLineNumbers) {
  EXPECT_NE(parse_error("{\"format\":\"other\"}\n").find("m.jsonl:1"), std::string::npos);
  const std::string err = parse_error(std::string(kHeader) +
                                      R"({"id":"a","corpus":"STT","audio_path":"x","ipa_transcription":"a","standard_german":"a"})"
                                      "\n"
                                      R"({"id":"a","corpus":"STT","audio_path":"x","ipa_transcription":"a","standard_german":"a"})"
                                      "\n");
  EXPECT_NE(err.find("m.jsonl:3"), std::string::npos) << err;
  EXPECT_NE(err.find("duplicate"), std::string::npos) << err;
  EXPECT_NE(parse_error(std::string(kHeader) + "{broken\n").find("m.jsonl:2"), std::string::npos);
  EXPECT_NE(parse_error(std::string(kHeader) +
                        R"({"id":"b","corpus":"SwissDial","audio_path":"x","ipa_transcription":"a","standard_german":"a","label8":"ZH"})"
                        "\n")
                .find("sentence_id"),
            std::string::npos);
  EXPECT_NE(parse_error(std::string(kHeader) +
                        R"({"id":"b","corpus":"STT","audio_path":"x","ipa_transcription":"a","standard_german":"a","label8":"XX"})"
                        "\n")
                .find("m.jsonl:2"),
            std::string::npos);
}

TEST(Manifest, MissingFileIsDataError) { EXPECT_THROW(data::load_manifest("/nonexistent/m.jsonl"), DataError); }

TEST(SttMapping, Table) {
  using data::map_stt_label;
  EXPECT_EQ(map_stt_label("Zürich", "Aargau"), Label::AG);
  EXPECT_EQ(map_stt_label("Bern", "Aargau"), Label::AG);
  EXPECT_EQ(map_stt_label("Innerschweiz", "Luzern"), Label::LU);
  EXPECT_EQ(map_stt_label("Innerschweiz", "Lucerne"), Label::LU);
  EXPECT_EQ(map_stt_label("Ostschweiz", "St. Gallen"), Label::SG);
  EXPECT_EQ(map_stt_label("Ostschweiz", "Sankt Gallen"), Label::SG);
  EXPECT_EQ(map_stt_label("Basel", "Basel-Stadt"), Label::BS);
  EXPECT_EQ(map_stt_label("Bern", "Bern"), Label::BE);
  EXPECT_EQ(map_stt_label("Graubünden", "Graubünden"), Label::GR);
  EXPECT_EQ(map_stt_label("Wallis", "Wallis"), Label::VS);
  EXPECT_EQ(map_stt_label("Valais", "Valais"), Label::VS);
  EXPECT_EQ(map_stt_label("Zürich", "Zürich"), Label::ZH);
  EXPECT_EQ(map_stt_label("Zurich", "Zurich"), Label::ZH);
  EXPECT_EQ(map_stt_label("Ostschweiz", "Thurgau"), std::nullopt);
  EXPECT_EQ(map_stt_label("Innerschweiz", "Uri"), std::nullopt);
  // Region names that are labels pass through whatever the canton.
  EXPECT_EQ(map_stt_label("Zürich", "Schaffhausen"), Label::ZH);
  EXPECT_EQ(map_stt_label("Nordwestschweiz", "Solothurn"), std::nullopt);
}

TEST(ToBinary, ExhaustiveSourceLabels) {
  using data::BinaryClass;
  const std::map<Label, BinaryClass> expected{
      {Label::AG, BinaryClass::High},     {Label::LU, BinaryClass::High},     {Label::ZH, BinaryClass::High},
      {Label::VS, BinaryClass::Highest},  {Label::BE, BinaryClass::Excluded}, {Label::BS, BinaryClass::Excluded},
      {Label::GR, BinaryClass::Excluded}, {Label::SG, BinaryClass::Excluded},
  };
  for (Label l : labels_for(Task::Eight)) EXPECT_EQ(data::to_binary(l), expected.at(l)) << label_code(l);
  EXPECT_EQ(data::to_binary(SourceClass::InnerschweizHighest), BinaryClass::Highest);
  EXPECT_EQ(data::to_binary(SourceClass::Valais), BinaryClass::Highest);
  EXPECT_EQ(data::to_binary(SourceClass::Aargau), BinaryClass::High);
  Segment bare;
  bare.id = "x";
  EXPECT_THROW(data::to_binary(bare), DataError);
  EXPECT_EQ(data::binary_class_name(BinaryClass::Excluded), "excluded");
}

TEST(Annotate, DerivedFields) {
  const auto& m = fixture_manifest();
  std::map<std::string, std::size_t> innerschweiz_highest, unmapped_stt;
  for (const auto& s : m) {
    if (s.corpus == Corpus::SwissDial) {
      ASSERT_TRUE(s.label8);
      EXPECT_EQ(s.label2.has_value(), data::to_binary(*s.label8) != data::BinaryClass::Excluded);
    } else if (s.source_class == SourceClass::InnerschweizHighest) {
      ++innerschweiz_highest[*s.canton];
      EXPECT_FALSE(s.label8);
      EXPECT_EQ(s.label2, Label::Highest);
    } else if (!s.label8) {
      ++unmapped_stt[*s.canton];
      EXPECT_FALSE(s.label2);
    }
  }
  std::size_t ih = 0;
  for (const auto& [canton, n] : innerschweiz_highest) ih += n;
  EXPECT_EQ(ih, 28u);
  EXPECT_EQ(unmapped_stt["Thurgau"], 4u);
}

TEST(Permutation, PortableAndDeterministic) {
  const auto p = data::seeded_permutation(10, 1);
  EXPECT_EQ(p, data::seeded_permutation(10, 1));
  std::vector<std::size_t> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_NE(p, data::seeded_permutation(10, 2));
  EXPECT_TRUE(data::seeded_permutation(0, 5).empty());
  // Independent oracle: Fisher-Yates over mt19937_64 with rejection sampling.
  std::mt19937_64 rng(1);
  std::vector<std::size_t> expected(10);
  for (std::size_t i = 0; i < 10; ++i) expected[i] = i;
  for (std::size_t i = 9; i > 0; --i) {
    const std::uint64_t bound = i + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(expected[i], expected[r % bound]);
  }
  EXPECT_EQ(p, expected);
}

TEST(Splits, InvariantsOverHundredSeeds) {
  const auto& m = fixture_manifest();
  for (Task task : {Task::Binary, Task::Eight}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      auto spec = dataset_config().spec(task);
      spec.seed = seed;
      const auto a = data::sample_splits(m, spec);
      check_splits(a, spec, m);
      if (HasFatalFailure()) FAIL() << task_name(task) << " seed " << seed;
      const auto b = data::sample_splits(m, spec);
      ASSERT_EQ(data::format_manifest(a.test), data::format_manifest(b.test));
      ASSERT_EQ(data::format_manifest(a.train), data::format_manifest(b.train));
      ASSERT_EQ(data::format_manifest(a.validation), data::format_manifest(b.validation));
    }
  }
}

TEST(Splits, SeedsDiffer) {
  auto spec = dataset_config().spec(Task::Binary);
  std::set<std::string> distinct;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    spec.seed = seed;
    distinct.insert(data::format_manifest(data::sample_splits(fixture_manifest(), spec).test));
  }
  EXPECT_GT(distinct.size(), 5u);
}

TEST(Splits, ShortfallNamesClassAndAmount) {
  auto spec = dataset_config().spec(Task::Binary);
  spec.sizes = {8, 8, 200};
  try {
    data::sample_splits(fixture_manifest(), spec);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("test split"), std::string::npos) << what;
    EXPECT_NE(what.find("short by"), std::string::npos) << what;
  }
}

TEST(Splits, ValaisShortfallIsExact) {
  // Valais has 24 sentences; asking for 25 Valais segments in one split fails by one.
  std::vector<Segment> vs_only;
  for (const auto& s : fixture_manifest()) {
    if (s.label2 == Label::Highest && s.source_class == SourceClass::Valais) vs_only.push_back(s);
    if (s.label2 == Label::High && vs_only.size() < 200) vs_only.push_back(s);
  }
  auto spec = dataset_config().spec(Task::Binary);
  spec.sizes = {0, 0, 50};
  spec.sizes.train = 2;
  spec.sizes.validation = 2;
  try {
    data::sample_splits(vs_only, spec);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("Valais"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("short by 1"), std::string::npos) << e.what();
  }
}

TEST(Splits, RejectsIndivisibleSizes) {
  auto spec = dataset_config().spec(Task::Eight);
  spec.sizes.test = 81;
  EXPECT_THROW(data::sample_splits(fixture_manifest(), spec), ConfigError);
}

TEST(DatasetConfig, ParseErrors) {
  EXPECT_THROW(data::DatasetConfig::parse("{}", "c.json"), ConfigError);
  EXPECT_THROW(data::DatasetConfig::parse("not json", "c.json"), ConfigError);
  const auto c = data::DatasetConfig::parse(
      R"({"innerschweiz_highest_cantons":["Uri"],"seed":3,"splits":{"binary":{"train":2,"validation":2,"test":4},"eight":{"train":8,"validation":8,"test":8}}})",
      "c.json");
  EXPECT_EQ(c.spec(Task::Binary).sizes.test, 4u);
  EXPECT_EQ(c.spec(Task::Eight).seed, 3u);
}
