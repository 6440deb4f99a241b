#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialectid/labels.hpp"
#include "dialectid/segment.hpp"

namespace dialectid::data {

// JSON-lines manifest: a header record, then one segment per line.
std::vector<Segment> load_manifest(const std::filesystem::path& path);
std::vector<Segment> parse_manifest(std::istream& in, std::string_view source_name);
std::string format_manifest(const std::vector<Segment>& segments);
void write_manifest(const std::filesystem::path& path, const std::vector<Segment>& segments);

// STT region plus canton to a SwissDial code. Accepts German and English
// spellings ("Luzern"/"Lucerne", "Zürich"/"Zurich", ...).
std::optional<Label> map_stt_label(std::string_view stt_region, std::string_view canton);

enum class BinaryClass { High, Highest, Excluded };
std::string_view binary_class_name(BinaryClass c);

BinaryClass to_binary(Label label8);
BinaryClass to_binary(SourceClass source);
// Uses label8 when present, else source_class. Throws DataError when neither is set.
BinaryClass to_binary(const Segment& segment);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 80;
};

struct SplitSpec {
  Task task = Task::Binary;
  SplitSizes sizes;
  std::uint64_t seed = 0;
};

struct DatasetConfig {
  // STT Innerschweiz cantons lying wholly inside the Highest Alemannic area.
  std::vector<std::string> innerschweiz_highest_cantons;
  SplitSizes binary;
  SplitSizes eight;
  std::uint64_t seed = 0;

  static DatasetConfig load(const std::filesystem::path& path);
  static DatasetConfig parse(std::string_view json_text, std::string_view source_name);
  SplitSpec spec(Task task) const;
};

// Fills the derived fields: label8 for mappable STT segments, source_class,
// and label2 where the binary task admits the segment.
std::vector<Segment> annotate(std::vector<Segment> segments, const DatasetConfig& config);

struct Splits {
  std::vector<Segment> train;
  std::vector<Segment> validation;
  std::vector<Segment> test;
};

// Portable seeded Fisher-Yates permutation of 0..n-1 (mt19937_64 with
// rejection sampling, independent of the standard library's distributions).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// Class-balanced splits; for the binary task the source classes inside each
// class are balanced to within one. A SwissDial sentence_id never appears in
// two splits. Deterministic for a given seed. Expects annotated segments.
// Throws DataError naming the class that runs short and by how much.
Splits sample_splits(const std::vector<Segment>& manifest, const SplitSpec& spec);

}  // namespace dialectid::data
