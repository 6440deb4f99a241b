#include "dialectid/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "dialectid/error.hpp"
#include "dialectid/json_io.hpp"
#include "dialectid/utf8.hpp"

namespace dialectid::data {

namespace {

constexpr std::string_view kManifestFormat = "dialectid-manifest";
constexpr int kManifestVersion = 1;

std::string normalize_name(std::string_view name) {
  std::string lowered = utf8::to_lower_german(name);
  const auto first = lowered.find_first_not_of(" \t");
  const auto last = lowered.find_last_not_of(" \t");
  if (first == std::string::npos) return {};
  lowered = lowered.substr(first, last - first + 1);
  for (std::string_view prefix : {"sankt ", "st. ", "st "}) {
    if (lowered.rfind(prefix, 0) == 0) return "st. " + lowered.substr(prefix.size());
  }
  return lowered;
}

// Alias -> canonical spelling for the cantons and STT regions the mapping needs.
const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> table{
      {"aargau", "Aargau"},           {"ag", "Aargau"},
      {"luzern", "Luzern"},           {"lucerne", "Luzern"},
      {"lu", "Luzern"},               {"st. gallen", "St. Gallen"},
      {"sg", "St. Gallen"},           {"zürich", "Zürich"},
      {"zurich", "Zürich"},           {"zuerich", "Zürich"},
      {"bern", "Bern"},               {"berne", "Bern"},
      {"basel", "Basel"},             {"graubünden", "Graubünden"},
      {"grisons", "Graubünden"},      {"wallis", "Wallis"},
      {"valais", "Wallis"},           {"innerschweiz", "Innerschweiz"},
      {"central switzerland", "Innerschweiz"}, {"zentralschweiz", "Innerschweiz"},
      {"ostschweiz", "Ostschweiz"},   {"eastern switzerland", "Ostschweiz"},
  };
  return table;
}

std::string canonical(std::string_view name) {
  const auto key = normalize_name(name);
  const auto it = aliases().find(key);
  return it == aliases().end() ? key : it->second;
}

std::string bucket_name(Task task, Label cls, std::optional<SourceClass> source) {
  if (task == Task::Binary && source) {
    std::string name(source_class_name(*source));
    switch (*source) {
      case SourceClass::Aargau:
        return name + " (AG)";
      case SourceClass::Lucerne:
        return name + " (LU)";
      case SourceClass::Zurich:
        return name + " (ZH)";
      case SourceClass::Valais:
        return name + " (VS)";
      case SourceClass::InnerschweizHighest:
        return name;
    }
  }
  return std::string(label_code(cls)) + " (" + std::string(label_display_name(cls)) + ")";
}

std::size_t read_size(const Json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    throw ConfigError(std::string(where) + ": '" + std::string(key) + "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

SplitSizes read_sizes(const Json& j, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  return {read_size(j, "train", where), read_size(j, "validation", where), read_size(j, "test", where)};
}

// Uniform integer in [0, bound) by rejection, so results do not depend on the
// standard library's distribution implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[uniform_below(rng, i)]);
  }
}

struct Bucket {
  Label cls;
  std::optional<SourceClass> source;
  std::vector<std::size_t> items;  // manifest indices, shuffled
};

}  // namespace

std::vector<Segment> parse_manifest(std::istream& in, std::string_view source_name) {
  std::vector<Segment> segments;
  std::map<std::string, std::size_t> ids;
  bool header_seen = false;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    if (!header_seen) {
      if (!j.is_object() || j.value("format", "") != kManifestFormat) {
        throw DataError(where + ": missing manifest header {\"format\": \"dialectid-manifest\", ...}");
      }
      if (j.value("version", 0) != kManifestVersion) {
        throw DataError(where + ": unsupported manifest version");
      }
      header_seen = true;
      continue;
    }
    Segment s = segment_from_json(j, where);
    if (const auto it = ids.find(s.id); it != ids.end()) {
      throw DataError(where + ": duplicate segment id '" + s.id + "' (first on line " +
                      std::to_string(it->second) + ")");
    }
    ids.emplace(s.id, line_no);
    segments.push_back(std::move(s));
  }
  if (!header_seen) throw DataError(std::string(source_name) + ": empty manifest (no header record)");
  return segments;
}

std::vector<Segment> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  return parse_manifest(in, path.string());
}

std::string format_manifest(const std::vector<Segment>& segments) {
  Json header;
  header["format"] = kManifestFormat;
  header["version"] = kManifestVersion;
  std::string out = header.dump() + "\n";
  for (const auto& s : segments) out += segment_to_json(s).dump() + "\n";
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<Segment>& segments) {
  write_file_atomic(path, format_manifest(segments));
}

std::optional<Label> map_stt_label(std::string_view stt_region, std::string_view canton) {
  const std::string region = canonical(stt_region);
  const std::string c = canonical(canton);
  if ((region == "Zürich" || region == "Bern") && c == "Aargau") return Label::AG;
  if (region == "Innerschweiz" && c == "Luzern") return Label::LU;
  if (region == "Ostschweiz" && c == "St. Gallen") return Label::SG;
  if (region == "Basel") return Label::BS;
  if (region == "Bern") return Label::BE;
  if (region == "Graubünden") return Label::GR;
  if (region == "Wallis") return Label::VS;
  if (region == "Zürich") return Label::ZH;
  return std::nullopt;
}

std::string_view binary_class_name(BinaryClass c) {
  switch (c) {
    case BinaryClass::High:
      return "High";
    case BinaryClass::Highest:
      return "Highest";
    case BinaryClass::Excluded:
      break;
  }
  return "excluded";
}

BinaryClass to_binary(Label label8) {
  switch (label8) {
    case Label::AG:
    case Label::LU:
    case Label::ZH:
      return BinaryClass::High;
    case Label::VS:
      return BinaryClass::Highest;
    case Label::BE:
    case Label::BS:
    case Label::GR:
    case Label::SG:
      return BinaryClass::Excluded;
    case Label::High:
    case Label::Highest:
      break;
  }
  throw std::invalid_argument("to_binary expects an eight-class label");
}

BinaryClass to_binary(SourceClass source) {
  switch (source) {
    case SourceClass::Aargau:
    case SourceClass::Lucerne:
    case SourceClass::Zurich:
      return BinaryClass::High;
    case SourceClass::Valais:
    case SourceClass::InnerschweizHighest:
      break;
  }
  return BinaryClass::Highest;
}

BinaryClass to_binary(const Segment& segment) {
  if (segment.label8) return to_binary(*segment.label8);
  if (segment.source_class) return to_binary(*segment.source_class);
  throw DataError("segment " + segment.id + " has neither label8 nor source_class");
}

DatasetConfig DatasetConfig::parse(std::string_view json_text, std::string_view source_name) {
  const std::string where(source_name);
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw ConfigError(where + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  DatasetConfig config;
  const auto cantons = j.find("innerschweiz_highest_cantons");
  if (cantons == j.end() || !cantons->is_array()) {
    throw ConfigError(where + ": 'innerschweiz_highest_cantons' must be a list of canton names");
  }
  for (const auto& c : *cantons) {
    if (!c.is_string()) throw ConfigError(where + ": canton names must be strings");
    config.innerschweiz_highest_cantons.push_back(c.get<std::string>());
  }
  const auto splits = j.find("splits");
  if (splits == j.end() || !splits->is_object()) throw ConfigError(where + ": missing 'splits' object");
  for (const char* task : {"binary", "eight"}) {
    if (!splits->contains(task)) throw ConfigError(where + ": missing splits." + task);
  }
  config.binary = read_sizes((*splits)["binary"], where + " splits.binary");
  config.eight = read_sizes((*splits)["eight"], where + " splits.eight");
  const auto seed = j.find("seed");
  if (seed == j.end() || !seed->is_number_unsigned()) {
    throw ConfigError(where + ": 'seed' must be a non-negative integer");
  }
  config.seed = seed->get<std::uint64_t>();
  return config;
}

DatasetConfig DatasetConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

SplitSpec DatasetConfig::spec(Task task) const {
  return {task, task == Task::Binary ? binary : eight, seed};
}

std::vector<Segment> annotate(std::vector<Segment> segments, const DatasetConfig& config) {
  std::set<std::string> highest_cantons;
  for (const auto& c : config.innerschweiz_highest_cantons) highest_cantons.insert(canonical(c));

  for (auto& s : segments) {
    if (s.corpus == Corpus::STT && !s.label8 && s.stt_region && s.canton) {
      s.label8 = map_stt_label(*s.stt_region, *s.canton);
    }
    s.source_class.reset();
    if (s.label8) {
      switch (*s.label8) {
        case Label::AG:
          s.source_class = SourceClass::Aargau;
          break;
        case Label::LU:
          s.source_class = SourceClass::Lucerne;
          break;
        case Label::ZH:
          s.source_class = SourceClass::Zurich;
          break;
        case Label::VS:
          s.source_class = SourceClass::Valais;
          break;
        default:
          break;
      }
    } else if (s.corpus == Corpus::STT && s.stt_region && s.canton &&
               canonical(*s.stt_region) == "Innerschweiz" && highest_cantons.count(canonical(*s.canton))) {
      s.source_class = SourceClass::InnerschweizHighest;
    }
    s.label2.reset();
    if (s.label8 || s.source_class) {
      const auto b = to_binary(s);
      if (b == BinaryClass::High) s.label2 = Label::High;
      if (b == BinaryClass::Highest) s.label2 = Label::Highest;
    }
  }
  return segments;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  shuffle(order, rng);
  return order;
}

Splits sample_splits(const std::vector<Segment>& manifest, const SplitSpec& spec) {
  const auto classes = labels_for(spec.task);
  for (const std::size_t size : {spec.sizes.test, spec.sizes.validation, spec.sizes.train}) {
    if (size == 0) throw ConfigError("split sizes must be positive");
    if (size % classes.size() != 0) {
      throw ConfigError("split size " + std::to_string(size) + " is not divisible by the " +
                        std::to_string(classes.size()) + " classes of the " + std::string(task_name(spec.task)) +
                        " task");
    }
  }

  // Buckets in fixed order: classes in label order, sources in enum order.
  std::vector<Bucket> buckets;
  for (const Label cls : classes) {
    if (spec.task == Task::Binary) {
      for (int s = 0; s <= static_cast<int>(SourceClass::InnerschweizHighest); ++s) {
        const auto source = static_cast<SourceClass>(s);
        const bool high_source = to_binary(source) == BinaryClass::High;
        if (high_source == (cls == Label::High)) buckets.push_back({cls, source, {}});
      }
    } else {
      buckets.push_back({cls, std::nullopt, {}});
    }
  }
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const Segment& s = manifest[i];
    for (auto& b : buckets) {
      const bool member = spec.task == Task::Binary ? (s.label2 == b.cls && s.source_class == b.source)
                                                    : s.label8 == b.cls;
      if (member) b.items.push_back(i);
    }
  }
  std::mt19937_64 rng(spec.seed);
  for (auto& b : buckets) shuffle(b.items, rng);

  std::vector<bool> used(manifest.size(), false);
  std::map<std::string, int> sentence_owner;  // sentence_id -> split number

  const auto draw_split = [&](std::size_t size, int split_no, std::string_view split_name) {
    std::vector<std::size_t> chosen;
    const std::size_t per_class = size / classes.size();
    struct Quota {
      Bucket* bucket;
      std::size_t remaining;
    };
    std::vector<Quota> quotas;
    for (const Label cls : classes) {
      std::vector<Bucket*> participating;
      for (auto& b : buckets) {
        if (b.cls == cls && !b.items.empty()) participating.push_back(&b);
      }
      if (participating.empty()) {
        throw DataError("insufficient segments for class " + bucket_name(Task::Eight, cls, std::nullopt) +
                        " in the " + std::string(split_name) + " split: needed " + std::to_string(per_class) +
                        ", found 0 (short by " + std::to_string(per_class) + ")");
      }
      const std::size_t k = participating.size();
      for (std::size_t i = 0; i < k; ++i) {
        quotas.push_back({participating[i], per_class / k + (i < per_class % k ? 1 : 0)});
      }
    }

    const auto pick = [&](Bucket& b) -> std::optional<std::size_t> {
      std::optional<std::size_t> best;
      int best_rank = 3;
      for (const std::size_t idx : b.items) {
        if (used[idx]) continue;
        const auto& sentence = manifest[idx].sentence_id;
        int rank;
        if (!sentence) {
          rank = 1;
        } else if (const auto it = sentence_owner.find(*sentence); it == sentence_owner.end()) {
          rank = 2;
        } else if (it->second == split_no) {
          rank = 0;
        } else {
          continue;
        }
        if (rank < best_rank) {
          best_rank = rank;
          best = idx;
          if (rank == 0) break;
        }
      }
      return best;
    };

    for (bool progress = true; progress;) {
      progress = false;
      for (auto& q : quotas) {
        if (q.remaining == 0) continue;
        const auto idx = pick(*q.bucket);
        if (!idx) {
          throw DataError("insufficient segments for " + bucket_name(spec.task, q.bucket->cls, q.bucket->source) +
                          " in the " + std::string(split_name) + " split: short by " +
                          std::to_string(q.remaining));
        }
        used[*idx] = true;
        if (const auto& sentence = manifest[*idx].sentence_id) sentence_owner.emplace(*sentence, split_no);
        chosen.push_back(*idx);
        --q.remaining;
        progress = true;
      }
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<Segment> out;
    out.reserve(chosen.size());
    for (const std::size_t idx : chosen) out.push_back(manifest[idx]);
    return out;
  };

  Splits splits;
  splits.test = draw_split(spec.sizes.test, 0, "test");
  splits.validation = draw_split(spec.sizes.validation, 1, "validation");
  splits.train = draw_split(spec.sizes.train, 2, "train");
  return splits;
}

}  // namespace dialectid::data
