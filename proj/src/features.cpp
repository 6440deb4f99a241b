#include "dialectid/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "dialectid/error.hpp"
#include "dialectid/utf8.hpp"

namespace dialectid::features {

namespace {

using nlohmann::json;

template <typename Enum>
bool contains(const std::vector<Enum>& allowed, Enum value) {
  return allowed.empty() || std::find(allowed.begin(), allowed.end(), value) != allowed.end();
}

template <typename Enum, typename NameFn>
Enum enum_from_name(const std::string& name, int count, NameFn name_of, const std::string& where) {
  for (int i = 0; i < count; ++i) {
    if (name_of(static_cast<Enum>(i)) == name) return static_cast<Enum>(i);
  }
  throw DataError(where + ": unknown value '" + name + "'");
}

std::vector<std::string> string_list(const json& value, const std::string& where) {
  std::vector<std::string> out;
  if (value.is_string()) {
    out.push_back(value.get<std::string>());
  } else if (value.is_array()) {
    for (const auto& item : value) {
      if (!item.is_string()) throw DataError(where + ": expected strings");
      out.push_back(item.get<std::string>());
    }
  } else {
    throw DataError(where + ": expected a string or a list of strings");
  }
  return out;
}

template <typename Enum, typename NameFn>
std::vector<Enum> enum_list(const json& value, int count, NameFn name_of, const std::string& where) {
  std::vector<Enum> out;
  for (const auto& name : string_list(value, where)) {
    out.push_back(enum_from_name<Enum>(name, count, name_of, where));
  }
  return out;
}

bool boolean(const json& value, const std::string& where) {
  if (!value.is_boolean()) throw DataError(where + ": expected true or false");
  return value.get<bool>();
}

PhonePredicate parse_phone_predicate(const json& obj, bool ref_side, const std::string& where,
                                     const ipa::IpaChart& chart, RefPattern* ref, DialectPattern* dia) {
  if (!obj.is_object()) throw DataError(where + ": malformed predicate (expected an object)");
  PhonePredicate p;
  for (const auto& [key, value] : obj.items()) {
    const std::string at = where + "." + key;
    if (key == "symbols") {
      p.symbols = string_list(value, at);
      for (const auto& symbol : p.symbols) {
        const auto seq = ipa::tokenize(symbol, chart);
        if (seq.size() != 1 || !seq.breaks.empty() || seq.phones[0].category() == ipa::Category::Unknown) {
          throw DataError(at + ": unknown symbol '" + symbol + "'");
        }
      }
    } else if (key == "category") {
      const auto name = value.is_string() ? value.get<std::string>() : std::string();
      if (name == "vowel") {
        p.category = ipa::Category::Vowel;
      } else if (name == "consonant") {
        p.category = ipa::Category::Consonant;
      } else {
        throw DataError(at + ": category must be vowel or consonant");
      }
    } else if (key == "height") {
      p.heights = enum_list<ipa::Height>(value, 7, ipa::height_name, at);
    } else if (key == "backness") {
      p.backness = enum_list<ipa::Backness>(value, 3, ipa::backness_name, at);
    } else if (key == "rounded") {
      p.rounded = boolean(value, at);
    } else if (key == "place") {
      p.places = enum_list<ipa::Place>(value, 11, ipa::place_name, at);
    } else if (key == "manner") {
      p.manners = enum_list<ipa::Manner>(value, 8, ipa::manner_name, at);
    } else if (key == "voiced") {
      p.voiced = boolean(value, at);
    } else if (key == "long") {
      p.is_long = boolean(value, at);
    } else if (ref_side && key == "ortho") {
      if (!value.is_string() || value.get<std::string>().empty()) {
        throw DataError(at + ": expected a non-empty string");
      }
      ref->ortho = utf8::to_lower_german(value.get<std::string>());
    } else if (ref_side && key == "position") {
      const auto name = value.is_string() ? value.get<std::string>() : std::string();
      if (name == "any") {
        ref->position = WordPosition::Any;
      } else if (name == "initial") {
        ref->position = WordPosition::Initial;
      } else if (name == "final") {
        ref->position = WordPosition::Final;
      } else {
        throw DataError(at + ": position must be any, initial or final");
      }
    } else if (!ref_side && key == "gap") {
      dia->gap = boolean(value, at);
    } else {
      throw DataError(where + ": malformed predicate (unknown key '" + key + "')");
    }
  }
  const bool vowel_keys = !p.heights.empty() || !p.backness.empty() || p.rounded.has_value();
  const bool consonant_keys = !p.places.empty() || !p.manners.empty() || p.voiced.has_value();
  if (vowel_keys && consonant_keys) {
    throw DataError(where + ": malformed predicate (mixes vowel and consonant features)");
  }
  if (vowel_keys && p.category == ipa::Category::Consonant) {
    throw DataError(where + ": malformed predicate (vowel features on a consonant)");
  }
  if (consonant_keys && p.category == ipa::Category::Vowel) {
    throw DataError(where + ": malformed predicate (consonant features on a vowel)");
  }
  return p;
}

FeatureRule parse_rule(const json& obj, const std::string& where_line, const ipa::IpaChart& chart) {
  if (!obj.is_object()) throw DataError(where_line + ": rule must be a JSON object");
  FeatureRule rule;
  if (!obj.contains("id") || !obj["id"].is_string() || obj["id"].get<std::string>().empty()) {
    throw DataError(where_line + ": rule without an id");
  }
  rule.id = obj["id"].get<std::string>();
  const std::string where = "rule '" + rule.id + "' (" + where_line + ")";

  static const std::set<std::string> kKeys{"id",          "name",          "description",
                                           "ref_pattern", "dialect_pattern", "weights",
                                           "scope"};
  for (const auto& [key, value] : obj.items()) {
    if (!kKeys.count(key)) throw DataError(where + ": unknown field '" + key + "'");
  }
  for (const char* key : {"name", "ref_pattern", "dialect_pattern", "weights", "scope"}) {
    if (!obj.contains(key)) throw DataError(where + ": missing field '" + key + "'");
  }
  if (!obj["name"].is_string()) throw DataError(where + ": name must be a string");
  rule.name = obj["name"].get<std::string>();
  if (obj.contains("description")) {
    if (!obj["description"].is_string()) throw DataError(where + ": description must be a string");
    rule.description = obj["description"].get<std::string>();
  }

  const auto scope = obj["scope"].is_string() ? parse_task(obj["scope"].get<std::string>()) : std::nullopt;
  if (!scope) throw DataError(where + ": scope must be binary or eight");
  rule.scope = *scope;

  rule.ref_pattern.phone = parse_phone_predicate(obj["ref_pattern"], true, where + " ref_pattern", chart,
                                                 &rule.ref_pattern, nullptr);
  rule.dialect_pattern.phone = parse_phone_predicate(obj["dialect_pattern"], false,
                                                     where + " dialect_pattern", chart, nullptr,
                                                     &rule.dialect_pattern);

  const auto& weights = obj["weights"];
  if (!weights.is_object() || weights.empty()) throw DataError(where + ": weights must be a non-empty object");
  bool any_nonzero = false;
  for (const auto& [name, value] : weights.items()) {
    const auto label = parse_label_code(name);
    if (!label || !in_label_space(*label, rule.scope)) {
      throw DataError(where + ": unknown class name '" + name + "' for scope " +
                      std::string(task_name(rule.scope)));
    }
    if (!value.is_number() || !std::isfinite(value.get<double>())) {
      throw DataError(where + ": weight for " + name + " must be a finite number");
    }
    const double w = value.get<double>();
    if (w != 0.0) any_nonzero = true;
    rule.class_weights.emplace_back(*label, w);
  }
  if (!any_nonzero) throw DataError(where + ": all weights are zero");
  std::sort(rule.class_weights.begin(), rule.class_weights.end(),
            [&](const auto& a, const auto& b) {
              return label_index(a.first, rule.scope) < label_index(b.first, rule.scope);
            });
  return rule;
}

}  // namespace

bool PhonePredicate::matches(const ipa::Phone& phone) const {
  if (!symbols.empty() && std::find(symbols.begin(), symbols.end(), phone.symbol()) == symbols.end()) {
    return false;
  }
  if (category && phone.category() != *category) return false;
  if (is_long && phone.is_long() != *is_long) return false;

  const bool vowel_constraints = !heights.empty() || !backness.empty() || rounded.has_value();
  if (vowel_constraints) {
    const auto* v = phone.vowel();
    if (!v) return false;
    if (!contains(heights, v->height) || !contains(backness, v->backness)) return false;
    if (rounded && v->rounded != *rounded) return false;
  }
  const bool consonant_constraints = !places.empty() || !manners.empty() || voiced.has_value();
  if (consonant_constraints) {
    const auto* c = phone.consonant();
    if (!c) return false;
    if (!contains(places, c->place) || !contains(manners, c->manner)) return false;
    if (voiced && c->voiced != *voiced) return false;
  }
  return true;
}

double FeatureRule::weight(Label label) const {
  for (const auto& [l, w] : class_weights) {
    if (l == label) return w;
  }
  return 0.0;
}

RuleSet RuleSet::load(const std::filesystem::path& path, const ipa::IpaChart& chart) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rule file " + path.string());
  return parse(in, path.string(), chart);
}

RuleSet RuleSet::parse(std::istream& in, std::string_view source_name, const ipa::IpaChart& chart) {
  RuleSet set;
  std::map<std::string, std::size_t> seen;  // id -> line
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    FeatureRule rule = parse_rule(obj, where, chart);
    if (const auto it = seen.find(rule.id); it != seen.end()) {
      throw DataError("duplicate rule id '" + rule.id + "' (lines " + std::to_string(it->second) + " and " +
                      std::to_string(line_no) + " of " + std::string(source_name) + ")");
    }
    seen.emplace(rule.id, line_no);
    set.rules_.push_back(std::move(rule));
  }
  return set;
}

RuleSet RuleSet::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be positive");
  RuleSet out = *this;
  for (auto& rule : out.rules_) {
    for (auto& entry : rule.class_weights) entry.second *= factor;
  }
  return out;
}

std::vector<FeatureHit> detect(const align::Alignment& alignment, const RuleSet& rules, Task task) {
  const auto& units = alignment.units;

  // Position of each reference phone inside its word.
  std::vector<bool> word_initial(units.size(), false);
  std::vector<bool> word_final(units.size(), false);
  std::vector<std::string> lowered_words;
  lowered_words.reserve(alignment.words.size());
  for (const auto& word : alignment.words) lowered_words.push_back(utf8::to_lower_german(word));
  {
    std::optional<std::size_t> last_ref;
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (!units[i].ref_phone) continue;
      if (!last_ref || units[*last_ref].ref_word_index != units[i].ref_word_index) {
        word_initial[i] = true;
        if (last_ref) word_final[*last_ref] = true;
      }
      last_ref = i;
    }
    if (last_ref) word_final[*last_ref] = true;
  }

  struct Ordered {
    FeatureHit hit;
    std::size_t rule_order;
  };
  std::vector<Ordered> found;

  const auto rule_span = rules.rules();
  for (std::size_t r = 0; r < rule_span.size(); ++r) {
    const FeatureRule& rule = rule_span[r];
    if (rule.scope != task) continue;
    const auto& ref = rule.ref_pattern;
    const auto& dia = rule.dialect_pattern;

    for (std::size_t i = 0; i < units.size(); ++i) {
      const auto& unit = units[i];
      if (!unit.ref_phone || !ref.phone.matches(*unit.ref_phone)) continue;
      if (ref.position == WordPosition::Initial && !word_initial[i]) continue;
      if (ref.position == WordPosition::Final && !word_final[i]) continue;
      const std::size_t word = unit.ref_word_index;
      if (ref.ortho && (word >= lowered_words.size() ||
                        lowered_words[word].find(*ref.ortho) == std::string::npos)) {
        continue;
      }

      std::optional<std::size_t> partner;
      if (dia.gap) {
        if (unit.op == align::Op::Delete) partner = i;
      } else {
        for (const long offset : {0L, -1L, 1L}) {
          const long j = static_cast<long>(i) + offset;
          if (j < 0 || j >= static_cast<long>(units.size())) continue;
          const auto& candidate = units[static_cast<std::size_t>(j)];
          if (candidate.ref_word_index != word || !candidate.dialect_phone) continue;
          if (dia.phone.matches(*candidate.dialect_phone)) {
            partner = static_cast<std::size_t>(j);
            break;
          }
        }
      }
      if (!partner) continue;

      FeatureHit hit;
      hit.rule_id = rule.id;
      hit.first_unit = std::min(i, *partner);
      hit.last_unit = std::max(i, *partner);
      hit.ref_word_index = word;
      hit.ref_word = word < alignment.words.size() ? alignment.words[word] : std::string();
      for (std::size_t k = hit.first_unit; k <= hit.last_unit; ++k) {
        if (units[k].dialect_phone) hit.dialect_phones.push_back(units[k].dialect_phone->symbol());
      }
      hit.class_weights = rule.class_weights;
      found.push_back({std::move(hit), r});
    }
  }

  std::stable_sort(found.begin(), found.end(), [](const Ordered& a, const Ordered& b) {
    if (a.hit.first_unit != b.hit.first_unit) return a.hit.first_unit < b.hit.first_unit;
    if (a.hit.last_unit != b.hit.last_unit) return a.hit.last_unit < b.hit.last_unit;
    return a.rule_order < b.rule_order;
  });
  std::vector<FeatureHit> hits;
  hits.reserve(found.size());
  for (auto& entry : found) hits.push_back(std::move(entry.hit));
  return hits;
}

ClassScores score(std::span<const FeatureHit> hits, Task task) {
  const auto space = labels_for(task);
  std::vector<double> sums(space.size(), 0.0);
  for (const auto& hit : hits) {
    for (const auto& [label, weight] : hit.class_weights) {
      if (in_label_space(label, task)) sums[label_index(label, task)] += weight;
    }
  }
  const double peak = *std::max_element(sums.begin(), sums.end());
  double total = 0.0;
  for (double& s : sums) {
    s = std::exp(s - peak);
    total += s;
  }
  for (double& s : sums) s /= total;
  return ClassScores(task, std::move(sums));
}

Analysis analyze(std::string_view ipa_text, std::string_view standard_german, const RuleSet& rules,
                 Task task, const Resources& resources) {
  auto alignment = resources.align_texts(ipa_text, standard_german);
  auto hits = detect(alignment, rules, task);
  auto scores = score(hits, task);
  return {std::move(alignment), std::move(hits), std::move(scores)};
}

Prediction classify_rules(const Segment& segment, const RuleSet& rules, Task task,
                          const Resources& resources) {
  if (segment.ipa_transcription.empty() || segment.standard_german.empty()) {
    throw DataError("segment " + segment.id + " lacks a transcription");
  }
  auto analysis = analyze(segment.ipa_transcription, segment.standard_german, rules, task, resources);
  const auto best = analysis.scores.argmax();
  Prediction p;
  p.segment_id = segment.id;
  p.task = task;
  p.source = Source::Rules;
  p.label = best.label;
  p.tie = best.tie;
  p.scores = std::move(analysis.scores);
  return p;
}

}  // namespace dialectid::features
