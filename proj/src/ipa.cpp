#include "dialectid/ipa.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dialectid/error.hpp"
#include "dialectid/utf8.hpp"

namespace dialectid::ipa {

namespace {

constexpr std::string_view kLengthMark = "ː";

constexpr std::array<std::string_view, 7> kHeights{"close", "near-close", "close-mid", "mid",
                                                   "open-mid", "near-open", "open"};
constexpr std::array<std::string_view, 3> kBackness{"front", "central", "back"};
constexpr std::array<std::string_view, 11> kPlaces{
    "bilabial",  "labiodental", "dental", "alveolar",   "postalveolar", "retroflex",
    "palatal",   "velar",       "uvular", "pharyngeal", "glottal"};
constexpr std::array<std::string_view, 8> kManners{"plosive",     "nasal",
                                                   "trill",       "tap",
                                                   "fricative",   "lateral-fricative",
                                                   "approximant", "lateral-approximant"};

template <typename Enum, std::size_t N>
bool parse_enum(std::string_view text, const std::array<std::string_view, N>& names, Enum& out) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) {
      out = static_cast<Enum>(i);
      return true;
    }
  }
  return false;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) fields.push_back(field);
  return fields;
}

int steps(auto a, auto b) { return std::abs(static_cast<int>(a) - static_cast<int>(b)); }

}  // namespace

Phone::Phone(std::string symbol, FeatureBundle features, bool is_long)
    : symbol_(std::move(symbol)), features_(features), long_(is_long) {}

Category Phone::category() const {
  if (vowel()) return Category::Vowel;
  if (consonant()) return Category::Consonant;
  return Category::Unknown;
}

std::string PhoneSequence::reconstruct() const {
  std::string out;
  auto next_break = breaks.begin();
  for (std::size_t i = 0; i <= phones.size(); ++i) {
    while (next_break != breaks.end() && next_break->before == i) {
      out += next_break->text;
      ++next_break;
    }
    if (i < phones.size()) out += phones[i].symbol();
  }
  return out;
}

std::string PhoneSequence::joined(std::string_view sep) const {
  std::string out;
  for (std::size_t i = 0; i < phones.size(); ++i) {
    if (i) out += sep;
    out += phones[i].symbol();
  }
  return out;
}

std::string_view category_name(Category c) {
  switch (c) {
    case Category::Vowel:
      return "vowel";
    case Category::Consonant:
      return "consonant";
    case Category::Unknown:
      break;
  }
  return "unknown";
}
std::string_view height_name(Height h) { return kHeights[static_cast<std::size_t>(h)]; }
std::string_view backness_name(Backness b) { return kBackness[static_cast<std::size_t>(b)]; }
std::string_view place_name(Place p) { return kPlaces[static_cast<std::size_t>(p)]; }
std::string_view manner_name(Manner m) { return kManners[static_cast<std::size_t>(m)]; }

IpaChart IpaChart::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open IPA chart " + path.string());
  return parse(in, path.string());
}

IpaChart IpaChart::parse(std::istream& in, std::string_view source_name) {
  IpaChart chart;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) {
    throw ConfigError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 5) fail("expected 5 tab-separated fields");
    const std::string& symbol = fields[0];
    if (symbol.empty() || utf8::decode(symbol, 0).length != symbol.size()) {
      fail("symbol must be a single code point: '" + symbol + "'");
    }
    FeatureBundle bundle;
    if (fields[1] == "vowel") {
      VowelFeatures v{};
      if (!parse_enum(fields[2], kHeights, v.height)) fail("bad height '" + fields[2] + "'");
      if (!parse_enum(fields[3], kBackness, v.backness)) fail("bad backness '" + fields[3] + "'");
      if (fields[4] != "rounded" && fields[4] != "unrounded") fail("bad rounding '" + fields[4] + "'");
      v.rounded = fields[4] == "rounded";
      bundle = v;
    } else if (fields[1] == "consonant") {
      ConsonantFeatures c{};
      if (!parse_enum(fields[2], kPlaces, c.place)) fail("bad place '" + fields[2] + "'");
      if (!parse_enum(fields[3], kManners, c.manner)) fail("bad manner '" + fields[3] + "'");
      if (fields[4] != "voiced" && fields[4] != "voiceless") fail("bad voicing '" + fields[4] + "'");
      c.voiced = fields[4] == "voiced";
      bundle = c;
    } else {
      fail("bad category '" + fields[1] + "'");
    }
    if (!chart.entries_.emplace(symbol, bundle).second) fail("duplicate symbol '" + symbol + "'");
  }
  return chart;
}

const FeatureBundle* IpaChart::find(std::string_view base_symbol) const {
  const auto it = entries_.find(base_symbol);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> IpaChart::symbols() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [symbol, bundle] : entries_) out.push_back(symbol);
  return out;
}

DistanceWeights DistanceWeights::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open distance weights " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

DistanceWeights DistanceWeights::parse(std::string_view json_text, std::string_view source_name) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(source_name) + ": " + e.what());
  }
  const auto get = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw ConfigError(std::string(source_name) + ": missing numeric field '" + key + "'");
    }
    const double value = j[key].get<double>();
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ConfigError(std::string(source_name) + ": field '" + key + "' must be positive");
    }
    return value;
  };
  DistanceWeights w{};
  w.height_step = get("height_step");
  w.backness_step = get("backness_step");
  w.rounding = get("rounding");
  w.place_step = get("place_step");
  w.manner_step = get("manner_step");
  w.voicing = get("voicing");
  w.length = get("length");
  w.distinct_floor = get("distinct_floor");
  w.unknown_penalty = get("unknown_penalty");
  w.cross_category = get("cross_category");
  return w;
}

Phone features_of(std::string_view symbol, const IpaChart& chart) {
  const bool is_long = symbol.find(kLengthMark) != std::string_view::npos;
  if (symbol.empty()) return Phone(std::string(symbol), std::monostate{}, is_long);
  const auto first = utf8::decode(symbol, 0);
  const FeatureBundle* bundle = chart.find(symbol.substr(0, first.length));
  return Phone(std::string(symbol), bundle ? *bundle : FeatureBundle{}, is_long);
}

PhoneSequence tokenize(std::string_view ipa_text, const IpaChart& chart) {
  std::vector<std::string> symbols;
  PhoneSequence seq;
  bool attach_ok = false;  // previous element was a phone, not whitespace
  bool join_next = false;  // previous mark was a tie bar

  for (std::size_t pos = 0; pos < ipa_text.size();) {
    const auto d = utf8::decode(ipa_text, pos);
    const std::string_view raw = ipa_text.substr(pos, d.length);
    pos += d.length;

    if (utf8::is_space(d.codepoint)) {
      if (!seq.breaks.empty() && seq.breaks.back().before == symbols.size()) {
        seq.breaks.back().text += raw;
      } else {
        seq.breaks.push_back({symbols.size(), std::string(raw)});
      }
      attach_ok = false;
      join_next = false;
      continue;
    }
    if (attach_ok && (utf8::binds_left(d.codepoint) || join_next)) {
      symbols.back() += raw;
      join_next = utf8::is_tie_bar(d.codepoint);
      continue;
    }
    symbols.emplace_back(raw);
    attach_ok = true;
    join_next = false;
  }

  seq.phones.reserve(symbols.size());
  for (const auto& symbol : symbols) seq.phones.push_back(features_of(symbol, chart));
  return seq;
}

double phone_distance(const Phone& a, const Phone& b, const DistanceWeights& w) {
  if (a.symbol() == b.symbol()) return 0.0;
  const Category ca = a.category();
  const Category cb = b.category();
  if (ca == Category::Unknown || cb == Category::Unknown) return w.unknown_penalty;
  if (ca != cb) return w.cross_category;

  double cost = 0.0;
  if (ca == Category::Vowel) {
    const auto& va = *a.vowel();
    const auto& vb = *b.vowel();
    cost += w.height_step * steps(va.height, vb.height);
    cost += w.backness_step * steps(va.backness, vb.backness);
    if (va.rounded != vb.rounded) cost += w.rounding;
  } else {
    const auto& ka = *a.consonant();
    const auto& kb = *b.consonant();
    cost += w.place_step * steps(ka.place, kb.place);
    cost += w.manner_step * steps(ka.manner, kb.manner);
    if (ka.voiced != kb.voiced) cost += w.voicing;
  }
  if (a.is_long() != b.is_long()) cost += w.length;
  cost = std::min(cost, 1.0);
  return cost > 0.0 ? cost : w.distinct_floor;
}

std::vector<std::string> unknown_symbols(const PhoneSequence& seq) {
  std::vector<std::string> out;
  for (const auto& phone : seq.phones) {
    if (phone.category() == Category::Unknown &&
        std::find(out.begin(), out.end(), phone.symbol()) == out.end()) {
      out.push_back(phone.symbol());
    }
  }
  return out;
}

}  // namespace dialectid::ipa
