#include "dialectid/alignment.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "dialectid/utf8.hpp"

namespace dialectid::align {

namespace {

enum class Move : unsigned char { None, Diagonal, Up, Left };  // Up = delete, Left = insert

std::string strip_punctuation(std::string_view word) {
  std::string out;
  for (std::size_t pos = 0; pos < word.size();) {
    const auto d = utf8::decode(word, pos);
    const char32_t cp = d.codepoint;
    const bool ascii_letter = (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
    const bool keep = ascii_letter || (cp >= 0xC0 && cp != 0xD7 && cp != 0xF7 &&
                                       !(cp >= 0x2000 && cp <= 0x2BFF));
    if (keep) out.append(word.substr(pos, d.length));
    pos += d.length;
  }
  return out;
}

std::string pad(const std::string& text, std::size_t width) {
  const std::size_t w = utf8::display_width(text);
  return w >= width ? text : text + std::string(width - w, ' ');
}

std::string format_cost(double cost) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", cost);
  return buf;
}

}  // namespace

std::vector<ReferenceWord> reference_words(std::string_view standard_german, const GermanG2P& g2p,
                                           const ipa::IpaChart& chart) {
  std::vector<ReferenceWord> refs;
  std::istringstream in{std::string(standard_german)};
  for (std::string token; in >> token;) {
    std::string word = strip_punctuation(token);
    if (word.empty()) continue;
    auto phones = g2p.ref_phones(word, chart);
    if (phones.empty()) continue;
    refs.push_back({std::move(word), std::move(phones)});
  }
  return refs;
}

Alignment align(const ipa::PhoneSequence& dialect, const std::vector<ReferenceWord>& refs,
                const ipa::DistanceWeights& weights, const AlignOptions& options) {
  if (!(options.gap_penalty > 0.0)) throw std::invalid_argument("gap_penalty must be positive");
  const double gap = options.gap_penalty;

  std::vector<const ipa::Phone*> ref;
  std::vector<std::size_t> ref_word;
  Alignment result;
  for (std::size_t w = 0; w < refs.size(); ++w) {
    result.words.push_back(refs[w].orthography);
    for (const auto& phone : refs[w].ref_phones.phones) {
      ref.push_back(&phone);
      ref_word.push_back(w);
    }
  }
  const auto& dia = dialect.phones;
  const std::size_t n = ref.size();
  const std::size_t m = dia.size();
  const std::size_t cols = m + 1;

  std::vector<double> cost((n + 1) * cols);
  std::vector<Move> move((n + 1) * cols, Move::None);
  const auto at = [cols](std::size_t i, std::size_t j) { return i * cols + j; };

  for (std::size_t i = 1; i <= n; ++i) {
    cost[at(i, 0)] = cost[at(i - 1, 0)] + gap;
    move[at(i, 0)] = Move::Up;
  }
  for (std::size_t j = 1; j <= m; ++j) {
    cost[at(0, j)] = cost[at(0, j - 1)] + gap;
    move[at(0, j)] = Move::Left;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const double diag = cost[at(i - 1, j - 1)] + ipa::phone_distance(*ref[i - 1], dia[j - 1], weights);
      const double up = cost[at(i - 1, j)] + gap;
      const double left = cost[at(i, j - 1)] + gap;
      // Strict comparisons keep the earlier-preferred move on ties.
      double best = diag;
      Move chosen = Move::Diagonal;
      if (up < best) {
        best = up;
        chosen = Move::Up;
      }
      if (left < best) {
        best = left;
        chosen = Move::Left;
      }
      cost[at(i, j)] = best;
      move[at(i, j)] = chosen;
    }
  }

  std::vector<AlignUnit> reversed;
  reversed.reserve(n + m);
  for (std::size_t i = n, j = m; i > 0 || j > 0;) {
    switch (move[at(i, j)]) {
      case Move::Diagonal: {
        const double c = ipa::phone_distance(*ref[i - 1], dia[j - 1], weights);
        reversed.push_back({ref_word[i - 1], c == 0.0 ? Op::Match : Op::Substitute, *ref[i - 1],
                            dia[j - 1], c});
        --i;
        --j;
        break;
      }
      case Move::Up:
        reversed.push_back({ref_word[i - 1], Op::Delete, *ref[i - 1], std::nullopt, gap});
        --i;
        break;
      case Move::Left:
        reversed.push_back({0, Op::Insert, std::nullopt, dia[j - 1], gap});
        --j;
        break;
      case Move::None:
        throw std::logic_error("alignment traceback reached an unfilled cell");
    }
  }

  result.units.assign(reversed.rbegin(), reversed.rend());
  std::size_t current_word = 0;
  for (auto& unit : result.units) {
    if (unit.op == Op::Insert) {
      unit.ref_word_index = current_word;
    } else {
      current_word = unit.ref_word_index;
    }
    result.total_cost += unit.cost;
  }
  return result;
}

std::string_view op_symbol(Op op) {
  switch (op) {
    case Op::Match:
      return "=";
    case Op::Substitute:
      return "~";
    case Op::Insert:
      return "+";
    case Op::Delete:
      break;
  }
  return "-";
}

std::string render_alignment(const Alignment& alignment) {
  if (alignment.units.empty()) return {};
  constexpr std::string_view kGap = "∅";

  std::size_t ref_width = 3;
  std::size_t dia_width = 7;
  for (const auto& unit : alignment.units) {
    if (unit.ref_phone) ref_width = std::max(ref_width, utf8::display_width(unit.ref_phone->symbol()));
    if (unit.dialect_phone) {
      dia_width = std::max(dia_width, utf8::display_width(unit.dialect_phone->symbol()));
    }
  }

  std::ostringstream out;
  std::size_t i = 0;
  while (i < alignment.units.size()) {
    const std::size_t word = alignment.units[i].ref_word_index;
    std::size_t end = i;
    double block_cost = 0.0;
    while (end < alignment.units.size() && alignment.units[end].ref_word_index == word) {
      block_cost += alignment.units[end].cost;
      ++end;
    }
    const std::string title =
        word < alignment.words.size() ? alignment.words[word] : std::string("(no reference)");
    out << "#" << (word + 1) << " " << title << "  [cost " << format_cost(block_cost) << "]\n";
    out << "  op  " << pad("ref", ref_width) << "  " << pad("dialect", dia_width) << "  cost\n";
    for (; i < end; ++i) {
      const auto& unit = alignment.units[i];
      const std::string ref = unit.ref_phone ? unit.ref_phone->symbol() : std::string(kGap);
      const std::string dia = unit.dialect_phone ? unit.dialect_phone->symbol() : std::string(kGap);
      out << "  " << op_symbol(unit.op) << "   " << pad(ref, ref_width) << "  " << pad(dia, dia_width)
          << "  " << format_cost(unit.cost) << "\n";
    }
  }
  out << "total cost " << format_cost(alignment.total_cost) << "\n";
  return out.str();
}

}  // namespace dialectid::align
