#include "dialectid/segment.hpp"

#include <array>

namespace dialectid {

namespace {

constexpr std::array<std::string_view, 5> kSourceClasses{"Aargau", "Lucerne", "Zürich", "Valais",
                                                         "Innerschweiz_Highest"};

}  // namespace

std::string_view corpus_name(Corpus c) { return c == Corpus::SwissDial ? "SwissDial" : "STT"; }

std::optional<Corpus> parse_corpus(std::string_view name) {
  if (name == "SwissDial") return Corpus::SwissDial;
  if (name == "STT") return Corpus::STT;
  return std::nullopt;
}

std::string_view source_class_name(SourceClass s) { return kSourceClasses[static_cast<std::size_t>(s)]; }

std::optional<SourceClass> parse_source_class(std::string_view name) {
  for (std::size_t i = 0; i < kSourceClasses.size(); ++i) {
    if (kSourceClasses[i] == name) return static_cast<SourceClass>(i);
  }
  if (name == "Zurich") return SourceClass::Zurich;
  return std::nullopt;
}

}  // namespace dialectid
