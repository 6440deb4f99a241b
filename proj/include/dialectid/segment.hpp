#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "dialectid/labels.hpp"

namespace dialectid {

enum class Corpus { SwissDial, STT };

// Source classes of the binary task; balanced within their binary class.
enum class SourceClass { Aargau, Lucerne, Zurich, Valais, InnerschweizHighest };

std::string_view corpus_name(Corpus c);
std::optional<Corpus> parse_corpus(std::string_view name);
std::string_view source_class_name(SourceClass s);  // "Zürich", "Innerschweiz_Highest", ...
std::optional<SourceClass> parse_source_class(std::string_view name);

// One utterance with its automatic IPA transcription and Standard German text.
struct Segment {
  std::string id;
  Corpus corpus = Corpus::SwissDial;
  std::optional<std::string> sentence_id;  // parallel-corpus identity, SwissDial only
  std::string audio_path;                  // opaque
  std::string ipa_transcription;
  std::string standard_german;
  std::optional<std::string> canton;
  std::optional<std::string> stt_region;
  std::optional<Label> label8;
  std::optional<SourceClass> source_class;
  std::optional<Label> label2;

  bool operator==(const Segment&) const = default;
};

}  // namespace dialectid
