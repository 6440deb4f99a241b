#include "dialectid/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "dialectid/error.hpp"

namespace dialectid {

namespace {

std::string where_field(std::string_view where, std::string_view field) {
  return std::string(where) + ": field '" + std::string(field) + "'";
}

std::string required_string(const Json& j, std::string_view field, std::string_view where) {
  const auto it = j.find(field);
  if (it == j.end()) throw DataError(std::string(where) + ": missing field '" + std::string(field) + "'");
  if (!it->is_string()) throw DataError(where_field(where, field) + " must be a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const Json& j, std::string_view field, std::string_view where) {
  const auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw DataError(where_field(where, field) + " must be a string");
  return it->get<std::string>();
}

std::optional<Label> optional_label(const Json& j, std::string_view field, std::string_view where) {
  const auto text = optional_string(j, field, where);
  if (!text) return std::nullopt;
  const auto label = parse_label_code(*text);
  if (!label) throw DataError(where_field(where, field) + ": unknown label '" + *text + "'");
  return label;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw DataError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot replace " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json segment_to_json(const Segment& s) {
  Json j;
  j["id"] = s.id;
  j["corpus"] = corpus_name(s.corpus);
  if (s.sentence_id) j["sentence_id"] = *s.sentence_id;
  j["audio_path"] = s.audio_path;
  j["ipa_transcription"] = s.ipa_transcription;
  j["standard_german"] = s.standard_german;
  if (s.canton) j["canton"] = *s.canton;
  if (s.stt_region) j["stt_region"] = *s.stt_region;
  if (s.label8) j["label8"] = label_code(*s.label8);
  if (s.source_class) j["source_class"] = source_class_name(*s.source_class);
  if (s.label2) j["label2"] = label_code(*s.label2);
  return j;
}

Segment segment_from_json(const Json& j, std::string_view where) {
  if (!j.is_object()) throw DataError(std::string(where) + ": expected a JSON object");
  Segment s;
  s.id = required_string(j, "id", where);
  if (s.id.empty()) throw DataError(where_field(where, "id") + " is empty");
  const auto corpus = required_string(j, "corpus", where);
  const auto parsed_corpus = parse_corpus(corpus);
  if (!parsed_corpus) throw DataError(where_field(where, "corpus") + ": unknown corpus '" + corpus + "'");
  s.corpus = *parsed_corpus;
  s.sentence_id = optional_string(j, "sentence_id", where);
  s.audio_path = optional_string(j, "audio_path", where).value_or("");
  s.ipa_transcription = required_string(j, "ipa_transcription", where);
  s.standard_german = required_string(j, "standard_german", where);
  s.canton = optional_string(j, "canton", where);
  s.stt_region = optional_string(j, "stt_region", where);
  s.label8 = optional_label(j, "label8", where);
  if (s.label8 && !in_label_space(*s.label8, Task::Eight)) {
    throw DataError(where_field(where, "label8") + " must be one of the eight dialect codes");
  }
  if (const auto sc = optional_string(j, "source_class", where)) {
    s.source_class = parse_source_class(*sc);
    if (!s.source_class) throw DataError(where_field(where, "source_class") + ": unknown value '" + *sc + "'");
  }
  s.label2 = optional_label(j, "label2", where);
  if (s.label2 && !in_label_space(*s.label2, Task::Binary)) {
    throw DataError(where_field(where, "label2") + " must be High or Highest");
  }
  if (s.corpus == Corpus::SwissDial && !s.sentence_id) {
    throw DataError(std::string(where) + ": SwissDial segment '" + s.id + "' has no sentence_id");
  }
  return s;
}

Json prediction_to_json(const Prediction& p) {
  Json j;
  j["segment_id"] = p.segment_id;
  j["task"] = task_name(p.task);
  j["source"] = source_name(p.source);
  j["label"] = p.label ? Json(label_code(*p.label)) : Json(nullptr);
  if (p.scores) {
    Json scores = Json::object();
    const auto labels = labels_for(p.task);
    for (std::size_t i = 0; i < labels.size(); ++i) scores[std::string(label_code(labels[i]))] = p.scores->values()[i];
    j["scores"] = std::move(scores);
  } else {
    j["scores"] = nullptr;
  }
  j["tie"] = p.tie;
  j["abstained"] = p.abstained;
  j["run_id"] = p.run_id;
  if (p.error) j["error"] = {{"kind", error_kind_name(p.error->kind)}, {"message", p.error->message}};
  return j;
}

Prediction prediction_from_json(const Json& j, std::string_view where) {
  if (!j.is_object()) throw DataError(std::string(where) + ": expected a JSON object");
  Prediction p;
  p.segment_id = required_string(j, "segment_id", where);
  const auto task = parse_task(required_string(j, "task", where));
  if (!task) throw DataError(where_field(where, "task") + " must be binary or eight");
  p.task = *task;
  const auto source = parse_source(required_string(j, "source", where));
  if (!source) throw DataError(where_field(where, "source") + " is not a known source");
  p.source = *source;
  p.label = optional_label(j, "label", where);
  if (p.label && !in_label_space(*p.label, p.task)) {
    throw DataError(where_field(where, "label") + " is outside the " + std::string(task_name(p.task)) +
                    " label space");
  }
  if (const auto it = j.find("scores"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw DataError(where_field(where, "scores") + " must be an object");
    std::vector<double> values;
    for (const Label label : labels_for(p.task)) {
      const auto v = it->find(std::string(label_code(label)));
      if (v == it->end() || !v->is_number()) {
        throw DataError(where_field(where, "scores") + " lacks " + std::string(label_code(label)));
      }
      values.push_back(v->get<double>());
    }
    try {
      p.scores = ClassScores(p.task, std::move(values));
    } catch (const std::invalid_argument& e) {
      throw DataError(where_field(where, "scores") + ": " + e.what());
    }
  }
  p.tie = j.value("tie", false);
  p.abstained = j.value("abstained", false);
  p.run_id = optional_string(j, "run_id", where).value_or("");
  if (const auto it = j.find("error"); it != j.end() && !it->is_null()) {
    const auto kind_name = required_string(*it, "kind", where);
    const auto kind = parse_error_kind(kind_name);
    if (!kind) throw DataError(where_field(where, "error.kind") + ": unknown kind '" + kind_name + "'");
    p.error = PredictionError{*kind, optional_string(*it, "message", where).value_or("")};
  }
  if (p.abstained && p.source != Source::Human) {
    throw DataError(std::string(where) + ": only human predictions may abstain");
  }
  const int outcomes = (p.label ? 1 : 0) + (p.abstained ? 1 : 0) + (p.error ? 1 : 0);
  if (outcomes != 1) {
    throw DataError(std::string(where) + ": a prediction needs exactly one of label, abstention or error");
  }
  return p;
}

std::string predictions_to_jsonl(const std::vector<Prediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    out += prediction_to_json(p).dump();
    out += '\n';
  }
  return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Prediction> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    out.push_back(prediction_from_json(j, where));
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions) {
  write_file_atomic(path, predictions_to_jsonl(predictions));
}

}  // namespace dialectid
