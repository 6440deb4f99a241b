#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dialectid/agent/backend.hpp"
#include "dialectid/agent/prompt.hpp"
#include "dialectid/prediction.hpp"
#include "dialectid/segment.hpp"

namespace dialectid::agent {

struct NodeSpec {
  std::string id;
  std::string slot;           // AgentState slot the node writes
  std::string template_text;  // may reference earlier slots as {{slot}}
  bool attachments = true;
  bool final = false;         // produces the run's label
};

// Node sequence loaded from JSON; see docs/formats.md.
struct GraphConfig {
  std::vector<NodeSpec> nodes;
  bool include_ipa_charts = true;
  std::string reformat_template;  // sent once after an unparseable node reply

  // Template paths resolve against `data_dir`. Throws ConfigError for unknown
  // placeholders, slots read before they are written, duplicate slots, or a
  // final node that is missing or not last.
  static GraphConfig load(const std::filesystem::path& path, const std::filesystem::path& data_dir);
  static GraphConfig parse(std::string_view json_text, std::string_view source_name,
                           const std::filesystem::path& data_dir);
};

struct NodeResult {
  std::string node_id;
  ClassScores confidences;
  std::string reasoning;
  std::string raw_response;
  std::optional<Label> final_label;
};

// Inputs plus one write-once slot per node.
class AgentState {
 public:
  AgentState(std::string audio_filename, std::string asr_transcription, std::string standard_german);

  const std::string& audio_filename() const { return audio_filename_; }
  const std::string& asr_transcription() const { return asr_transcription_; }
  const std::string& standard_german() const { return standard_german_; }

  const NodeResult* slot(const std::string& name) const;
  const NodeResult* vowel_analysis() const { return slot("vowel_analysis"); }
  const NodeResult* dialect_features_analysis() const { return slot("dialect_features_analysis"); }
  // Throws std::logic_error when the slot was already written.
  void write(const std::string& name, NodeResult result);

  const std::optional<Prediction>& final_prediction() const { return final_prediction_; }
  void set_final_prediction(Prediction p);  // throws std::logic_error on a second call

 private:
  std::string audio_filename_;
  std::string asr_transcription_;
  std::string standard_german_;
  std::map<std::string, NodeResult> slots_;
  std::optional<Prediction> final_prediction_;
};

struct AgentContext {
  Task task = Task::Binary;
  const GraphConfig* graph = nullptr;
  const AttachmentLibrary* attachments = nullptr;
  BackendConfig backend_config;
  ChatBackend* backend = nullptr;
  std::string run_id;
};

// One node call; one reformat retry on an unparseable reply, then BackendError(Parse).
NodeResult run_node(const NodeSpec& node, const AgentState& state, const AgentContext& ctx);

// All nodes in order. Failures become an errored Prediction, never an exception.
Prediction run_graph(const Segment& segment, const AgentContext& ctx);
// The base prompt and the query only; the reply must name a class.
Prediction run_baseline(const Segment& segment, const AgentContext& ctx);

}  // namespace dialectid::agent
