#include "dialectid/agent/graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "dialectid/error.hpp"
#include "dialectid/json_io.hpp"

namespace dialectid::agent {

namespace {

const std::set<std::string> kStateFields{"audio_filename", "asr_transcription", "standard_german"};

std::string load_template(const std::filesystem::path& data_dir, const Json& node, std::string_view key,
                          const std::string& where) {
  if (!node.contains(key) || !node[std::string(key)].is_string()) {
    throw ConfigError(where + ": '" + std::string(key) + "' must name a template file");
  }
  try {
    return read_file(data_dir / node[std::string(key)].get<std::string>());
  } catch (const DataError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

Prediction errored(const Segment& segment, const AgentContext& ctx, Source source, ErrorKind kind,
                   std::string message) {
  Prediction p;
  p.segment_id = segment.id;
  p.task = ctx.task;
  p.source = source;
  p.run_id = ctx.run_id;
  p.error = PredictionError{kind, std::move(message)};
  return p;
}

ChatRequest make_request(const AgentContext& ctx, std::vector<ChatMessage> messages) {
  return {ctx.backend_config.model, ctx.backend_config.temperature, std::move(messages)};
}

}  // namespace

GraphConfig GraphConfig::parse(std::string_view json_text, std::string_view source_name,
                               const std::filesystem::path& data_dir) {
  const std::string where(source_name);
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw ConfigError(where + ": invalid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array() || j["nodes"].empty()) {
    throw ConfigError(where + ": expected a non-empty 'nodes' list");
  }
  GraphConfig config;
  config.include_ipa_charts = j.value("include_ipa_charts", true);
  config.reformat_template = load_template(data_dir, j, "reformat_template", where);
  for (const auto& name : template_placeholders(config.reformat_template)) {
    if (name != "output_format") throw ConfigError(where + ": reformat template may only use {{output_format}}");
  }

  std::set<std::string> written;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j["nodes"].size(); ++i) {
    const auto& n = j["nodes"][i];
    const std::string node_where = where + " node " + std::to_string(i + 1);
    if (!n.is_object() || !n.contains("id") || !n["id"].is_string() || !n.contains("slot") || !n["slot"].is_string()) {
      throw ConfigError(node_where + ": needs string 'id' and 'slot'");
    }
    NodeSpec spec;
    spec.id = n["id"].get<std::string>();
    spec.slot = n["slot"].get<std::string>();
    spec.attachments = n.value("attachments", true);
    spec.final = n.value("final", false);
    spec.template_text = load_template(data_dir, n, "template", node_where);
    if (!ids.insert(spec.id).second) throw ConfigError(node_where + ": duplicate node id '" + spec.id + "'");
    if (kStateFields.count(spec.slot) || written.count(spec.slot)) {
      throw ConfigError(node_where + ": slot '" + spec.slot + "' is already taken");
    }
    const auto names = template_placeholders(spec.template_text);
    if (std::find(names.begin(), names.end(), "output_format") == names.end()) {
      throw ConfigError(node_where + ": template lacks the required {{output_format}} placeholder");
    }
    for (const auto& name : names) {
      if (name == "output_format" || kStateFields.count(name)) continue;
      if (!written.count(name)) {
        throw ConfigError(node_where + ": template reads {{" + name + "}}, which no earlier node writes");
      }
    }
    written.insert(spec.slot);
    config.nodes.push_back(std::move(spec));
  }
  const auto finals = std::count_if(config.nodes.begin(), config.nodes.end(), [](const NodeSpec& n) { return n.final; });
  if (finals != 1 || !config.nodes.back().final) {
    throw ConfigError(where + ": exactly one node, the last, must be marked final");
  }
  return config;
}

GraphConfig GraphConfig::load(const std::filesystem::path& path, const std::filesystem::path& data_dir) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse(text, path.string(), data_dir);
}

AgentState::AgentState(std::string audio_filename, std::string asr_transcription, std::string standard_german)
    : audio_filename_(std::move(audio_filename)),
      asr_transcription_(std::move(asr_transcription)),
      standard_german_(std::move(standard_german)) {}

const NodeResult* AgentState::slot(const std::string& name) const {
  const auto it = slots_.find(name);
  return it == slots_.end() ? nullptr : &it->second;
}

void AgentState::write(const std::string& name, NodeResult result) {
  if (!slots_.emplace(name, std::move(result)).second) {
    throw std::logic_error("agent state slot '" + name + "' written twice");
  }
}

void AgentState::set_final_prediction(Prediction p) {
  if (final_prediction_) throw std::logic_error("final prediction set twice");
  final_prediction_ = std::move(p);
}

NodeResult run_node(const NodeSpec& node, const AgentState& state, const AgentContext& ctx) {
  std::map<std::string, std::string> values{
      {"output_format", output_format_instructions(ctx.task, node.final)},
      {"audio_filename", state.audio_filename()},
      {"asr_transcription", state.asr_transcription()},
      {"standard_german", state.standard_german()},
  };
  for (const auto& name : template_placeholders(node.template_text)) {
    if (values.count(name)) continue;
    const NodeResult* earlier = state.slot(name);
    if (!earlier) throw ConfigError("node " + node.id + " needs slot '" + name + "', which is empty");
    values[name] = earlier->raw_response;
  }

  Segment query_segment;
  query_segment.id = state.audio_filename();
  query_segment.ipa_transcription = state.asr_transcription();
  query_segment.standard_german = state.standard_german();
  const PromptOptions options{node.attachments, ctx.graph->include_ipa_charts};
  static const AttachmentLibrary kNone;
  const PromptBundle bundle =
      build_prompt(ctx.task, options, query_segment, ctx.attachments ? *ctx.attachments : kNone);

  std::vector<ChatMessage> messages{{"system", bundle.system_prompt}};
  for (const auto& a : bundle.attachments) messages.push_back({"system", "Reference material: " + a.label + "\n\n" + a.text});
  messages.push_back({"system", render_template(node.template_text, values)});
  messages.push_back({"user", bundle.user_query});

  const auto attempt = [&](const std::string& reply) {
    ParsedBlock block = parse_result_block(reply, ctx.task);
    if (node.final && !block.final_label) throw BackendError(ErrorKind::Parse, "final node reply has no final: line");
    return NodeResult{node.id, std::move(block.confidences), std::move(block.reasoning), reply, block.final_label};
  };

  const std::string first = ctx.backend->complete(make_request(ctx, messages));
  try {
    return attempt(first);
  } catch (const BackendError& e) {
    if (e.kind() != ErrorKind::Parse) throw;
  }
  messages.push_back({"assistant", first});
  messages.push_back({"user", render_template(ctx.graph->reformat_template,
                                              {{"output_format", values.at("output_format")}})});
  const std::string second = ctx.backend->complete(make_request(ctx, messages));
  try {
    return attempt(second);
  } catch (const BackendError& e) {
    throw BackendError(ErrorKind::Parse, "node " + node.id + " reply unparseable after reformat retry: " + e.what());
  }
}

Prediction run_graph(const Segment& segment, const AgentContext& ctx) {
  try {
    if (segment.ipa_transcription.empty() || segment.standard_german.empty()) {
      throw DataError("segment " + segment.id + " lacks a transcription");
    }
    AgentState state(segment.audio_path.empty() ? segment.id : segment.audio_path, segment.ipa_transcription,
                     segment.standard_german);
    const NodeResult* last = nullptr;
    for (const auto& node : ctx.graph->nodes) {
      state.write(node.slot, run_node(node, state, ctx));
      last = state.slot(node.slot);
    }
    Prediction p;
    p.segment_id = segment.id;
    p.task = ctx.task;
    p.source = Source::Agent;
    p.run_id = ctx.run_id;
    p.label = last->final_label;
    p.scores = last->confidences;
    const auto best = last->confidences.argmax();
    p.tie = best.tie && best.label == *p.label;
    state.set_final_prediction(p);
    return *state.final_prediction();
  } catch (const BackendError& e) {
    return errored(segment, ctx, Source::Agent, e.kind(), e.what());
  } catch (const DataError& e) {
    return errored(segment, ctx, Source::Agent, ErrorKind::Data, e.what());
  }
}

Prediction run_baseline(const Segment& segment, const AgentContext& ctx) {
  try {
    static const AttachmentLibrary kNone;
    const PromptBundle bundle =
        build_prompt(ctx.task, {false, false}, segment, ctx.attachments ? *ctx.attachments : kNone);
    const std::string reply = ctx.backend->complete(make_request(ctx, bundle.messages()));
    Prediction p;
    p.segment_id = segment.id;
    p.task = ctx.task;
    p.source = Source::Baseline;
    p.run_id = ctx.run_id;
    p.label = parse_final_reply(reply, ctx.task);
    return p;
  } catch (const BackendError& e) {
    return errored(segment, ctx, Source::Baseline, e.kind(), e.what());
  } catch (const DataError& e) {
    return errored(segment, ctx, Source::Baseline, ErrorKind::Data, e.what());
  }
}

}  // namespace dialectid::agent
