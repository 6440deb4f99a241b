#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "dialectid/agent/prompt.hpp"
#include "dialectid/features.hpp"
#include "dialectid/json_io.hpp"
#include "dialectid/prediction.hpp"
#include "dialectid/resources.hpp"

namespace dialectid::agent {

// A failed completion or an unusable reply; `kind` is what the run records.
class BackendError : public std::runtime_error {
 public:
  BackendError(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct BackendConfig {
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  double temperature = 0.0;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};  // doubled after every failed attempt
  std::string api_key_env = "OPENAI_API_KEY";

  // Throws ConfigError on negative temperature or retries.
  void validate() const;
  static BackendConfig from_json(const Json& j);
};

struct ChatRequest {
  std::string model;
  double temperature = 0.0;
  std::vector<ChatMessage> messages;

  // Compact JSON with a fixed key order; the replay key hashes this.
  std::string canonical() const;
  std::string key() const;  // hex SHA-256 of canonical()
};

// Implementations must be safe to call from several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Returns the assistant text or throws BackendError.
  virtual std::string complete(const ChatRequest& request) = 0;
};

// Answers from the rule engine. Reads the task from the system prompt and the
// transcriptions from the user query; replies with a structured result block
// when the request asks for one and with the bare class name otherwise.
class MockBackend : public ChatBackend {
 public:
  MockBackend(const Resources& resources, const features::RuleSet& rules)
      : resources_(resources), rules_(rules) {}
  std::string complete(const ChatRequest& request) override;

 private:
  const Resources& resources_;
  const features::RuleSet& rules_;
};

// Serves stored responses keyed by request hash.
class ReplayBackend : public ChatBackend {
 public:
  // One JSON record per line: {"key", "request", "response"}.
  static std::unique_ptr<ReplayBackend> load(const std::filesystem::path& path);
  std::string complete(const ChatRequest& request) override;
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, std::string> responses_;
};

// Forwards to another backend and appends every successful exchange to a replay file.
class RecordingBackend : public ChatBackend {
 public:
  RecordingBackend(ChatBackend& inner, const std::filesystem::path& path);
  std::string complete(const ChatRequest& request) override;

 private:
  ChatBackend& inner_;
  std::mutex mutex_;
  std::ofstream out_;
};

// OpenAI-compatible POST {endpoint}/chat/completions. Retries timeouts,
// transport failures, 429 and 5xx with exponential backoff; an
// insufficient_quota reply fails at once with ErrorKind::Quota.
class HttpBackend : public ChatBackend {
 public:
  HttpBackend(BackendConfig config, std::string api_key);
  std::string complete(const ChatRequest& request) override;

 private:
  BackendConfig config_;
  std::string api_key_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

// The output-format section of node prompts and its parser.
std::string format_label(Label label, Task task);  // "High Alemannic" / "zh"
std::string output_format_instructions(Task task, bool with_final);
std::string format_result_block(const ClassScores& scores, const std::string& reasoning,
                                std::optional<Label> final_label);

struct ParsedBlock {
  ClassScores confidences;
  std::string reasoning;
  std::optional<Label> final_label;
};
// Reads the last ```result fenced block. Throws BackendError(Parse).
ParsedBlock parse_result_block(std::string_view text, Task task);

// The class named on the last line that names one. Case-insensitive; class
// names for the binary task, two-letter codes for the eight-class task.
// Throws BackendError(Parse) when nothing is named or the line is contradictory.
Label parse_final_reply(std::string_view text, Task task);

}  // namespace dialectid::agent
