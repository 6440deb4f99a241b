#include "dialectid/agent/backend.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "dialectid/error.hpp"
#include "dialectid/utf8.hpp"

namespace dialectid::agent {

namespace {

constexpr std::string_view kFence = "```result";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    lines.emplace_back(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return lines;
}

// Lowercased letter runs; everything else separates words.
std::vector<std::string> words_of(std::string_view text) {
  const std::string lowered = utf8::to_lower_german(text);
  std::vector<std::string> words;
  std::string current;
  for (std::size_t pos = 0; pos < lowered.size();) {
    const auto d = utf8::decode(lowered, pos);
    const char32_t cp = d.codepoint;
    const bool letter = (cp >= U'a' && cp <= U'z') || (cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7);
    if (letter) {
      current.append(lowered, pos, d.length);
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
    pos += d.length;
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

// Every class named in `words`, in order.
std::vector<Label> labels_in(const std::vector<std::string>& words, Task task) {
  std::vector<Label> found;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (task == Task::Binary) {
      if (i + 1 < words.size() && words[i + 1] == "alemannic") {
        if (words[i] == "high") {
          found.push_back(Label::High);
          ++i;
        } else if (words[i] == "highest") {
          found.push_back(Label::Highest);
          ++i;
        }
      }
    } else {
      for (const Label l : labels_for(Task::Eight)) {
        if (words[i] == utf8::to_lower_german(label_code(l))) found.push_back(l);
      }
    }
  }
  return found;
}

std::optional<Label> label_from_key(std::string_view key, Task task) {
  const auto words = words_of(key);
  const auto found = labels_in(words, task);
  const std::size_t expected_words = task == Task::Binary ? 2 : 1;
  if (found.size() == 1 && words.size() == expected_words) return found.front();
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &length) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

Json request_json(const ChatRequest& r) {
  Json j;
  j["model"] = r.model;
  j["temperature"] = r.temperature;
  j["messages"] = Json::array();
  for (const auto& m : r.messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return j;
}

}  // namespace

void BackendConfig::validate() const {
  if (!(temperature >= 0.0)) throw ConfigError("backend temperature must be >= 0");
  if (max_retries < 0) throw ConfigError("backend max_retries must be >= 0");
  if (timeout.count() <= 0) throw ConfigError("backend timeout must be positive");
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0) {
    throw ConfigError("backend endpoint must be an http:// or https:// URL");
  }
}

BackendConfig BackendConfig::from_json(const Json& j) {
  BackendConfig c;
  if (!j.is_object()) throw ConfigError("backend config must be an object");
  static const std::set<std::string> kKeys{"endpoint",   "model",      "temperature", "timeout_ms",
                                           "max_retries", "backoff_ms", "api_key_env"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw ConfigError("backend config: unknown key '" + key + "'");
  }
  try {
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long>(c.timeout.count())));
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff = std::chrono::milliseconds(j.value("backoff_ms", static_cast<long>(c.backoff.count())));
    c.api_key_env = j.value("api_key_env", c.api_key_env);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("backend config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string ChatRequest::canonical() const { return request_json(*this).dump(); }

std::string ChatRequest::key() const { return sha256_hex(canonical()); }

std::string format_label(Label label, Task task) {
  if (task == Task::Binary) return std::string(label_display_name(label));
  return utf8::to_lower_german(label_code(label));
}

std::string output_format_instructions(Task task, bool with_final) {
  std::string names;
  for (const Label l : labels_for(task)) names += (names.empty() ? "" : ", ") + format_label(l, task);
  std::ostringstream out;
  out << "Reply with your analysis in exactly this format:\n" << kFence << "\n";
  for (const Label l : labels_for(task)) out << format_label(l, task) << ": <probability between 0 and 1>\n";
  out << "reasoning: <one or two sentences>\n";
  if (with_final) out << "final: <one of " << names << ">\n";
  out << "```\nThe probabilities must sum to 1.";
  return out.str();
}

std::string format_result_block(const ClassScores& scores, const std::string& reasoning,
                                std::optional<Label> final_label) {
  std::ostringstream out;
  out << kFence << "\n";
  const auto labels = labels_for(scores.task());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << format_label(labels[i], scores.task()) << ": " << format_double(scores.values()[i]) << "\n";
  }
  out << "reasoning: " << reasoning << "\n";
  if (final_label) out << "final: " << format_label(*final_label, scores.task()) << "\n";
  out << "```\n";
  return out.str();
}

ParsedBlock parse_result_block(std::string_view text, Task task) {
  const auto open = text.rfind(kFence);
  if (open == std::string_view::npos) throw BackendError(ErrorKind::Parse, "reply has no ```result block");
  const auto body_start = text.find('\n', open);
  if (body_start == std::string_view::npos) throw BackendError(ErrorKind::Parse, "empty ```result block");
  const auto close = text.find("```", body_start);
  if (close == std::string_view::npos) throw BackendError(ErrorKind::Parse, "unterminated ```result block");

  const auto labels = labels_for(task);
  std::vector<std::optional<double>> values(labels.size());
  std::string reasoning;
  bool in_reasoning = false;
  std::optional<Label> final_label;
  for (const auto& raw : split_lines(text.substr(body_start + 1, close - body_start - 1))) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    const std::string key = colon == std::string::npos ? std::string() : trim(line.substr(0, colon));
    const std::string value = colon == std::string::npos ? std::string() : trim(line.substr(colon + 1));
    const std::string lowered_key = utf8::to_lower_german(key);
    if (lowered_key == "reasoning") {
      reasoning = value;
      in_reasoning = true;
      continue;
    }
    if (lowered_key == "final") {
      final_label = parse_final_reply(value, task);
      in_reasoning = false;
      continue;
    }
    if (const auto label = colon == std::string::npos ? std::nullopt : label_from_key(key, task)) {
      const std::size_t i = label_index(*label, task);
      if (values[i]) throw BackendError(ErrorKind::Parse, "duplicate confidence for " + key);
      char* end = nullptr;
      const double v = std::strtod(value.c_str(), &end);
      if (value.empty() || *end != '\0' || !std::isfinite(v) || v < 0.0) {
        throw BackendError(ErrorKind::Parse, "bad confidence '" + value + "' for " + key);
      }
      values[i] = v;
      in_reasoning = false;
      continue;
    }
    if (in_reasoning) {
      reasoning += "\n" + line;
      continue;
    }
    throw BackendError(ErrorKind::Parse, "unexpected line in result block: " + line);
  }

  std::vector<double> confidences;
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!values[i]) {
      throw BackendError(ErrorKind::Parse, "result block lacks a confidence for " + format_label(labels[i], task));
    }
    confidences.push_back(*values[i]);
    sum += *values[i];
  }
  if (!(sum > 0.0)) throw BackendError(ErrorKind::Parse, "result block confidences are all zero");
  if (std::abs(sum - 1.0) > 1e-9) {
    for (double& c : confidences) c /= sum;
  }
  return {ClassScores(task, std::move(confidences)), reasoning, final_label};
}

Label parse_final_reply(std::string_view text, Task task) {
  const auto lines = split_lines(text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    const auto found = labels_in(words_of(*it), task);
    if (found.empty()) continue;
    const std::set<Label> distinct(found.begin(), found.end());
    if (distinct.size() > 1) {
      throw BackendError(ErrorKind::Parse, "conflicting labels on the answer line: " + trim(*it));
    }
    return found.front();
  }
  throw BackendError(ErrorKind::Parse, "no " + std::string(task_name(task)) + " label in reply: " +
                                           trim(text.substr(0, 120)));
}

std::string MockBackend::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw BackendError(ErrorKind::Data, "empty request");
  const Task task = request.messages.front().content.find("two letter short form") != std::string::npos
                        ? Task::Eight
                        : Task::Binary;
  constexpr std::string_view kIpa = "IPA transcription: ";
  constexpr std::string_view kGerman = "\nStandard German: ";
  const ChatMessage* query = nullptr;
  bool wants_block = false;
  bool wants_final = false;
  for (const auto& m : request.messages) {
    if (!query && m.role == "user" && m.content.find(kIpa) != std::string::npos) query = &m;
    if (m.content.find(kFence) != std::string::npos) wants_block = true;
    if (m.content.find("\nfinal: <") != std::string::npos) wants_final = true;
  }
  if (!query) throw BackendError(ErrorKind::Data, "request carries no transcription query");
  const std::string& q = query->content;
  const auto ipa_at = q.find(kIpa) + kIpa.size();
  const auto german_at = q.find(kGerman, ipa_at);
  if (german_at == std::string::npos) throw BackendError(ErrorKind::Data, "query lacks the Standard German line");
  const std::string ipa = q.substr(ipa_at, german_at - ipa_at);
  const std::string german = q.substr(german_at + kGerman.size());

  const auto analysis = features::analyze(ipa, german, rules_, task, resources_);
  const Label best = analysis.scores.argmax().label;
  if (!wants_block) return format_label(best, task) + "\n";

  std::string reasoning;
  for (const auto& hit : analysis.hits) reasoning += (reasoning.empty() ? "rule evidence: " : ", ") + hit.rule_id;
  if (reasoning.empty()) reasoning = "no rule evidence";
  return format_result_block(analysis.scores, reasoning, wants_final ? std::optional<Label>(best) : std::nullopt);
}

std::unique_ptr<ReplayBackend> ReplayBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open replay file " + path.string());
  auto backend = std::unique_ptr<ReplayBackend>(new ReplayBackend());
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = Json::parse(line);
      backend->responses_[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
    } catch (const Json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return backend;
}

std::string ReplayBackend::complete(const ChatRequest& request) {
  const auto it = responses_.find(request.key());
  if (it == responses_.end()) {
    throw BackendError(ErrorKind::ReplayMiss, "no recorded response for request " + request.key().substr(0, 16));
  }
  return it->second;
}

RecordingBackend::RecordingBackend(ChatBackend& inner, const std::filesystem::path& path)
    : inner_(inner), out_(path, std::ios::app) {
  if (!out_) throw ConfigError("cannot open replay file for writing: " + path.string());
}

std::string RecordingBackend::complete(const ChatRequest& request) {
  std::string response = inner_.complete(request);
  Json record;
  record["key"] = request.key();
  record["request"] = request_json(request);
  record["response"] = response;
  const std::lock_guard<std::mutex> lock(mutex_);
  out_ << record.dump() << "\n";
  out_.flush();
  return response;
}

}  // namespace dialectid::agent
