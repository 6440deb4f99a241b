#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialectid/labels.hpp"
#include "dialectid/segment.hpp"

namespace dialectid::agent {

enum class AttachmentKind { Features, Explanation, VowelTable, IpaChart, Sample };
std::string_view attachment_kind_name(AttachmentKind k);
std::optional<AttachmentKind> parse_attachment_kind(std::string_view name);

struct Attachment {
  std::string label;
  AttachmentKind kind;
  std::string text;
  bool operator==(const Attachment&) const = default;
};

// The reference materials in data/attachments, in index order.
class AttachmentLibrary {
 public:
  // Reads attachments.json ({"attachments": [{"label", "kind", "file"}, ...]}).
  static AttachmentLibrary load(const std::filesystem::path& dir);
  explicit AttachmentLibrary(std::vector<Attachment> items = {}) : items_(std::move(items)) {}

  const std::vector<Attachment>& items() const { return items_; }
  std::vector<Attachment> select(bool include_ipa_charts) const;

 private:
  std::vector<Attachment> items_;
};

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct PromptBundle {
  std::string system_prompt;
  std::vector<Attachment> attachments;
  std::string user_query;

  // System prompt, one system message per attachment, then the query.
  std::vector<ChatMessage> messages() const;
};

struct PromptOptions {
  bool with_attachments = true;
  bool include_ipa_charts = true;
};

// Base prompt for the task, verbatim.
std::string_view base_prompt(Task task);

// "[USER] IPA transcription: ...\nStandard German: ..."
std::string user_query(const Segment& segment);

// Throws DataError when either transcription is missing.
PromptBundle build_prompt(Task task, const PromptOptions& options, const Segment& segment,
                          const AttachmentLibrary& library);

// Mustache-style {{name}} substitution. Throws ConfigError naming any
// placeholder without a value.
std::string render_template(std::string_view text, const std::map<std::string, std::string>& values);
// Placeholder names in order of first appearance.
std::vector<std::string> template_placeholders(std::string_view text);

}  // namespace dialectid::agent
