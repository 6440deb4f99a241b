#include "dialectid/agent/prompt.hpp"

#include <algorithm>
#include <array>

#include <json.hpp>

#include "dialectid/error.hpp"
#include "dialectid/json_io.hpp"

namespace dialectid::agent {

namespace {

constexpr std::array<std::string_view, 5> kKinds{"features", "explanation", "vowel_table", "ipa_chart",
                                                 "sample"};

constexpr std::string_view kPreamble =
    "You are now a linguist who needs to identify dialects based on feature descriptions and "
    "observations. As a linguist, linguistic reasoning is far more important than coding, coding is "
    "likely unnecessary.\n"
    "You are provided transcriptions in the IPA that were generated automatically as well as "
    "translations into Standard German to help you interpret the dialect transcription. Please "
    "consider the topics with a focus of a linguist, a dialectologist and a phoneticist. Vowels and "
    "consonants must always be considered in their word. It makes no sense to just check for the "
    "presence of specific phones. Instead, they must be considered in relation to the morpheme in "
    "question.";

constexpr std::string_view kBinaryTask =
    " Your first task is to identify a Swiss German dialect into one of two dialect regions: High "
    "Alemannic, Highest Alemannic. Please output as your final reply only the name of the dialect "
    "region.";

constexpr std::string_view kEightTask =
    "\nYour first task is to identify a dialect as one of several Swiss German dialects. Please "
    "output your reply as the two letter short form (ag, be, bs, gr, lu, sg, vs, zh) for (Aargau, "
    "Bern, Basel, Grisons/Graubünden, Lucerne/Luzern, St. Gallen, Valais/Wallis, Zürich).";

}  // namespace

std::string_view attachment_kind_name(AttachmentKind k) { return kKinds[static_cast<std::size_t>(k)]; }

std::optional<AttachmentKind> parse_attachment_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKinds.size(); ++i) {
    if (kKinds[i] == name) return static_cast<AttachmentKind>(i);
  }
  return std::nullopt;
}

AttachmentLibrary AttachmentLibrary::load(const std::filesystem::path& dir) {
  const auto index_path = dir / "attachments.json";
  Json index;
  try {
    index = Json::parse(read_file(index_path));
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  } catch (const Json::exception& e) {
    throw ConfigError(index_path.string() + ": " + e.what());
  }
  const auto list = index.find("attachments");
  if (list == index.end() || !list->is_array()) {
    throw ConfigError(index_path.string() + ": expected {\"attachments\": [...]}");
  }
  std::vector<Attachment> items;
  for (const auto& entry : *list) {
    if (!entry.is_object() || !entry.contains("label") || !entry.contains("kind") || !entry.contains("file")) {
      throw ConfigError(index_path.string() + ": every attachment needs label, kind and file");
    }
    const auto kind_name = entry["kind"].get<std::string>();
    const auto kind = parse_attachment_kind(kind_name);
    if (!kind) throw ConfigError(index_path.string() + ": unknown attachment kind '" + kind_name + "'");
    std::string text;
    try {
      text = read_file(dir / entry["file"].get<std::string>());
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    items.push_back({entry["label"].get<std::string>(), *kind, std::move(text)});
  }
  return AttachmentLibrary(std::move(items));
}

std::vector<Attachment> AttachmentLibrary::select(bool include_ipa_charts) const {
  std::vector<Attachment> out;
  for (const auto& a : items_) {
    if (include_ipa_charts || a.kind != AttachmentKind::IpaChart) out.push_back(a);
  }
  return out;
}

std::vector<ChatMessage> PromptBundle::messages() const {
  std::vector<ChatMessage> out{{"system", system_prompt}};
  for (const auto& a : attachments) out.push_back({"system", "Reference material: " + a.label + "\n\n" + a.text});
  out.push_back({"user", user_query});
  return out;
}

std::string_view base_prompt(Task task) {
  static const std::string binary = std::string(kPreamble) + std::string(kBinaryTask);
  static const std::string eight = std::string(kPreamble) + std::string(kEightTask);
  return task == Task::Binary ? binary : eight;
}

std::string user_query(const Segment& segment) {
  return "[USER] IPA transcription: " + segment.ipa_transcription +
         "\nStandard German: " + segment.standard_german;
}

PromptBundle build_prompt(Task task, const PromptOptions& options, const Segment& segment,
                          const AttachmentLibrary& library) {
  if (segment.ipa_transcription.empty()) throw DataError("segment " + segment.id + " has no IPA transcription");
  if (segment.standard_german.empty()) throw DataError("segment " + segment.id + " has no Standard German text");
  PromptBundle bundle;
  bundle.system_prompt = std::string(base_prompt(task));
  if (options.with_attachments) bundle.attachments = library.select(options.include_ipa_charts);
  bundle.user_query = user_query(segment);
  return bundle;
}

std::vector<std::string> template_placeholders(std::string_view text) {
  std::vector<std::string> names;
  for (std::size_t pos = text.find("{{"); pos != std::string_view::npos; pos = text.find("{{", pos)) {
    const auto end = text.find("}}", pos + 2);
    if (end == std::string_view::npos) throw ConfigError("unterminated {{ in template");
    std::string name(text.substr(pos + 2, end - pos - 2));
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
    pos = end + 2;
  }
  return names;
}

std::string render_template(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t last = 0;
  for (std::size_t pos = text.find("{{"); pos != std::string_view::npos; pos = text.find("{{", last)) {
    const auto end = text.find("}}", pos + 2);
    if (end == std::string_view::npos) throw ConfigError("unterminated {{ in template");
    const std::string name(text.substr(pos + 2, end - pos - 2));
    const auto it = values.find(name);
    if (it == values.end()) throw ConfigError("template placeholder {{" + name + "}} has no value");
    out.append(text.substr(last, pos - last));
    out += it->second;
    last = end + 2;
  }
  out.append(text.substr(last));
  return out;
}

}  // namespace dialectid::agent
