#include "dialectid/service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>

#include <httplib.h>

#include "dialectid/dataset.hpp"
#include "dialectid/error.hpp"
#include "dialectid/eval.hpp"

namespace dialectid::service {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Appends and fsyncs before returning, so an acknowledged decision survives a crash.
void append_durable(const std::filesystem::path& path, const std::string& line, bool create_new) {
  const int flags = O_WRONLY | O_APPEND | O_CREAT | (create_new ? O_EXCL : 0);
  const int fd = ::open(path.c_str(), flags, 0644);
  if (fd < 0) throw DataError("cannot open session record " + path.string());
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
    if (n < 0) {
      ::close(fd);
      throw DataError("write failed on session record " + path.string());
    }
    written += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw DataError("fsync failed on session record " + path.string());
}

Response error(int status, const std::string& message) { return {status, Json{{"error", message}}}; }

std::optional<Decision> parse_decision_value(const std::string& value, Task task, bool& ok) {
  ok = true;
  if (value == "abstain") return Decision{};
  const auto label = parse_label_code(value);
  if (!label || !in_label_space(*label, task)) {
    ok = false;
    return std::nullopt;
  }
  Decision d;
  d.label = label;
  return d;
}

Json decision_json(const Decision& d) {
  return Json{{"segment_id", d.segment_id}, {"decision", decision_name(d)}, {"timestamp", d.timestamp}};
}

}  // namespace

std::string decision_name(const Decision& d) {
  return d.label ? std::string(label_code(*d.label)) : std::string("abstain");
}

std::size_t SessionState::cursor() const {
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!find(order[i])) return i;
  }
  return order.size();
}

const Decision* SessionState::find(const std::string& segment_id) const {
  for (const auto& d : decisions) {
    if (d.segment_id == segment_id) return &d;
  }
  return nullptr;
}

std::string header_record(const SessionState& s) {
  Json j;
  j["type"] = "session";
  j["session_id"] = s.session_id;
  j["manifest"] = s.manifest;
  j["task"] = task_name(s.task);
  j["order_seed"] = s.order_seed;
  j["order"] = s.order;
  return j.dump() + "\n";
}

std::string decision_record(const Decision& d) {
  Json j = decision_json(d);
  j["type"] = "decision";
  return j.dump() + "\n";
}

SessionState parse_session(std::istream& in, std::string_view source_name) {
  SessionState state;
  bool header = false;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    // getline sets eof when the last line has no newline: an interrupted append.
    if (in.eof()) break;
    if (line.empty()) continue;
    const std::string where = std::string(source_name) + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    const std::string type = j.value("type", "");
    try {
      if (!header) {
        if (type != "session") throw DataError(where + ": session record must start with a header");
        state.session_id = j.at("session_id").get<std::string>();
        state.manifest = j.at("manifest").get<std::string>();
        const auto task = parse_task(j.at("task").get<std::string>());
        if (!task) throw DataError(where + ": unknown task");
        state.task = *task;
        state.order_seed = j.at("order_seed").get<std::uint64_t>();
        state.order = j.at("order").get<std::vector<std::string>>();
        header = true;
        continue;
      }
      if (type != "decision") throw DataError(where + ": unexpected record type '" + type + "'");
      bool ok = false;
      auto d = parse_decision_value(j.at("decision").get<std::string>(), state.task, ok);
      if (!ok) throw DataError(where + ": invalid decision");
      d->segment_id = j.at("segment_id").get<std::string>();
      d->timestamp = j.at("timestamp").get<std::string>();
      if (std::find(state.order.begin(), state.order.end(), d->segment_id) == state.order.end()) {
        throw DataError(where + ": decision for a segment outside the session");
      }
      if (state.find(d->segment_id)) throw DataError(where + ": second decision for " + d->segment_id);
      state.decisions.push_back(std::move(*d));
    } catch (const Json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  if (!header) throw DataError(std::string(source_name) + ": session record has no header");
  return state;
}

SessionState load_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open session record " + path.string());
  return parse_session(in, path.string());
}

bool valid_session_id(std::string_view id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

AnnotationService::AnnotationService(ServiceConfig config)
    : config_(std::move(config)),
      resources_(Resources::load(config_.data_dir)),
      attachments_(agent::AttachmentLibrary::load(config_.data_dir / "attachments")),
      segments_(data::load_manifest(config_.manifest)) {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& gold = config_.task == Task::Binary ? segments_[i].label2 : segments_[i].label8;
    if (!gold) throw DataError("manifest segment " + segments_[i].id + " has no gold label for the session task");
    index_by_id_[segments_[i].id] = i;
  }
  if (segments_.empty()) throw DataError("manifest " + config_.manifest.string() + " has no segments");
  std::filesystem::create_directories(config_.state_dir / "sessions");
}

AnnotationService::~AnnotationService() = default;

AnnotationService::Session* AnnotationService::find_session(const std::string& id) {
  const std::lock_guard<std::mutex> lock(sessions_mutex_);
  if (const auto it = sessions_.find(id); it != sessions_.end()) return it->second.get();
  const auto path = config_.state_dir / "sessions" / (id + ".jsonl");
  if (!std::filesystem::exists(path)) return nullptr;
  // Drop an interrupted final append so later appends start on a fresh line.
  const std::string content = read_file(path);
  const auto last_newline = content.rfind('\n');
  if (last_newline == std::string::npos) {
    // Even the header is incomplete: the session was never acknowledged.
    std::filesystem::remove(path);
    return nullptr;
  }
  if (last_newline + 1 != content.size()) std::filesystem::resize_file(path, last_newline + 1);
  auto session = std::make_unique<Session>();
  session->state = load_session(path);
  session->path = path;
  for (const auto& sid : session->state.order) {
    if (!index_by_id_.count(sid)) throw DataError("session " + id + " refers to unknown segment " + sid);
  }
  return sessions_.emplace(id, std::move(session)).first->second.get();
}

Response AnnotationService::open_session(const std::string& id) {
  if (!valid_session_id(id)) return error(400, "invalid session id");
  if (Session* existing = find_session(id)) {
    const std::lock_guard<std::mutex> lock(existing->mutex);
    return {200, Json{{"session_id", id}, {"created", false}, {"total", existing->state.order.size()},
                      {"annotated", existing->state.decisions.size()}}};
  }
  const std::lock_guard<std::mutex> lock(sessions_mutex_);
  if (sessions_.count(id)) return {200, Json{{"session_id", id}, {"created", false}}};
  auto session = std::make_unique<Session>();
  session->state.session_id = id;
  session->state.manifest = config_.manifest.string();
  session->state.task = config_.task;
  session->state.order_seed = config_.order_seed;
  for (const auto i : data::seeded_permutation(segments_.size(), config_.order_seed)) {
    session->state.order.push_back(segments_[i].id);
  }
  session->path = config_.state_dir / "sessions" / (id + ".jsonl");
  append_durable(session->path, header_record(session->state), true);
  const std::size_t total = session->state.order.size();
  sessions_.emplace(id, std::move(session));
  return {201, Json{{"session_id", id}, {"created", true}, {"total", total}, {"annotated", 0}}};
}

Json AnnotationService::segment_payload(const Session& s, std::size_t index) const {
  const Segment& seg = segments_[index_by_id_.at(s.state.order[index])];
  // Whitelisted fields only: no labels, canton, region or audio path.
  Json j;
  j["segment_id"] = seg.id;
  j["ipa_transcription"] = seg.ipa_transcription;
  j["standard_german"] = seg.standard_german;
  j["alignment"] = align::render_alignment(resources_.align_texts(seg.ipa_transcription, seg.standard_german));
  return j;
}

Response AnnotationService::next(const std::string& id) {
  if (!valid_session_id(id)) return error(400, "invalid session id");
  Session* s = find_session(id);
  if (!s) return error(404, "unknown session " + id);
  const std::lock_guard<std::mutex> lock(s->mutex);
  const std::size_t cursor = s->state.cursor();
  const std::size_t total = s->state.order.size();
  Json j;
  j["session_id"] = id;
  j["total"] = total;
  j["annotated"] = s->state.decisions.size();
  if (cursor == total) {
    j["done"] = true;
    return {200, j};
  }
  j["done"] = false;
  j["index"] = cursor;
  j["segment"] = segment_payload(*s, cursor);
  j["references"] = reference().body["references"];
  return {200, j};
}

Response AnnotationService::decide(const std::string& id, const Json& body) {
  if (!valid_session_id(id)) return error(400, "invalid session id");
  Session* s = find_session(id);
  if (!s) return error(404, "unknown session " + id);
  if (!body.is_object() || !body.contains("segment_id") || !body["segment_id"].is_string() ||
      !body.contains("decision") || !body["decision"].is_string()) {
    return error(400, "expected {\"segment_id\": string, \"decision\": label or \"abstain\"}");
  }
  const std::lock_guard<std::mutex> lock(s->mutex);
  bool ok = false;
  auto decision = parse_decision_value(body["decision"].get<std::string>(), s->state.task, ok);
  if (!ok) return error(400, "decision must be a label of the session task or \"abstain\"");
  decision->segment_id = body["segment_id"].get<std::string>();
  const auto& order = s->state.order;
  if (std::find(order.begin(), order.end(), decision->segment_id) == order.end()) {
    return error(400, "segment " + decision->segment_id + " is not part of this session");
  }
  if (const Decision* existing = s->state.find(decision->segment_id)) {
    if (existing->label == decision->label) {
      return {200, Json{{"status", "duplicate"}, {"decision", decision_json(*existing)},
                        {"cursor", s->state.cursor()}, {"total", order.size()}}};
    }
    return {409, Json{{"error", "segment " + existing->segment_id + " already has decision " + decision_name(*existing)},
                      {"existing", decision_json(*existing)}}};
  }
  decision->timestamp = utc_now();
  append_durable(s->path, decision_record(*decision), false);
  s->state.decisions.push_back(*decision);
  return {200, Json{{"status", "recorded"}, {"decision", decision_json(*decision)},
                    {"cursor", s->state.cursor()}, {"total", order.size()}}};
}

Response AnnotationService::report(const std::string& id) {
  if (!valid_session_id(id)) return error(400, "invalid session id");
  Session* s = find_session(id);
  if (!s) return error(404, "unknown session " + id);
  const std::lock_guard<std::mutex> lock(s->mutex);
  if (s->state.decisions.empty()) return error(409, "session has no decisions yet");

  std::vector<Prediction> predictions;
  for (const auto& d : s->state.decisions) {
    Prediction p;
    p.segment_id = d.segment_id;
    p.task = s->state.task;
    p.source = Source::Human;
    p.run_id = id;
    p.label = d.label;
    p.abstained = !d.label;
    predictions.push_back(std::move(p));
  }
  const auto tally = eval::confusion(predictions, segments_, s->state.task);
  Json j;
  j["session_id"] = id;
  j["decisions"] = s->state.decisions.size();
  j["total"] = s->state.order.size();
  j["partial"] = s->state.decisions.size() < s->state.order.size();
  if (tally.matrix.total() > 0) {
    auto r = eval::metrics(tally.matrix);
    r.n = tally.n;
    r.abstained = tally.abstained;
    j["report"] = eval::report_to_json(r);
    j["report_text"] = eval::render_report(r);
  } else {
    j["report"] = nullptr;
  }
  j["human"] = eval::human_score_to_json(eval::human_score(tally), s->state.task);
  return {200, j};
}

Response AnnotationService::reference() const {
  Json list = Json::array();
  for (const auto& a : attachments_.items()) {
    list.push_back({{"label", a.label}, {"kind", agent::attachment_kind_name(a.kind)}, {"text", a.text}});
  }
  return {200, Json{{"references", list}}};
}

Response AnnotationService::health() const {
  return {200, Json{{"status", "ok"}, {"segments", segments_.size()}, {"task", task_name(config_.task)}}};
}

void AnnotationService::mount(httplib::Server& server) {
  const auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  const auto guarded = [reply](auto handler) {
    return [reply, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        reply(res, handler(req));
      } catch (const std::exception& e) {
        reply(res, error(500, e.what()));
      }
    };
  };
  constexpr const char* kSession = R"(/api/session/([A-Za-z0-9_-]{1,64}))";

  server.Get("/health", guarded([this](const httplib::Request&) { return health(); }));
  server.Get("/api/reference", guarded([this](const httplib::Request&) { return reference(); }));
  server.Post(kSession, guarded([this](const httplib::Request& req) { return open_session(req.matches[1]); }));
  server.Get(std::string(kSession) + "/next",
             guarded([this](const httplib::Request& req) { return next(req.matches[1]); }));
  server.Get(std::string(kSession) + "/report",
             guarded([this](const httplib::Request& req) { return report(req.matches[1]); }));
  server.Post(std::string(kSession) + "/decision", guarded([this](const httplib::Request& req) {
                Json body;
                try {
                  body = Json::parse(req.body);
                } catch (const Json::exception&) {
                  return error(400, "request body is not JSON");
                }
                return decide(req.matches[1], body);
              }));
  if (config_.ui_dir && std::filesystem::is_directory(*config_.ui_dir)) {
    server.set_mount_point("/", config_.ui_dir->string());
  }
}

}  // namespace dialectid::service
