#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dialectid/agent/prompt.hpp"
#include "dialectid/json_io.hpp"
#include "dialectid/labels.hpp"
#include "dialectid/resources.hpp"
#include "dialectid/segment.hpp"

namespace httplib {
class Server;
}

namespace dialectid::service {

struct Decision {
  std::string segment_id;
  std::optional<Label> label;  // empty = abstain
  std::string timestamp;       // UTC, ISO 8601
  bool operator==(const Decision&) const = default;
};

std::string decision_name(const Decision& d);  // label code or "abstain"

// Everything a session record file holds.
struct SessionState {
  std::string session_id;
  std::string manifest;  // path of the manifest the session annotates
  Task task = Task::Binary;
  std::uint64_t order_seed = 0;
  std::vector<std::string> order;  // segment ids in presentation order
  std::vector<Decision> decisions;

  // Index into `order` of the first segment without a decision; order.size() when done.
  std::size_t cursor() const;
  const Decision* find(const std::string& segment_id) const;
  bool operator==(const SessionState&) const = default;
};

// Record file: a header line, then one line per decision. A final line
// without its newline is an interrupted write and is ignored.
std::string header_record(const SessionState& state);
std::string decision_record(const Decision& d);
SessionState parse_session(std::istream& in, std::string_view source_name);
SessionState load_session(const std::filesystem::path& path);

struct ServiceConfig {
  std::filesystem::path data_dir;   // linguistic resources and attachments
  std::filesystem::path state_dir;  // sessions/<id>.jsonl live here
  std::filesystem::path manifest;   // segments with gold labels
  Task task = Task::Binary;
  std::uint64_t order_seed = 0;
  std::optional<std::filesystem::path> ui_dir;
};

struct Response {
  int status = 200;
  Json body;
};

// Blind annotation sessions over one manifest. Payloads never carry gold
// labels or metadata that would reveal them.
class AnnotationService {
 public:
  // Throws ConfigError/DataError when the manifest or resources cannot be read.
  explicit AnnotationService(ServiceConfig config);
  ~AnnotationService();

  Response open_session(const std::string& id);
  Response next(const std::string& id);
  Response decide(const std::string& id, const Json& body);
  Response report(const std::string& id);
  Response reference() const;
  Response health() const;

  // Registers the HTTP routes and the static UI mount.
  void mount(httplib::Server& server);

 private:
  struct Session {
    std::mutex mutex;
    SessionState state;
    std::filesystem::path path;
  };
  Session* find_session(const std::string& id);
  Json segment_payload(const Session& s, std::size_t index) const;

  ServiceConfig config_;
  Resources resources_;
  agent::AttachmentLibrary attachments_;
  std::vector<Segment> segments_;
  std::map<std::string, std::size_t> index_by_id_;
  std::mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
};

// Session ids are restricted to [A-Za-z0-9_-]{1,64}.
bool valid_session_id(std::string_view id);

}  // namespace dialectid::service
