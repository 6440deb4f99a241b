#include <thread>

#include <httplib.h>

#include "dialectid/agent/backend.hpp"
#include "dialectid/error.hpp"

namespace dialectid::agent {

namespace {

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(BackendConfig config, std::string api_key)
    : config_(std::move(config)), api_key_(std::move(api_key)) {
  config_.validate();
  if (api_key_.empty()) throw ConfigError("live backend needs an API key in $" + config_.api_key_env);
  const auto scheme_end = config_.endpoint.find("://");
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = config_.endpoint.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? std::string() : config_.endpoint.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpBackend::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw BackendError(ErrorKind::Data, "empty request");
  const std::string body = request.canonical();
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - seconds);

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());
  client.set_bearer_token_auth(api_key_);

  auto delay = config_.backoff;
  for (int attempt = 0;; ++attempt) {
    const bool last_attempt = attempt >= config_.max_retries;
    ErrorKind kind;
    std::string message;
    auto result = client.Post(path_prefix_ + "/chat/completions", body, "application/json");
    if (!result) {
      const auto err = result.error();
      kind = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) ? ErrorKind::Timeout
                                                                                     : ErrorKind::Transport;
      message = "request failed: " + httplib::to_string(err);
    } else if (result->status == 200) {
      try {
        const auto j = Json::parse(result->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const Json::exception& e) {
        throw BackendError(ErrorKind::Http, std::string("malformed completion response: ") + e.what());
      }
    } else {
      message = "HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 300);
      if (result->body.find("insufficient_quota") != std::string::npos) throw BackendError(ErrorKind::Quota, message);
      if (!transient_status(result->status)) throw BackendError(ErrorKind::Http, message);
      kind = ErrorKind::Http;
    }
    if (last_attempt) {
      throw BackendError(kind, message + " (after " + std::to_string(attempt + 1) + " attempts)");
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

}  // namespace dialectid::agent
