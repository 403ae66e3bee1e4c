#include <httplib.h>

#include <cstdlib>

#include "divlogic/eval.hpp"

namespace divlogic::eval {

// httplib::Client is not safe to share between threads, so each request opens its own.
struct HttpChatClient::Impl {
  std::string base;
  int timeout = 60;

  httplib::Client connect() const {
    httplib::Client c(base);
    c.set_connection_timeout(timeout, 0);
    c.set_read_timeout(timeout, 0);
    c.set_write_timeout(timeout, 0);
    return c;
  }
};

HttpChatClient::HttpChatClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  if (const char* t = std::getenv(cfg_.token_env.c_str())) token_ = t;
  impl_ = std::make_unique<Impl>(Impl{cfg_.base_url, cfg_.timeout_seconds});
  if (!impl_->connect().is_valid()) throw ConfigError("invalid endpoint base_url: " + cfg_.base_url);
}

HttpChatClient::~HttpChatClient() = default;

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  nlohmann::json body;
  if (!cfg_.model.empty()) body["model"] = cfg_.model;
  body["temperature"] = cfg_.temperature;
  auto& msgs = body[cfg_.messages_field] = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});

  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto client = impl_->connect();
  auto res = client.Post(cfg_.path, headers, body.dump(), "application/json");
  if (!res) throw ChatError("request failed: " + httplib::to_string(res.error()), true);

  const int status = res->status;
  if (status == 429 || status >= 500) throw ChatError("endpoint returned HTTP " + std::to_string(status), true, status);
  if (status < 200 || status >= 300)
    throw ChatError("endpoint returned HTTP " + std::to_string(status), false, status);

  const auto reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw ChatError("endpoint returned malformed JSON", false, status);
  const nlohmann::json::json_pointer ptr(cfg_.content_pointer);
  if (!reply.contains(ptr) || !reply[ptr].is_string())
    throw ChatError("response has no string at " + cfg_.content_pointer, false, status);
  return reply[ptr].get<std::string>();
}

}  // namespace divlogic::eval
