#pragma once

// HTTP plumbing: a chat-completions policy client, and both ends of the
// environment adapter protocol (GET /observe, POST /act, POST /reset).

#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "uxpipe/action.hpp"
#include "uxpipe/digest.hpp"
#include "uxpipe/environment.hpp"
#include "uxpipe/http.hpp"
#include "uxpipe/image.hpp"
#include "uxpipe/policy.hpp"

namespace uxpipe {

struct RemotePolicyConfig {
  std::string base_url;  // e.g. http://localhost:8000
  std::string model;
  std::string api_key;   // sent as a bearer token when non-empty
  int timeout_ms = 120000;
  int max_retries = 3;
  int backoff_ms = 500;  // doubled after every failed attempt
  double temperature = 0.0;
  int max_tokens = 2048;
};

inline std::string png_data_url(const Screenshot& img) {
  return "data:image/png;base64," + base64_encode(encode_png(img));
}

inline nlohmann::json chat_request(const RemotePolicyConfig& cfg, std::span<const ChatMessage> messages) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& part : m.content) {
      if (const auto* t = std::get_if<TextPart>(&part))
        parts.push_back({{"type", "text"}, {"text", t->text}});
      else
        parts.push_back({{"type", "image_url"},
                         {"image_url", {{"url", png_data_url(*std::get<ImagePart>(part).image)}}}});
    }
    msgs.push_back({{"role", m.role}, {"content", parts}});
  }
  return {{"model", cfg.model},
          {"messages", msgs},
          {"temperature", cfg.temperature},
          {"max_tokens", cfg.max_tokens}};
}

// Assistant text from a chat-completions response body.
inline std::string chat_response_text(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("unparseable completion response: ") + e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
    throw TransportError("completion response has no choices");
  const auto& content = j["choices"][0]["message"]["content"];
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string out;
    for (const auto& p : content)
      if (p.value("type", "") == "text") out += p.value("text", "");
    return out;
  }
  throw TransportError("completion response has no message content");
}

class RemotePolicy : public Policy {
 public:
  explicit RemotePolicy(RemotePolicyConfig cfg) : cfg_(std::move(cfg)) {
    std::tie(origin_, prefix_) = http::split_base_url(cfg_.base_url);
    if (cfg_.max_retries < 0) throw UsageError("max_retries must be >= 0");
  }

  std::string generate(std::span<const ChatMessage> messages) override {
    const auto body = chat_request(cfg_, messages).dump();
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms * (1 << (attempt - 1))));
      httplib::Client cli(origin_);
      const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
      cli.set_connection_timeout(timeout);
      cli.set_read_timeout(timeout);
      cli.set_write_timeout(timeout);
      httplib::Headers headers;
      if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
      auto res = cli.Post(prefix_ + "/v1/chat/completions", headers, body, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) return chat_response_text(res->body);
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      // Client errors other than rate limiting will not improve on retry.
      if (res->status >= 400 && res->status < 500 && res->status != 408 && res->status != 429) break;
    }
    throw TransportError("policy endpoint " + cfg_.base_url + ": " + last_error);
  }

 private:
  RemotePolicyConfig cfg_;
  std::string origin_, prefix_;
};

// Client side of the environment adapter protocol.
class RemoteEnvironment : public Environment {
 public:
  explicit RemoteEnvironment(const std::string& base_url, int timeout_ms = 30000) {
    auto [origin, prefix] = http::split_base_url(base_url);
    prefix_ = prefix;
    client_ = std::make_unique<httplib::Client>(origin);
    const auto t = std::chrono::milliseconds(timeout_ms);
    client_->set_connection_timeout(t);
    client_->set_read_timeout(t);
    client_->set_write_timeout(t);
  }

  Screenshot observe() override {
    auto res = client_->Get(prefix_ + "/observe");
    check(res, "observe");
    auto img = decode_png(std::span(reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size()));
    img.captured_at = res->has_header("X-Captured-At")
                          ? std::stoll(res->get_header_value("X-Captured-At"))
                          : std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now().time_since_epoch())
                                .count();
    return img;
  }

  void apply(const ActionRecord& action) override {
    check(client_->Post(prefix_ + "/act", nlohmann::json{{"action", action.raw_text}}.dump(), "application/json"),
          "act");
  }

  void reset() override { check(client_->Post(prefix_ + "/reset", "", "application/json"), "reset"); }

 private:
  static void check(const httplib::Result& res, const char* what) {
    if (!res) throw TransportError(std::string("environment ") + what + ": " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw TransportError(std::string("environment ") + what + ": HTTP " + std::to_string(res->status));
  }

  std::unique_ptr<httplib::Client> client_;
  std::string prefix_;
};

// Server side of the adapter protocol over any Environment.
class EnvironmentServer {
 public:
  explicit EnvironmentServer(Environment& env) : env_(env) {
    server_.Get("/observe", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      const auto img = env_.observe();
      bounds_ = {img.width, img.height};
      const auto png = encode_png(img);
      res.set_header("X-Captured-At", std::to_string(img.captured_at));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
    server_.Post("/act", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      try {
        const auto line = nlohmann::json::parse(req.body).at("action").get<std::string>();
        env_.apply(ActionRecord::parse(line, bounds_));
        res.set_content(R"({"ok":true})", "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });
    server_.Post("/reset", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      env_.reset();
      res.set_content(R"({"ok":true})", "application/json");
    });
  }

  ~EnvironmentServer() { stop(); }

  // Blocks until stop().
  void listen(const std::string& host, int port) {
    if (!server_.listen(host, port)) throw TransportError("cannot listen on " + host + ":" + std::to_string(port));
  }

  // Binds an ephemeral port and serves on a background thread.
  int start_background(const std::string& host = "127.0.0.1") {
    const int port = server_.bind_to_any_port(host);
    if (port <= 0) throw TransportError("cannot bind " + host);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  Environment& env_;
  httplib::Server server_;
  std::mutex mutex_;
  std::optional<ScreenBounds> bounds_;
  std::thread thread_;
};

}  // namespace uxpipe
