#pragma once

#include <filesystem>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "uxpipe/arena.hpp"
#include "uxpipe/http.hpp"

namespace uxpipe {

// HTTP front of an ArenaService. Site bundles are served from
// <sites_dir>/<site_id>/ under /sites/.
class ArenaServer {
 public:
  ArenaServer(ArenaService& arena, const std::filesystem::path& sites_dir = {}) : arena_(arena) {
    using nlohmann::json;
    const auto send = [](httplib::Response& res, int status, const json& body) {
      res.status = status;
      res.set_content(body.dump(), "application/json; charset=utf-8");
    };

    server_.Post("/api/session", [this, send](const httplib::Request& req, httplib::Response& res) {
      std::string participant;
      if (!req.body.empty()) {
        const auto j = json::parse(req.body, nullptr, false);
        if (j.is_object()) participant = j.value("participant", "");
      }
      try {
        const auto s = arena_.create_session(participant);
        send(res, 200, {{"session_id", s.session_id}, {"pair_ids", s.pair_ids}});
      } catch (const DataError& e) {
        send(res, 409, {{"error", e.what()}});
      }
    });

    server_.Get(R"(/api/pair/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
      const auto view = arena_.pair_view(req.matches[1], req.has_param("session") ? req.get_param_value("session") : "");
      if (!view) return send(res, 404, {{"error", "unknown pair"}});
      send(res, 200,
           {{"pair_id", view->pair_id},
            {"left_url", view->left_url},
            {"right_url", view->right_url},
            {"instructions", arena_instructions()}});
    });

    server_.Post("/api/vote", [this, send](const httplib::Request& req, httplib::Response& res) {
      Vote v;
      try {
        const auto j = json::parse(req.body);
        v.pair_id = j.at("pair_id").get<std::string>();
        v.session_id = j.at("session_id").get<std::string>();
        v.choice = j.at("choice").get<Side>();
        const auto& t = j.at("telemetry");
        for (const char* k : {"duration_ms", "frame_clicks", "element_clicks", "expanded_left", "expanded_right"})
          if (!t.contains(k)) throw DataError(std::string("telemetry field missing: ") + k);
        v.telemetry = t.get<Telemetry>();
      } catch (const std::exception& e) {
        return send(res, 422, {{"error", std::string("malformed vote: ") + e.what()}});
      }
      const auto out = arena_.record_vote(std::move(v));
      if (out.status == 200) return send(res, 200, {{"ok", true}});
      send(res, out.status, {{"error", out.error}});
    });

    server_.Get("/api/stats", [this, send](const httplib::Request&, httplib::Response& res) {
      send(res, 200, to_json(arena_.stats()));
    });

    if (!sites_dir.empty() && !server_.set_mount_point("/sites", sites_dir.string()))
      throw UsageError("sites directory does not exist: " + sites_dir.string());
  }

  ~ArenaServer() { stop(); }

  void listen(const std::string& host, int port) {
    if (!server_.listen(host, port)) throw TransportError("cannot listen on " + host + ":" + std::to_string(port));
  }

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
  ArenaService& arena_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace uxpipe
