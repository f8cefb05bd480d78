#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "streetlens/session.hpp"
#include "streetlens/traffic.hpp"

namespace streetlens::server {

struct ServerConfig {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks an ephemeral port
  int threads = 2;
  std::string fixtures_dir;  // resolves the "fixture" form field; empty disables it
  std::size_t max_body_bytes = 512u << 20;
};

// HTTP + WebSocket front end over a SessionRegistry.
//
//   POST /sessions                    multipart (network file | fixture name, patch) or JSON
//   GET  /sessions                    {"sessions": [ids]}
//   GET  /sessions/{id}/bundle?since=N  octet-stream, or 304 when not newer
//   GET  /sessions/{id}/state         full property document
//   GET  /sessions/{id}/totals        traffic totals series (demo sessions)
//   GET  /healthz
//   WS   /sessions/{id}/events        {"patch"}, {"click"}, {"time","mode"} frames in;
//                                     {"event","payload"} frames out
class Server {
public:
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts the worker threads; returns the bound port.
  std::uint16_t start();
  // Blocks until stop() is called or a termination signal arrives.
  void wait();
  void stop();

  SessionRegistry& registry();
  // Enables {"time", "mode"} frames on a session.
  void attach_traffic(const std::string& session_id, std::shared_ptr<const traffic::TrafficSeries> series);

  struct Impl;

private:
  std::unique_ptr<Impl> impl_;
};

// Splits a multipart/form-data body. Returns field name -> content.
std::map<std::string, std::string> parse_multipart(std::string_view body, std::string_view content_type);

}  // namespace streetlens::server
