#include "streetlens/server.hpp"

#include <charconv>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace streetlens::server {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

class WsSession;

// Subscribers of one session plus the optional traffic series.
struct Hub {
  std::mutex mutex;  // serializes apply + broadcast so every client sees one order
  std::vector<std::weak_ptr<WsSession>> subscribers;
  std::shared_ptr<const traffic::TrafficSeries> traffic;

  void broadcast(const std::vector<Event>& events);
};

std::string_view errc_name(IngestErrc c) {
  switch (c) {
    case IngestErrc::kMalformedXml: return "MalformedXml";
    case IngestErrc::kMissingCoordinateAttribute: return "MissingCoordinateAttribute";
    case IngestErrc::kMalformedWkt: return "MalformedWkt";
    case IngestErrc::kSchemaViolation: return "SchemaViolation";
  }
  return "IngestError";
}

std::string_view errc_name(NetworkErrc c) {
  switch (c) {
    case NetworkErrc::kDuplicateId: return "DuplicateId";
    case NetworkErrc::kDanglingEndpoint: return "DanglingEndpoint";
    case NetworkErrc::kDegeneratePolyline: return "DegeneratePolyline";
    case NetworkErrc::kOutOfRangeCoordinate: return "OutOfRangeCoordinate";
    case NetworkErrc::kEmptyNetwork: return "EmptyNetwork";
  }
  return "NetworkError";
}

std::string_view errc_name(traffic::TrafficErrc c) {
  using traffic::TrafficErrc;
  switch (c) {
    case TrafficErrc::kSchemaViolation: return "SchemaViolation";
    case TrafficErrc::kNonContiguousTimesteps: return "NonContiguousTimesteps";
    case TrafficErrc::kConservationViolation: return "ConservationViolation";
    case TrafficErrc::kTimestepOutOfRange: return "TimestepOutOfRange";
    case TrafficErrc::kUnknownEdge: return "UnknownEdge";
  }
  return "TrafficError";
}

// Error detail for the current exception.
json error_detail(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const SessionError& err) {
    return {{"code", err.code() == SessionErrc::kInvalidPatch ? "InvalidPatch" : "UnknownSession"},
            {"field", err.field()},
            {"message", err.what()}};
  } catch (const IngestError& err) {
    return {{"code", errc_name(err.code())}, {"message", err.what()}};
  } catch (const NetworkError& err) {
    return {{"code", errc_name(err.code())}, {"message", err.what()}};
  } catch (const traffic::TrafficError& err) {
    return {{"code", errc_name(err.code())}, {"message", err.what()}, {"timesteps", err.timesteps()}};
  } catch (const json::exception& err) {
    return {{"code", "BadRequest"}, {"message", err.what()}};
  } catch (const std::exception& err) {
    return {{"code", "Error"}, {"message", err.what()}};
  }
}

std::shared_ptr<const std::string> encode_event(const Event& e) {
  return std::make_shared<const std::string>(to_json(e).dump());
}

}  // namespace

struct Server::Impl {
  ServerConfig config;
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  asio::signal_set signals{ioc};
  SessionRegistry registry;
  std::mutex hubs_mutex;
  std::map<std::string, std::shared_ptr<Hub>, std::less<>> hubs;
  std::vector<std::thread> threads;

  explicit Impl(ServerConfig c) : config(std::move(c)) {}

  std::shared_ptr<Hub> hub(std::string_view id) {
    std::lock_guard lock(hubs_mutex);
    auto it = hubs.find(id);
    if (it == hubs.end()) it = hubs.emplace(std::string(id), std::make_shared<Hub>()).first;
    return it->second;
  }

  void do_accept();
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
  WsSession(tcp::socket socket, Server::Impl& srv, std::shared_ptr<Session> session, std::shared_ptr<Hub> hub)
      : ws_(std::move(socket)), srv_(srv), session_(std::move(session)), hub_(std::move(hub)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    // Subscribed before the handshake completes so no broadcast issued after
    // the client sees the upgrade is missed; frames queue until open.
    {
      std::lock_guard lock(hub_->mutex);
      hub_->subscribers.push_back(weak_from_this());
    }
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

  void send(std::shared_ptr<const std::string> frame) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), frame = std::move(frame)]() mutable {
      self->queue_.push_back(std::move(frame));
      if (self->open_ && self->queue_.size() == 1) self->do_write();
    });
  }

private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    open_ = true;
    if (!queue_.empty()) do_write();
    do_read();
  }

  void do_read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this())); }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle_frame(text);
    do_read();
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      queue_.clear();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) do_write();
  }

  void send_error(json detail) { send(encode_event({EventType::kError, std::move(detail)})); }

  void handle_frame(const std::string& text) {
    try {
      const json frame = json::parse(text);
      if (!frame.is_object()) throw Error("frame must be a JSON object");
      if (auto p = frame.find("patch"); p != frame.end()) {
        const PropertyPatch patch = parse_patch(*p);
        std::lock_guard lock(hub_->mutex);
        hub_->broadcast(session_->apply_patch(patch));
      } else if (auto c = frame.find("click"); c != frame.end()) {
        if (!c->is_object() || !c->contains("x") || !c->contains("y") || !(*c)["x"].is_number() ||
            !(*c)["y"].is_number()) {
          throw Error("click frame needs numeric x and y");
        }
        const geo::ScreenPoint point{(*c)["x"].get<double>(), (*c)["y"].get<double>()};
        const auto viewport = viewport_from_json(c->value("viewport", json()));
        std::optional<std::uint64_t> version;
        if (auto v = c->find("version"); v != c->end() && v->is_number_unsigned()) version = v->get<std::uint64_t>();
        std::lock_guard lock(hub_->mutex);
        auto events = session_->handle_click(point, viewport, version);
        if (!events.empty() && events.front().type == EventType::kError) {
          send(encode_event(events.front()));
        } else {
          hub_->broadcast(events);
        }
      } else if (auto t = frame.find("time"); t != frame.end()) {
        if (!hub_->traffic) throw Error("session has no traffic series attached");
        if (!t->is_number_integer()) throw Error("time must be an integer timestep");
        const auto mode = traffic::marker_mode_from_string(frame.value("mode", std::string("busiest_edges")));
        const auto k = frame.value("k", std::size_t{10});
        const auto step = t->get<std::int64_t>();
        std::lock_guard lock(hub_->mutex);
        const auto patch = traffic::timestep_patch(*hub_->traffic, *session_->snapshot()->network, step, mode, k);
        auto events = session_->apply_patch(patch);
        events.push_back({EventType::kTimestepView, traffic::timestep_view(*hub_->traffic, step, mode, k)});
        hub_->broadcast(events);
      } else {
        throw Error("unknown frame; expected patch, click or time");
      }
    } catch (...) {
      auto detail = error_detail(std::current_exception());
      spdlog::debug("ws frame rejected: {}", detail.dump());
      send_error(std::move(detail));
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  Server::Impl& srv_;
  std::shared_ptr<Session> session_;
  std::shared_ptr<Hub> hub_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool open_ = false;
};

}  // namespace

void Hub::broadcast(const std::vector<Event>& events) {
  std::vector<std::shared_ptr<WsSession>> live;
  for (auto it = subscribers.begin(); it != subscribers.end();) {
    if (auto s = it->lock()) {
      live.push_back(std::move(s));
      ++it;
    } else {
      it = subscribers.erase(it);
    }
  }
  for (const auto& e : events) {
    auto frame = encode_event(e);
    for (const auto& s : live) s->send(frame);
  }
}

// ---- HTTP -------------------------------------------------------------------

std::map<std::string, std::string> parse_multipart(std::string_view body, std::string_view content_type) {
  static const std::regex kBoundary(R"(boundary=(?:"([^"]+)\"|([^;\s]+)))", std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(content_type.begin(), content_type.end(), m, kBoundary)) {
    throw Error("multipart content type lacks a boundary");
  }
  const std::string delimiter = "--" + (m[1].matched ? m[1].str() : m[2].str());

  std::map<std::string, std::string> fields;
  std::size_t pos = body.find(delimiter);
  if (pos == std::string_view::npos) throw Error("multipart body lacks the boundary delimiter");
  for (;;) {
    pos += delimiter.size();
    if (body.substr(pos, 2) == "--") break;
    if (body.substr(pos, 2) == "\r\n") pos += 2;
    const auto header_end = body.find("\r\n\r\n", pos);
    if (header_end == std::string_view::npos) throw Error("malformed multipart part headers");
    const std::string headers(body.substr(pos, header_end - pos));
    const auto content_start = header_end + 4;
    const auto next = body.find("\r\n" + delimiter, content_start);
    if (next == std::string_view::npos) throw Error("unterminated multipart part");

    static const std::regex kName(R"(content-disposition:[^\r\n]*\bname="([^"]*)\")", std::regex::icase);
    std::smatch nm;
    if (std::regex_search(headers, nm, kName)) {
      fields[nm[1].str()] = std::string(body.substr(content_start, next - content_start));
    }
    pos = next + 2;
  }
  return fields;
}

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

Response make_response(const Request& req, http::status status, std::string body, std::string_view content_type) {
  Response res{status, req.version()};
  res.set(http::field::server, "streetlens");
  res.set(http::field::content_type, beast::string_view(content_type.data(), content_type.size()));
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response json_response(const Request& req, http::status status, const json& body) {
  return make_response(req, status, body.dump(), "application/json");
}

Response error_response(const Request& req, http::status status, json detail) {
  return json_response(req, status, {{"error", std::move(detail)}});
}

std::map<std::string, std::string, std::less<>> parse_query(std::string_view q) {
  std::map<std::string, std::string, std::less<>> out;
  while (!q.empty()) {
    const auto amp = q.find('&');
    const auto pair = q.substr(0, amp);
    const auto eq = pair.find('=');
    out[std::string(pair.substr(0, eq))] = eq == std::string_view::npos ? "" : std::string(pair.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    q.remove_prefix(amp + 1);
  }
  return out;
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto slash = path.find('/');
    parts.push_back(path.substr(0, slash));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return parts;
}

std::string read_fixture(const std::string& dir, std::string_view name) {
  static const std::regex kSafe(R"([A-Za-z0-9_][A-Za-z0-9._-]*)");
  if (dir.empty()) throw Error("server runs without a fixtures directory");
  if (!std::regex_match(std::string(name), kSafe)) throw Error(fmt::format("invalid fixture name '{}'", name));
  for (const char* ext : {"", ".graphml", ".json"}) {
    const auto path = std::filesystem::path(dir) / (std::string(name) + ext);
    if (!std::filesystem::is_regular_file(path)) continue;
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  throw Error(fmt::format("unknown fixture '{}'", name));
}

Response create_session(Server::Impl& srv, const Request& req) {
  std::string source;
  json patch;
  const std::string content_type(req[http::field::content_type]);
  if (content_type.rfind("multipart/form-data", 0) == 0) {
    auto fields = parse_multipart(req.body(), content_type);
    if (auto it = fields.find("network"); it != fields.end()) source = std::move(it->second);
    else if (auto f = fields.find("fixture"); f != fields.end()) source = read_fixture(srv.config.fixtures_dir, f->second);
    else throw Error("multipart body needs a 'network' file or a 'fixture' name");
    if (auto it = fields.find("patch"); it != fields.end() && !it->second.empty()) patch = json::parse(it->second);
  } else if (content_type.rfind("application/json", 0) == 0) {
    const json body = json::parse(req.body());
    if (!body.is_object()) throw Error("request body must be a JSON object");
    if (auto it = body.find("network"); it != body.end()) source = it->is_string() ? it->get<std::string>() : it->dump();
    else if (auto f = body.find("fixture"); f != body.end() && f->is_string()) source = read_fixture(srv.config.fixtures_dir, f->get<std::string>());
    else throw Error("JSON body needs 'network' or 'fixture'");
    patch = body.value("patch", json());
  } else {
    source = req.body();
  }

  IngestReport report;
  auto records = load_network_source(source, &report);
  const PropertyPatch initial = patch.is_null() ? PropertyPatch{} : parse_patch(patch);
  auto session = std::make_shared<Session>(std::move(records), initial);
  const auto snap = session->snapshot();
  json warnings = report.warnings;
  for (const auto& w : snap->network->warnings()) warnings.push_back(w);
  const auto id = srv.registry.add(session);
  spdlog::info("session {} created: {} nodes, {} edges, {} markers", id, snap->network->nodes().size(),
               snap->network->edges().size(), snap->network->markers().size());
  return json_response(req, http::status::created,
                       {{"session_id", id},
                        {"bundle_version", snap->version()},
                        {"nodes", snap->network->nodes().size()},
                        {"edges", snap->network->edges().size()},
                        {"markers", snap->network->markers().size()},
                        {"warnings", std::move(warnings)}});
}

Response handle_request(Server::Impl& srv, const Request& req) {
  const std::string_view target(req.target().data(), req.target().size());
  const auto qmark = target.find('?');
  const auto path = split_path(target.substr(0, qmark));
  const auto query = parse_query(qmark == std::string_view::npos ? std::string_view{} : target.substr(qmark + 1));
  const auto method = req.method();

  try {
    if (path.size() == 1 && path[0] == "healthz") {
      if (method != http::verb::get) return error_response(req, http::status::method_not_allowed, {{"code", "MethodNotAllowed"}});
      return json_response(req, http::status::ok, {{"status", "ok"}, {"sessions", srv.registry.ids().size()}});
    }
    if (path.size() == 1 && path[0] == "sessions") {
      if (method == http::verb::post) return create_session(srv, req);
      if (method == http::verb::get) return json_response(req, http::status::ok, {{"sessions", srv.registry.ids()}});
      return error_response(req, http::status::method_not_allowed, {{"code", "MethodNotAllowed"}});
    }
    if (path.size() == 3 && path[0] == "sessions") {
      if (method != http::verb::get) return error_response(req, http::status::method_not_allowed, {{"code", "MethodNotAllowed"}});
      const std::string id(path[1]);
      if (path[2] == "bundle") {
        std::uint64_t since = 0;
        if (auto it = query.find("since"); it != query.end()) {
          const auto& s = it->second;
          auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), since);
          if (ec != std::errc() || ptr != s.data() + s.size()) {
            return error_response(req, http::status::bad_request, {{"code", "BadRequest"}, {"message", "since must be a non-negative integer"}});
          }
        }
        auto snap = srv.registry.get(id)->snapshot();
        if (snap->version() <= since) {
          Response res{http::status::not_modified, req.version()};
          res.set(http::field::server, "streetlens");
          res.set(http::field::access_control_allow_origin, "*");
          res.set("X-Bundle-Version", std::to_string(snap->version()));
          res.keep_alive(req.keep_alive());
          return res;
        }
        const auto& bytes = *snap->encoded_bundle;
        auto res = make_response(req, http::status::ok,
                                 std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                                 "application/octet-stream");
        res.set("X-Bundle-Version", std::to_string(snap->version()));
        return res;
      }
      if (path[2] == "state") return json_response(req, http::status::ok, srv.registry.get(id)->state_json());
      if (path[2] == "totals") {
        srv.registry.get(id);
        auto hub = srv.hub(id);
        if (!hub->traffic) return error_response(req, http::status::not_found, {{"code", "NoTraffic"}, {"message", "session has no traffic series"}});
        return json_response(req, http::status::ok, traffic::totals_json(*hub->traffic));
      }
    }
    return error_response(req, http::status::not_found, {{"code", "NotFound"}, {"message", std::string(target)}});
  } catch (const SessionError& e) {
    const auto status = e.code() == SessionErrc::kUnknownSession ? http::status::not_found : http::status::bad_request;
    return error_response(req, status, error_detail(std::current_exception()));
  } catch (...) {
    auto detail = error_detail(std::current_exception());
    spdlog::warn("{} {} rejected: {}", std::string(req.method_string()), std::string(target), detail.dump());
    return error_response(req, http::status::bad_request, std::move(detail));
  }
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
  HttpSession(tcp::socket socket, Server::Impl& srv) : stream_(std::move(socket)), srv_(srv) {}

  void run() { asio::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this())); }

private:
  void do_read() {
    parser_.emplace();
    parser_->body_limit(srv_.config.max_body_bytes);
    stream_.expires_after(std::chrono::seconds(120));
    http::async_read(stream_, buffer_, *parser_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) return close();
    if (ec == http::error::body_limit) {
      Request req;
      req.version(11);
      return send(error_response(req, http::status::payload_too_large, {{"code", "PayloadTooLarge"}}), true);
    }
    if (ec) return;
    Request req = parser_->release();

    if (websocket::is_upgrade(req)) {
      const std::string_view target(req.target().data(), req.target().size());
      const auto path = split_path(target.substr(0, target.find('?')));
      if (path.size() == 3 && path[0] == "sessions" && path[2] == "events") {
        const std::string id(path[1]);
        try {
          auto session = srv_.registry.get(id);
          stream_.expires_never();
          std::make_shared<WsSession>(stream_.release_socket(), srv_, std::move(session), srv_.hub(id))->run(std::move(req));
          return;
        } catch (const SessionError&) {
          return send(error_response(req, http::status::not_found, error_detail(std::current_exception())), true);
        }
      }
      return send(error_response(req, http::status::not_found, {{"code", "NotFound"}}), true);
    }
    spdlog::debug("{} {}", std::string(req.method_string()), std::string(req.target()));
    send(handle_request(srv_, req), false);
  }

  void send(Response res, bool force_close) {
    auto sp = std::make_shared<Response>(std::move(res));
    const bool close_after = force_close || sp->need_eof();
    http::async_write(stream_, *sp, [self = shared_from_this(), sp, close_after](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (close_after) return self->close();
      self->do_read();
    });
  }

  void close() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  Server::Impl& srv_;
  std::optional<http::request_parser<http::string_body>> parser_;
};

}  // namespace

void Server::Impl::do_accept() {
  acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (!ec) std::make_shared<HttpSession>(std::move(socket), *this)->run();
    if (acceptor.is_open()) do_accept();
  });
}

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Server::~Server() {
  stop();
  for (auto& t : impl_->threads) {
    if (t.joinable()) t.join();
  }
}

std::uint16_t Server::start() {
  auto& i = *impl_;
  const tcp::endpoint endpoint(asio::ip::make_address(i.config.address), i.config.port);
  i.acceptor.open(endpoint.protocol());
  i.acceptor.set_option(asio::socket_base::reuse_address(true));
  i.acceptor.bind(endpoint);
  i.acceptor.listen(asio::socket_base::max_listen_connections);
  i.do_accept();
  const auto port = i.acceptor.local_endpoint().port();
  for (int t = 0; t < std::max(1, i.config.threads); ++t) i.threads.emplace_back([&i] { i.ioc.run(); });
  spdlog::info("listening on {}:{}", i.config.address, port);
  return port;
}

void Server::wait() {
  auto& i = *impl_;
  i.signals.add(SIGINT);
  i.signals.add(SIGTERM);
  i.signals.async_wait([this](beast::error_code ec, int sig) {
    if (!ec) {
      spdlog::info("signal {} received, shutting down", sig);
      stop();
    }
  });
  for (auto& t : i.threads) {
    if (t.joinable()) t.join();
  }
}

void Server::stop() {
  auto& i = *impl_;
  asio::post(i.ioc, [&i] {
    beast::error_code ec;
    i.acceptor.close(ec);
    i.signals.cancel(ec);
  });
  i.ioc.stop();
}

SessionRegistry& Server::registry() { return impl_->registry; }

void Server::attach_traffic(const std::string& session_id, std::shared_ptr<const traffic::TrafficSeries> series) {
  impl_->registry.get(session_id);
  auto hub = impl_->hub(session_id);
  std::lock_guard lock(hub->mutex);
  hub->traffic = std::move(series);
}

}  // namespace streetlens::server
