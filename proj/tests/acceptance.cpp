// Headless acceptance run: one PASS/FAIL line per primary criterion.

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "generators.hpp"
#include "net_client.hpp"
#include "oracles.hpp"
#include "streetlens/bench.hpp"
#include "streetlens/bundle.hpp"
#include "streetlens/ingest.hpp"
#include "streetlens/server.hpp"
#include "streetlens/session.hpp"
#include "streetlens/traffic.hpp"

using namespace streetlens;
using nlohmann::json;

namespace {

// Tolerances and budgets.
constexpr double kIngestSeconds = 10.0;
constexpr std::size_t kFixtureNodes = 20385;
constexpr std::size_t kFixtureEdges = 49137;
constexpr int kProjectionPoints = 10000;
constexpr double kRoundTripDeg = 1e-9;
constexpr double kCornerTol = 1e-12;
constexpr double kProjectionSeconds = 1.0;
constexpr int kClicks = 1000;
constexpr std::size_t kHitGridNodes = 2601;  // 51 x 51 lattice, 5,100 edges
constexpr double kHitDistanceTol = 1e-9;
constexpr double kHitSeconds = 30.0;
constexpr int kStyleVectors = 500;
constexpr int kBundles = 1000;
constexpr std::size_t kThroughputNodes = 20164;  // 142 x 142 lattice, 40,044 edges
constexpr double kFrameCpuBudgetMs = 2.0 * 36.77;
constexpr double kRegenerateBudgetMs = 500.0;
constexpr double kThroughputSeconds = 120.0;
constexpr std::int64_t kTrafficSteps = 100;
constexpr std::size_t kTrafficVehicles = 500;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& body) {
  Outcome out;
  const auto t0 = Clock::now();
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = fmt::format("exception: {}", e.what());
  }
  if (!out.pass) ++failures;
  fmt::print("{} {} ({:.2f} s): {}\n", out.pass ? "PASS" : "FAIL", name, seconds_since(t0), out.detail);
  std::fflush(stdout);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome ingest_fidelity() {
  Outcome o;
  const std::string dir = STREETLENS_FIXTURE_DIR;
  const json manifest = json::parse(slurp(dir + "/queretaro.manifest.json"));
  const auto t0 = Clock::now();
  std::ifstream in(dir + "/queretaro.graphml", std::ios::binary);
  auto records = load_osmnx_graphml(in);
  const auto net = build_network(std::move(records.nodes), std::move(records.edges));
  const double secs = seconds_since(t0);
  std::size_t snaps = 0, other = 0;
  auto classify = [&](const std::string& w) { (w.rfind("endpoint-snap", 0) == 0 ? snaps : other)++; };
  for (const auto& w : records.report.warnings) classify(w);
  for (const auto& w : net.warnings()) classify(w);
  o.require(manifest.at("nodes") == net.nodes().size(), "node count differs from manifest");
  o.require(manifest.at("edges") == net.edges().size(), "edge count differs from manifest");
  o.require(net.nodes().size() == kFixtureNodes && net.edges().size() == kFixtureEdges, "fixture is not the pinned one");
  o.require(other == 0, fmt::format("{} non-snap warnings", other));
  o.require(secs < kIngestSeconds, "too slow");
  o.detail = fmt::format("{} nodes, {} edges (manifest {}/{}), {} snap warnings, {} other, load {:.2f} s{}{}",
                         net.nodes().size(), net.edges().size(), manifest.at("nodes").get<std::size_t>(),
                         manifest.at("edges").get<std::size_t>(), snaps, other, secs, o.detail.empty() ? "" : "; ",
                         o.detail);
  return o;
}

Outcome projection() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lat(-85.0511287798, 85.0511287798), lon(-180.0, 180.0);
  double worst = 0.0, worst_oracle = 0.0;
  for (int i = 0; i < kProjectionPoints; ++i) {
    const LatLon p{lat(rng), lon(rng)};
    const auto m = geo::project(p);
    const auto back = geo::unproject(m);
    worst = std::max({worst, std::abs(back.lat - p.lat), std::abs(back.lon - p.lon)});
    const auto ref = oracle::project(p.lat, p.lon);
    worst_oracle = std::max({worst_oracle, std::abs(ref.x - m.x), std::abs(ref.y - m.y)});
  }
  double corner = 0.0;
  for (double la : {85.0511287798, -85.0511287798}) {
    for (double lo : {-180.0, 180.0}) {
      const auto m = geo::project(la, lo);
      corner = std::max({corner, std::abs(m.x - (lo > 0 ? 1.0 : 0.0)), std::abs(m.y - (la > 0 ? 0.0 : 1.0))});
    }
  }
  const double secs = seconds_since(t0);
  o.require(worst < kRoundTripDeg, "round-trip error too large");
  o.require(worst_oracle < kCornerTol, "disagrees with the long double oracle");
  o.require(corner < kCornerTol, "corners off");
  o.require(secs < kProjectionSeconds, "too slow");
  o.detail = fmt::format("max round-trip {:.3g} deg, max |oracle delta| {:.3g}, max corner {:.3g}{}{}", worst,
                         worst_oracle, corner, o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

Outcome hit_test() {
  Outcome o;
  const auto t0 = Clock::now();
  auto net = std::make_shared<const StreetNetwork>(bench::synthesize_grid(kHitGridNodes));
  NetworkStyleOptions opts;
  opts.edges.width_method = ScaleMethod::kScale;
  opts.edges.max_width_px = 24;
  opts.nodes.size_method = ScaleMethod::kDefault;
  const auto styles = resolve_styles(*net, opts);
  const HitIndex index(net, styles, {});
  std::mt19937_64 rng(99);
  const auto box = *net->bbox();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int matches = 0, edges = 0, nodes = 0, misses = 0;
  double worst = 0.0;
  for (int i = 0; i < kClicks; ++i) {
    const double zoom = 13.0 + 5.0 * u(rng);
    const LatLon center{box.min_lat + u(rng) * (box.max_lat - box.min_lat), box.min_lon + u(rng) * (box.max_lon - box.min_lon)};
    const geo::Viewport v{center, zoom, 1024, 768};
    geo::ScreenPoint click{u(rng) * v.width_px, u(rng) * v.height_px};
    if (i % 2 == 1) {
      // Half the clicks land near geometry so hits of every kind occur.
      const auto& e = net->edges()[rng() % net->edges().size()];
      const double f = u(rng);
      const LatLon g{e.coordinates[0].lat + f * (e.coordinates[1].lat - e.coordinates[0].lat),
                     e.coordinates[0].lon + f * (e.coordinates[1].lon - e.coordinates[0].lon)};
      const auto s = geo::to_screen(geo::project(g), v);
      click = {s.x + 30 * (u(rng) - 0.5), s.y + 30 * (u(rng) - 0.5)};
    }
    const auto want = oracle::brute_force_hit(*net, styles, click, v);
    const auto got = index.query(click, v);
    bool same = got.kind == want.kind;
    if (same && want.kind != HitKind::kNone) {
      same = got.id == want.id && std::abs(got.distance_px - want.distance_px) <= kHitDistanceTol;
      worst = std::max(worst, std::abs(got.distance_px - want.distance_px));
    }
    matches += same;
    (want.kind == HitKind::kEdge ? edges : want.kind == HitKind::kNode ? nodes : misses)++;
  }
  const double secs = seconds_since(t0);
  o.require(matches == kClicks, fmt::format("{} mismatches", kClicks - matches));
  o.require(net->edges().size() >= 5000, "grid too small");
  o.require(secs < kHitSeconds, "too slow");
  o.detail = fmt::format("{}/{} agree on a {}-edge grid ({} edge, {} node, {} empty), max distance delta {:.3g} px{}{}",
                         matches, kClicks, net->edges().size(), edges, nodes, misses, worst,
                         o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

StreetNetwork weighted_path(const std::vector<double>& weights) {
  std::vector<NodeRecord> nodes;
  std::vector<EdgeRecord> edges;
  for (std::size_t i = 0; i <= weights.size(); ++i) nodes.push_back({std::to_string(i), 20.0, -100.0 + 0.001 * i, {}});
  for (std::size_t i = 0; i < weights.size(); ++i) {
    edges.push_back({"e" + std::to_string(i), nodes[i].id, nodes[i + 1].id,
                     {{nodes[i].lat, nodes[i].lon}, {nodes[i + 1].lat, nodes[i + 1].lon}}, {{"weight", weights[i]}}});
  }
  return build_network(std::move(nodes), std::move(edges));
}

Outcome style_scaling() {
  Outcome o;
  auto opts = default_options(ElementKind::kEdge);
  opts.width_method = ScaleMethod::kScale;
  opts.min_width_px = 1;
  opts.max_width_px = 10;
  const auto widths = resolve_edge_styles(weighted_path({10, 20, 40}), opts).width_px;
  o.require(widths == std::vector<double>{1, 4, 10}, fmt::format("widths [{}]", fmt::join(widths, ", ")));

  const std::vector<std::optional<double>> flat(7, 3.25);
  const auto t = normalize_weights(flat);
  o.require(std::all_of(t.begin(), t.end(), [](double x) { return x == 0.5; }), "degenerate case is not 0.5");
  const auto flat_widths = resolve_edge_styles(weighted_path({5, 5, 5}), opts).width_px;
  o.require(std::all_of(flat_widths.begin(), flat_widths.end(), [](double w) { return w == 5.5; }),
            "degenerate widths are not the midpoint");

  std::mt19937_64 rng(500);
  int ok = 0;
  for (int i = 0; i < kStyleVectors; ++i) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<double> w;
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    for (std::size_t k = 0; k < n; ++k) w.push_back(d(rng));
    auto o2 = opts;
    o2.min_width_px = 0.5 + (rng() % 5);
    o2.max_width_px = o2.min_width_px + 1 + (rng() % 30);
    const auto got = resolve_edge_styles(weighted_path(w), o2).width_px;
    const auto arg = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    const double want = n == 1 ? (o2.min_width_px + o2.max_width_px) / 2 : o2.max_width_px;
    const auto ref = oracle::scale_channel(std::vector<std::optional<double>>(w.begin(), w.end()), o2.min_width_px, o2.max_width_px);
    bool good = got[arg] == want && got.size() == ref.size();
    for (std::size_t k = 0; good && k < n; ++k) good = std::abs(got[k] - ref[k]) < 1e-12;
    ok += good;
  }
  o.require(ok == kStyleVectors, fmt::format("{} random vectors failed", kStyleVectors - ok));
  o.detail = fmt::format("[10,20,40] -> [{}], equal weights -> t=0.5, argmax gets max on {}/{} vectors{}{}",
                         fmt::join(widths, ", "), ok, kStyleVectors, o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

Outcome bundle_round_trip() {
  Outcome o;
  std::mt19937_64 rng(1000);
  int exact = 0;
  for (int i = 0; i < kBundles; ++i) {
    const auto b = generators::random_bundle(rng);
    const auto bytes = encode_bundle(b);
    const auto back = decode_bundle(bytes);
    exact += back == b && encode_bundle(back) == bytes;
  }
  const auto empty = encode_bundle(RenderBundle{});
  o.require(exact == kBundles, fmt::format("{} bundles differ", kBundles - exact));
  o.require(empty.size() == kBundleHeaderSize, "empty bundle is not header-only");
  o.detail = fmt::format("{}/{} bit-exact, empty bundle {} bytes (header {}){}{}", exact, kBundles, empty.size(),
                         kBundleHeaderSize, o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

Outcome throughput() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto net = bench::synthesize_grid(kThroughputNodes);
  const geo::Viewport v{net.bbox()->center(), 16, 1280, 720};
  const auto report = bench::run_pan_benchmark(net, v, bench::BenchConfig{});
  double regen_worst = 0.0;
  std::size_t bytes = 0;
  for (int i = 0; i < 3; ++i) {
    const auto r0 = Clock::now();
    bytes = bench::regenerate_bundle(net, NetworkStyleOptions{}, v.zoom);
    regen_worst = std::max(regen_worst, seconds_since(r0) * 1e3);
  }
  const double secs = seconds_since(t0);
  o.require(report.average.cpu_mean_ms <= kFrameCpuBudgetMs, "frame budget exceeded");
  o.require(regen_worst <= kRegenerateBudgetMs, "regeneration budget exceeded");
  o.require(secs < kThroughputSeconds, "too slow");
  o.detail = fmt::format(
      "{} nodes / {} edges, {} frames x {} reps transform_only cpu mean {:.3f} ms (budget {:.2f}), "
      "full regenerate+encode worst {:.1f} ms for {} bytes (budget {:.0f}){}{}",
      report.node_count, report.edge_count, report.config.frames, report.config.reps, report.average.cpu_mean_ms,
      kFrameCpuBudgetMs, regen_worst, bytes, kRegenerateBudgetMs, o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

std::string small_network() {
  const LatLon a{20.59, -100.40}, b{20.59, -100.38}, c{20.60, -100.38};
  MarkerRecord m;
  m.id = "m1";
  m.lat = 20.595;
  m.lon = -100.39;
  m.popup_text = "Jardin Zenea";
  return emit_network_json(build_network({{"a", a.lat, a.lon, {}}, {"b", b.lat, b.lon, {}}, {"c", c.lat, c.lon, {}}},
                                         {{"A", "a", "b", {a, b}, {{"weight", 1.0}}},
                                          {"B", "b", "c", {b, c}, {{"weight", 2.0}}},
                                          {"C", "c", "a", {c, a}, {{"weight", 3.0}}}},
                                         {m}));
}

// Reads frames until the answer to a patch: its property_changed or an error.
json patch_answer(client::WsClient& ws) {
  for (;;) {
    auto f = ws.read();
    if (f.at("event") == "error" || f.at("event") == "property_changed") return f;
  }
}

Outcome server_conformance() {
  Outcome o;
  server::ServerConfig cfg;
  cfg.port = 0;
  server::Server srv(cfg);
  const auto port = srv.start();
  const auto created = client::post_json(port, "/sessions", {{"network", small_network()}});
  o.require(created.status == 201, "session creation failed");
  const auto id = created.json().at("session_id").get<std::string>();
  const std::string base = "/sessions/" + id;
  auto ws_owner = std::make_unique<client::WsClient>(port, base + "/events");
  auto& ws = *ws_owner;

  const auto state0 = client::get(port, base + "/state").json();
  const std::map<std::string, json> samples = {
      {"nodes_data", state0.at("nodes_data")},
      {"edges_data", state0.at("edges_data")},
      {"markers_data", state0.at("markers_data")},
      {"node_options", {{"size_method", "SCALE"}}},
      {"edge_options", {{"width_method", "SCALE"}}},
      {"marker_options", {{"default_size_px", 30}}},
      {"show_nodes", false},
      {"show_edges", true},
      {"show_arrows", false},
      {"show_markers", true},
      {"map_center", {20.6, -100.4}},
      {"map_zoom", 13},
      {"map_min_zoom", 4},
      {"map_max_zoom", 18},
      {"map_style", {{"height", "480px"}}},
      {"tile_layer_url", "https://{s}.tiles.example/{z}/{x}/{y}.png"},
      {"tile_layer_subdomains", {"a", "b"}},
      {"tile_layer_attribution", "example attribution"},
      {"tile_layer_opacity", 0.4},
      {"clicked_node", json::object()},
      {"clicked_edge", json::object()},
      {"clicked_marker", json::object()},
  };
  int conforming = 0;
  for (const auto& info : property_catalog()) {
    const std::string name(info.name);
    auto it = samples.find(name);
    if (it == samples.end()) {
      o.require(false, "no sample for " + name);
      continue;
    }
    ws.send({{"patch", {{name, it->second}}}});
    const auto answer = patch_answer(ws);
    bool ok = false;
    if (info.access == PropertyAccess::kServerWritten) {
      ok = answer.at("event") == "error" && answer.at("payload").at("code") == "InvalidPatch" &&
           answer.at("payload").at("field") == name;
    } else {
      ok = answer.at("event") == "property_changed" && answer.at("payload").at("property") == name;
      const auto st = client::get(port, base + "/state").json();
      if (info.category != "data" && info.category != "options") ok = ok && st.at(name) == it->second;
    }
    if (!ok) o.require(false, "property " + name + " does not conform");
    conforming += ok;
  }

  // map_center-only patches keep the bundle version.
  const auto v_before = client::get(port, base + "/bundle").headers.at("X-Bundle-Version");
  ws.send({{"patch", {{"map_center", {20.59, -100.39}}}}});
  patch_answer(ws);
  const auto v_after = client::get(port, base + "/bundle").headers.at("X-Bundle-Version");
  o.require(v_before == v_after, "map_center patch changed the bundle version");

  // InvalidPatch leaves state and bundle bit-identical.
  const auto state_before = client::get(port, base + "/state").body;
  const auto bundle_before = client::get(port, base + "/bundle").body;
  int invalid_ok = 0;
  for (const json& bad : {json{{"show_edges", false}, {"map_zoom", 99}}, json{{"edge_options", {{"size_method", "SCALE"}}}},
                          json{{"tile_layer_opacity", 7}}, json{{"clicked_edge", nullptr}}, json{{"nope", 1}}}) {
    ws.send({{"patch", bad}});
    const auto answer = patch_answer(ws);
    invalid_ok += answer.at("event") == "error" && answer.at("payload").at("code") == "InvalidPatch" &&
                  client::get(port, base + "/state").body == state_before &&
                  client::get(port, base + "/bundle").body == bundle_before;
  }
  o.require(invalid_ok == 5, "invalid patch altered state");

  // show_edges false empties the edge section and disables edge hits.
  const LatLon mid{20.59, -100.39};
  const geo::Viewport v{mid, 16, 800, 600};
  const auto s = geo::to_screen(geo::project(mid), v);
  const json click = {{"click", {{"x", s.x}, {"y", s.y}, {"viewport", {{"center", {mid.lat, mid.lon}}, {"zoom", 16}, {"width", 800}, {"height", 600}}}}}};
  ws.send(click);
  const auto before = ws.read();
  o.require(before.at("event") == "clicked_edge", "edge not hittable while shown");
  ws.send({{"patch", {{"show_edges", false}}}});
  patch_answer(ws);
  const auto updated = ws.read_until("buffers_updated");
  const auto raw = client::get(port, base + "/bundle");
  std::vector<std::byte> bytes(raw.body.size());
  std::memcpy(bytes.data(), raw.body.data(), bytes.size());
  const auto bundle = decode_bundle(bytes);
  oracle::BundleReader reader(bytes);
  reader.read_string(4);
  reader.read<std::uint16_t>();
  reader.read<std::uint16_t>();
  reader.read<std::uint64_t>();
  reader.read<double>();
  const auto header_edge_vertices = reader.read<std::uint32_t>();
  const auto header_edge_indices = reader.read<std::uint32_t>();
  o.require(bundle.edge_mesh.vertex_count() == 0 && header_edge_vertices == 0 && header_edge_indices == 0,
            "edge section not empty");
  o.require(updated.at("payload").at("layers") == json{"edges", "arrows"}, "unexpected layers");
  ws.send(click);
  ws.send({{"patch", {{"map_zoom", 12}}}});
  const auto after = ws.read();
  o.require(after.at("event") == "property_changed", "hidden edge still hittable");

  ws_owner.reset();
  srv.stop();
  o.detail = fmt::format("{}/{} catalog properties conform, map_center version {} -> {}, {}/5 invalid patches inert, "
                         "hidden edge click -> {}{}{}",
                         conforming, property_catalog().size(), v_before, v_after, invalid_ok,
                         after.at("event").get<std::string>(), o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

Outcome traffic_demo() {
  Outcome o;
  const auto net = bench::synthesize_grid(2500);
  const auto csv = traffic::synthesize_fcd(net, kTrafficSteps, kTrafficVehicles, 3500);

  // Conservation checked straight from the generated files.
  std::vector<std::int64_t> count_sum(kTrafficSteps), vehicle_rows(kTrafficSteps), active(kTrafficSteps, -1);
  std::vector<std::map<std::string, std::int64_t>> counts(kTrafficSteps);
  std::vector<std::vector<std::pair<double, std::string>>> speeds(kTrafficSteps);
  for (const auto& r : csv_rows(csv.edge_counts)) {
    const auto t = std::stoll(r.at(0));
    count_sum.at(t) += std::stoll(r.at(2));
    counts.at(t)[r.at(1)] = std::stoll(r.at(2));
  }
  for (const auto& r : csv_rows(csv.vehicles)) {
    const auto t = std::stoll(r.at(0));
    ++vehicle_rows.at(t);
    speeds.at(t).push_back({std::stod(r.at(2)), r.at(1)});
  }
  for (const auto& r : csv_rows(csv.totals)) active.at(std::stoll(r.at(0))) = std::stoll(r.at(1));
  int conserved = 0;
  for (std::int64_t t = 0; t < kTrafficSteps; ++t) conserved += count_sum[t] == active[t] && vehicle_rows[t] == active[t];
  o.require(conserved == kTrafficSteps, fmt::format("{} timesteps violate conservation", kTrafficSteps - conserved));

  std::istringstream ec(csv.edge_counts), ve(csv.vehicles), to(csv.totals);
  auto series = std::make_shared<const traffic::TrafficSeries>(traffic::load_fcd_csv(ec, ve, to));
  o.require(series->size() == static_cast<std::size_t>(kTrafficSteps), "series length");

  int topk_ok = 0;
  for (std::int64_t t = 0; t < kTrafficSteps; ++t) {
    std::vector<std::pair<std::int64_t, std::string>> e;
    for (const auto& [id, n] : counts[t]) {
      if (n > 0) e.push_back({-n, id});
    }
    std::sort(e.begin(), e.end());
    auto s = speeds[t];
    std::sort(s.begin(), s.end());
    const auto got_e = traffic::top_k_edges(*series, t, 10);
    const auto got_v = traffic::top_k_slowest(*series, t, 10);
    bool ok = got_e.size() == std::min<std::size_t>(10, e.size()) && got_v.size() == std::min<std::size_t>(10, s.size());
    for (std::size_t i = 0; ok && i < got_e.size(); ++i) ok = got_e[i].edge_id == e[i].second && got_e[i].count == -e[i].first;
    for (std::size_t i = 0; ok && i < got_v.size(); ++i) ok = got_v[i].id == s[i].second && got_v[i].speed == s[i].first;
    topk_ok += ok;
  }
  o.require(topk_ok == kTrafficSteps, fmt::format("{} timesteps disagree with the sort oracle", kTrafficSteps - topk_ok));

  server::ServerConfig cfg;
  cfg.port = 0;
  server::Server srv(cfg);
  const auto port = srv.start();
  const auto created = client::post_json(port, "/sessions", {{"network", emit_network_json(net)}});
  const auto id = created.json().at("session_id").get<std::string>();
  srv.attach_traffic(id, series);
  auto ws_owner = std::make_unique<client::WsClient>(port, "/sessions/" + id + "/events");
  auto& ws = *ws_owner;
  const double max_width = 16.0;
  ws.send({{"patch", {{"edge_options", {{"width_method", "SCALE"}, {"min_width_px", 1}, {"max_width_px", max_width}}}}}});
  ws.read_until("buffers_updated");
  int widest_ok = 0, served = 0;
  for (std::int64_t t = 0; t < kTrafficSteps; ++t) {
    ws.send({{"time", t}, {"mode", "busiest_edges"}, {"k", 10}});
    ws.read_until("timestep_view");
    ++served;
    if (counts[t].empty()) continue;
    std::int64_t best = 0;
    for (const auto& [eid, n] : counts[t]) best = std::max(best, n);
    const auto snap = srv.registry().get(id)->snapshot();
    bool ok = best > 0;
    for (const auto& [eid, n] : counts[t]) {
      if (n == best) ok = ok && snap->edge_styles->width_px[*snap->network->edge_index(eid)] == max_width;
    }
    widest_ok += ok;
  }
  o.require(widest_ok == served, fmt::format("{} timesteps without max width on the argmax edge", served - widest_ok));
  ws_owner.reset();
  srv.stop();
  o.detail = fmt::format("{} timesteps x {} vehicles: conservation {}/{}, top-k oracle {}/{}, "
                         "argmax edge at max width {}/{} served timesteps{}{}",
                         kTrafficSteps, kTrafficVehicles, conserved, kTrafficSteps, topk_ok, kTrafficSteps, widest_ok,
                         served, o.detail.empty() ? "" : "; ", o.detail);
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  report("ingest-fidelity", ingest_fidelity);
  report("projection", projection);
  report("hit-test-oracle", hit_test);
  report("style-scaling", style_scaling);
  report("bundle-round-trip", bundle_round_trip);
  report("pipeline-throughput", throughput);
  report("server-conformance", server_conformance);
  report("traffic-demo", traffic_demo);
  fmt::print("{} of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
