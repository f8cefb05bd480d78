#include "streetlens/bench.hpp"

#include <sys/utsname.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <thread>

#include <fmt/format.h>

#include "streetlens/bundle.hpp"

namespace streetlens::bench {

StreetNetwork synthesize_grid(std::size_t approx_nodes) {
  if (approx_nodes < 4) throw Error("synthesize_grid needs at least 4 nodes");
  std::size_t side = static_cast<std::size_t>(std::sqrt(static_cast<double>(approx_nodes)));
  while ((side + 1) * (side + 1) <= approx_nodes) ++side;
  while (side * side > approx_nodes) --side;

  const double half = (static_cast<double>(side) - 1.0) * kGridSpacingDeg / 2.0;
  auto lat_of = [&](std::size_t r) { return kGridCenter.lat + half - static_cast<double>(r) * kGridSpacingDeg; };
  auto lon_of = [&](std::size_t c) { return kGridCenter.lon - half + static_cast<double>(c) * kGridSpacingDeg; };
  auto node_id = [&](std::size_t r, std::size_t c) { return std::to_string(r * side + c); };

  std::vector<NodeRecord> nodes;
  nodes.reserve(side * side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) nodes.push_back({node_id(r, c), lat_of(r), lon_of(c), {}});
  }

  std::vector<EdgeRecord> edges;
  edges.reserve(2 * side * (side - 1));
  auto add_edge = [&](std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) {
    const auto k = edges.size();
    EdgeRecord e;
    e.id = "e" + std::to_string(k);
    e.source = node_id(r0, c0);
    e.target = node_id(r1, c1);
    e.coordinates = {{lat_of(r0), lon_of(c0)}, {lat_of(r1), lon_of(c1)}};
    e.data["weight"] = static_cast<double>(k);
    edges.push_back(std::move(e));
  };
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      if (c + 1 < side) add_edge(r, c, r, c + 1);
      if (r + 1 < side) add_edge(r, c, r + 1, c);
    }
  }
  return build_network(std::move(nodes), std::move(edges));
}

std::string_view to_string(FrameWork mode) {
  return mode == FrameWork::kTransformOnly ? "transform_only" : "restyle_and_retessellate";
}

FrameWork frame_work_from_string(std::string_view s) {
  if (s == "transform_only") return FrameWork::kTransformOnly;
  if (s == "restyle_and_retessellate") return FrameWork::kRestyleAndRetessellate;
  throw Error(fmt::format("unknown benchmark mode '{}'", s));
}

void summarize(BenchReport& report) {
  report.repetitions.clear();
  RepetitionSummary total;
  for (const auto& rep : report.samples) {
    RepetitionSummary s;
    for (const auto& f : rep) {
      s.duration_sum_ms += f.duration_ms;
      s.fps_mean += f.fps_equivalent;
      s.cpu_mean_ms += f.cpu_ms;
    }
    const double n = static_cast<double>(rep.size());
    s.fps_mean /= n;
    s.cpu_mean_ms /= n;
    total.duration_sum_ms += s.duration_sum_ms;
    total.fps_mean += s.fps_mean;
    total.cpu_mean_ms += s.cpu_mean_ms;
    report.repetitions.push_back(s);
  }
  const double reps = static_cast<double>(report.repetitions.size());
  report.average = {total.duration_sum_ms / reps, total.fps_mean / reps, total.cpu_mean_ms / reps};
}

LatLon pan_center(const geo::Viewport& base, double radius_px, int frame, int frames) {
  const double angle = 2.0 * M_PI * static_cast<double>(frame) / static_cast<double>(frames);
  const geo::ScreenPoint s{base.width_px / 2.0 + radius_px * std::cos(angle),
                           base.height_px / 2.0 + radius_px * std::sin(angle)};
  return geo::unproject(geo::from_screen(s, base));
}

namespace {

// World-to-screen affine for one frame.
struct Transform {
  double scale, ox, oy;
  explicit Transform(const geo::Viewport& v) {
    const auto c = geo::project(v.center.lat, v.center.lon);
    scale = geo::world_scale(v.zoom);
    ox = c.x * scale - v.width_px / 2.0;
    oy = c.y * scale - v.height_px / 2.0;
  }
};

// Transforms every vertex and sprite centre, counting those on screen.
std::size_t transform_layers(const RenderBundle& b, const geo::Viewport& v, std::vector<float>& scratch) {
  const Transform t(v);
  std::size_t visible = 0;
  auto run = [&](const std::vector<float>& xy) {
    scratch.resize(xy.size());
    for (std::size_t i = 0; i + 1 < xy.size(); i += 2) {
      const double sx = xy[i] * t.scale - t.ox;
      const double sy = xy[i + 1] * t.scale - t.oy;
      scratch[i] = static_cast<float>(sx);
      scratch[i + 1] = static_cast<float>(sy);
      visible += (sx >= 0.0 && sx <= v.width_px && sy >= 0.0 && sy <= v.height_px) ? 1 : 0;
    }
  };
  run(b.edge_mesh.positions);
  run(b.arrow_sprites.centers);
  run(b.node_sprites.centers);
  run(b.marker_sprites.centers);
  return visible;
}

RenderBundle full_bundle(const StreetNetwork& net, const NetworkStyles& styles, double zoom) {
  RenderBundle b;
  b.reference_zoom = zoom;
  b.edge_mesh = tessellate_edges(net, styles.edges, zoom);
  b.arrow_sprites = place_arrows(net, styles.edges, true);
  b.node_sprites = build_sprites(ElementKind::kNode, net, styles.nodes);
  b.marker_sprites = build_sprites(ElementKind::kMarker, net, styles.markers);
  return b;
}

double ms_between(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

BenchReport run_pan_benchmark(const StreetNetwork& net, const geo::Viewport& viewport, const BenchConfig& config) {
  if (config.frames < 1 || config.reps < 1) throw Error("frames and reps must be >= 1");
  using clock = std::chrono::steady_clock;

  BenchReport report;
  report.config = config;
  report.viewport = viewport;
  report.node_count = net.nodes().size();
  report.edge_count = net.edges().size();
  report.machine = machine_descriptor();
  for (int i = 0; i < config.frames; ++i) report.centers.push_back(pan_center(viewport, config.radius_px, i, config.frames));

  auto styles = resolve_styles(net, config.options);
  RenderBundle bundle = full_bundle(net, styles, viewport.zoom);
  std::vector<float> scratch;
  volatile std::size_t sink = 0;

  for (int rep = 0; rep < config.reps; ++rep) {
    std::vector<FrameSample> frames;
    frames.reserve(static_cast<std::size_t>(config.frames));
    for (int i = 0; i < config.frames; ++i) {
      const auto frame_start = clock::now();
      geo::Viewport v = viewport;
      v.center = report.centers[static_cast<std::size_t>(i)];

      const auto work_start = clock::now();
      if (config.mode == FrameWork::kRestyleAndRetessellate) {
        styles = resolve_styles(net, config.options);
        bundle.edge_mesh = tessellate_edges(net, styles.edges, v.zoom);
      }
      sink = sink + transform_layers(bundle, v, scratch);
      const auto work_end = clock::now();

      FrameSample s;
      s.cpu_ms = ms_between(work_start, work_end);
      const auto frame_end = clock::now();
      s.duration_ms = ms_between(frame_start, frame_end);
      if (s.duration_ms <= 0.0) s.duration_ms = 1e-6;
      s.fps_equivalent = 1000.0 / s.duration_ms;
      frames.push_back(s);
    }
    report.samples.push_back(std::move(frames));
  }
  summarize(report);
  return report;
}

std::string machine_descriptor() {
  struct utsname u {};
  std::string host = "unknown";
  if (uname(&u) == 0) host = fmt::format("{} {} {}", u.sysname, u.release, u.machine);
  return fmt::format("{}; {} hardware threads", host, std::thread::hardware_concurrency());
}

std::size_t regenerate_bundle(const StreetNetwork& net, const NetworkStyleOptions& options, double zoom) {
  const auto styles = resolve_styles(net, options);
  const RenderBundle b = full_bundle(net, styles, zoom);
  return encode_bundle(b).size();
}

void write_report_csv(const BenchReport& report, const std::string& path) {
  if (report.repetitions.empty()) throw Error("benchmark report has no repetitions");
  std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "w"), &std::fclose);
  if (!f) throw Error(fmt::format("cannot open '{}' for writing", path));
  fmt::print(f.get(), "rep,duration_sum_ms,fps_mean,cpu_mean_ms\n");
  for (std::size_t i = 0; i < report.repetitions.size(); ++i) {
    const auto& r = report.repetitions[i];
    fmt::print(f.get(), "{},{:.17g},{:.17g},{:.17g}\n", i + 1, r.duration_sum_ms, r.fps_mean, r.cpu_mean_ms);
  }
  const auto& a = report.average;
  fmt::print(f.get(), "average,{:.17g},{:.17g},{:.17g}\n", a.duration_sum_ms, a.fps_mean, a.cpu_mean_ms);
  if (std::ferror(f.get())) throw Error(fmt::format("write to '{}' failed", path));
}

}  // namespace streetlens::bench
