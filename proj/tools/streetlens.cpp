#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "streetlens/bench.hpp"
#include "streetlens/ingest.hpp"
#include "streetlens/server.hpp"
#include "streetlens/traffic.hpp"

namespace sl = streetlens;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sl::Error(fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void set_log_level(const std::string& level) {
  const auto l = spdlog::level::from_str(level);
  if (l == spdlog::level::off && level != "off") throw sl::Error(fmt::format("unknown log level '{}'", level));
  spdlog::set_level(l);
}

int run_serve(const sl::server::ServerConfig& config) {
  sl::server::Server server(config);
  server.start();
  server.wait();
  return 0;
}

int run_bench(std::size_t nodes, const sl::bench::BenchConfig& config, double zoom, const std::string& out) {
  const auto net = sl::bench::synthesize_grid(nodes);
  sl::geo::Viewport viewport{sl::bench::kGridCenter, zoom, 1280.0, 720.0};
  const auto report = sl::bench::run_pan_benchmark(net, viewport, config);
  fmt::print("grid: {} nodes, {} edges; mode {}; {} frames x {} reps; radius {} px\n", report.node_count,
             report.edge_count, sl::bench::to_string(config.mode), config.frames, config.reps, config.radius_px);
  fmt::print("machine: {}\n", report.machine);
  fmt::print("{:>8} {:>18} {:>14} {:>14}\n", "rep", "duration_sum_ms", "fps_mean", "cpu_mean_ms");
  for (std::size_t i = 0; i < report.repetitions.size(); ++i) {
    const auto& r = report.repetitions[i];
    fmt::print("{:>8} {:>18.3f} {:>14.2f} {:>14.3f}\n", i + 1, r.duration_sum_ms, r.fps_mean, r.cpu_mean_ms);
  }
  const auto& a = report.average;
  fmt::print("{:>8} {:>18.3f} {:>14.2f} {:>14.3f}\n", "average", a.duration_sum_ms, a.fps_mean, a.cpu_mean_ms);
  if (!out.empty()) sl::bench::write_report_csv(report, out);
  return 0;
}

int run_demo(sl::server::ServerConfig config, const std::string& network_path, const std::string& traffic_dir,
             bool radiography) {
  auto series = std::make_shared<const sl::traffic::TrafficSeries>(sl::traffic::load_fcd_dir(traffic_dir));
  auto records = sl::load_network_source(slurp(network_path));
  nlohmann::json initial = nlohmann::json::object();
  if (radiography) {
    initial = {{"show_nodes", false},
               {"show_markers", true},
               {"tile_layer_opacity", 0.0},
               {"edge_options", {{"alpha_method", "SCALE"}, {"width_method", "SCALE"}}}};
  }
  auto session = std::make_shared<sl::Session>(std::move(records), sl::parse_patch(initial));
  if (series->size() > 0) {
    session->apply_patch(sl::traffic::timestep_patch(*series, *session->snapshot()->network, 0,
                                                     sl::traffic::MarkerMode::kBusiestEdges));
  }
  sl::server::Server server(config);
  const auto id = server.registry().add(session);
  server.attach_traffic(id, series);
  const auto port = server.start();
  fmt::print("demo session {} on port {} ({} timesteps)\n", id, port, series->size());
  std::fflush(stdout);
  server.wait();
  return 0;
}

int run_gen_traffic(const std::string& network_path, std::int64_t timesteps, std::size_t vehicles, std::uint64_t seed,
                    const std::string& out) {
  sl::StreetNetwork net;
  if (network_path.empty()) {
    net = sl::bench::synthesize_grid(2500);
  } else {
    auto r = sl::load_network_source(slurp(network_path));
    net = sl::build_network(std::move(r.nodes), std::move(r.edges), std::move(r.markers));
  }
  sl::traffic::write_fcd_dir(sl::traffic::synthesize_fcd(net, timesteps, vehicles, seed), out);
  fmt::print("wrote {} timesteps for {} vehicles to {}\n", timesteps, vehicles, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streetlens: street network visualization engine and session server"};
  app.require_subcommand(1);

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->envname("STREETLENS_LOG_LEVEL");

  sl::server::ServerConfig server_config;
  auto* serve = app.add_subcommand("serve", "Run the session server");
  serve->add_option("--port", server_config.port, "Listen port")->envname("STREETLENS_PORT");
  serve->add_option("--address", server_config.address, "Listen address");
  serve->add_option("--threads", server_config.threads, "Worker threads");
  serve->add_option("--fixtures", server_config.fixtures_dir, "Directory of named network fixtures");

  std::size_t bench_nodes = 20164;
  double bench_zoom = 12.0;
  std::string bench_mode = "transform_only";
  std::string bench_out;
  sl::bench::BenchConfig bench_config;
  auto* bench = app.add_subcommand("bench", "Circular-pan pipeline benchmark on a synthetic grid");
  bench->add_option("--nodes", bench_nodes, "Approximate grid node count")->check(CLI::Range(4, 100000000));
  bench->add_option("--frames", bench_config.frames, "Frames per repetition")->check(CLI::PositiveNumber);
  bench->add_option("--reps", bench_config.reps, "Repetitions")->check(CLI::PositiveNumber);
  bench->add_option("--radius", bench_config.radius_px, "Pan radius in pixels")->check(CLI::NonNegativeNumber);
  bench->add_option("--zoom", bench_zoom, "Map zoom");
  bench->add_option("--mode", bench_mode, "transform_only|restyle_and_retessellate")
      ->check(CLI::IsMember({"transform_only", "restyle_and_retessellate"}));
  bench->add_option("--out", bench_out, "CSV report path");

  auto* demo = app.add_subcommand("demo", "Traffic replay dashboard");
  demo->require_subcommand(1);
  std::string demo_network, demo_traffic;
  bool demo_radiography = false;
  sl::server::ServerConfig demo_config;
  auto* demo_serve = demo->add_subcommand("serve", "Serve a session preloaded with a traffic series");
  demo_serve->add_option("--network", demo_network, "GraphML or JSON network")->required()->check(CLI::ExistingFile);
  demo_serve->add_option("--traffic", demo_traffic, "Directory with edge_counts.csv, vehicles.csv, totals.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  demo_serve->add_option("--port", demo_config.port, "Listen port")->envname("STREETLENS_PORT");
  demo_serve->add_option("--address", demo_config.address, "Listen address");
  demo_serve->add_flag("--radiography", demo_radiography, "Hide nodes and tiles, scale edge alpha and width by count");

  std::string gen_network, gen_out;
  std::int64_t gen_timesteps = 100;
  std::size_t gen_vehicles = 500;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-traffic", "Write a synthetic traffic CSV fixture");
  gen->add_option("--network", gen_network, "Network file (default: 50x50 synthetic grid)")->check(CLI::ExistingFile);
  gen->add_option("--timesteps", gen_timesteps, "Timestep count")->check(CLI::PositiveNumber);
  gen->add_option("--vehicles", gen_vehicles, "Vehicle count");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    set_log_level(log_level);
    if (*serve) return run_serve(server_config);
    if (*bench) {
      bench_config.mode = sl::bench::frame_work_from_string(bench_mode);
      return run_bench(bench_nodes, bench_config, bench_zoom, bench_out);
    }
    if (*demo_serve) return run_demo(demo_config, demo_network, demo_traffic, demo_radiography);
    if (*gen) return run_gen_traffic(gen_network, gen_timesteps, gen_vehicles, gen_seed, gen_out);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
