#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "streetlens/geo.hpp"
#include "streetlens/network.hpp"
#include "streetlens/style.hpp"
#include "streetlens/tessellate.hpp"

namespace streetlens::bench {

// Centre of the synthetic lattice (Queretaro city centre).
inline constexpr LatLon kGridCenter{20.5931, -100.3920};
inline constexpr double kGridSpacingDeg = 0.0005;

// side x side lattice with side = floor(sqrt(approx_nodes)), 2-point edges
// to the right and lower neighbours, edge weight = edge index.
StreetNetwork synthesize_grid(std::size_t approx_nodes);

enum class FrameWork { kTransformOnly, kRestyleAndRetessellate };
std::string_view to_string(FrameWork mode);
FrameWork frame_work_from_string(std::string_view s);

struct BenchConfig {
  int frames = 31;
  int reps = 10;
  double radius_px = 200.0;
  FrameWork mode = FrameWork::kTransformOnly;
  NetworkStyleOptions options;
};

struct FrameSample {
  double duration_ms = 0.0;
  double cpu_ms = 0.0;
  double fps_equivalent = 0.0;
};

struct RepetitionSummary {
  double duration_sum_ms = 0.0;
  double fps_mean = 0.0;
  double cpu_mean_ms = 0.0;
};

struct BenchReport {
  BenchConfig config;
  geo::Viewport viewport;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::string machine;
  std::vector<std::vector<FrameSample>> samples;  // [rep][frame]
  std::vector<RepetitionSummary> repetitions;
  RepetitionSummary average;  // mean of the per-repetition rows
  std::vector<LatLon> centers;  // per frame, identical across repetitions
};

// Recomputes repetitions and average from samples.
void summarize(BenchReport& report);

// Viewport centre for frame i: the screen centre displaced by radius_px
// along a circle, angle 2*pi*i/frames.
LatLon pan_center(const geo::Viewport& base, double radius_px, int frame, int frames);

BenchReport run_pan_benchmark(const StreetNetwork& net, const geo::Viewport& viewport, const BenchConfig& config);

// Host description: kernel, architecture, hardware threads.
std::string machine_descriptor();

// Resolves every style and builds and encodes a full bundle; returns bytes.
std::size_t regenerate_bundle(const StreetNetwork& net, const NetworkStyleOptions& options, double zoom);

// Columns rep, duration_sum_ms, fps_mean, cpu_mean_ms; one row per
// repetition then an "average" row. Throws Error on io failure.
void write_report_csv(const BenchReport& report, const std::string& path);

}  // namespace streetlens::bench
