#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "streetlens/network.hpp"
#include "streetlens/session.hpp"

namespace streetlens::traffic {

enum class TrafficErrc {
  kSchemaViolation,
  kNonContiguousTimesteps,
  kConservationViolation,
  kTimestepOutOfRange,
  kUnknownEdge,
};

class TrafficError : public Error {
public:
  TrafficError(TrafficErrc code, std::string message, std::vector<std::int64_t> timesteps = {})
      : Error(std::move(message)), code_(code), timesteps_(std::move(timesteps)) {}
  TrafficErrc code() const noexcept { return code_; }
  // Offending timesteps for kConservationViolation and kTimestepOutOfRange.
  const std::vector<std::int64_t>& timesteps() const noexcept { return timesteps_; }

private:
  TrafficErrc code_;
  std::vector<std::int64_t> timesteps_;
};

struct VehicleState {
  std::string id;
  double speed = 0.0;  // m/s
  double lat = 0.0;
  double lon = 0.0;
};

struct TimestepTotals {
  std::int64_t active_vehicles = 0;
  double mean_speed = 0.0;
};

struct Timestep {
  std::map<std::string, std::int64_t, std::less<>> edge_counts;
  std::vector<VehicleState> vehicles;  // file order
  TimestepTotals totals;
};

class TrafficSeries {
public:
  TrafficSeries() = default;
  explicit TrafficSeries(std::vector<Timestep> steps) : steps_(std::move(steps)) {}

  std::size_t size() const noexcept { return steps_.size(); }
  // Throws kTimestepOutOfRange.
  const Timestep& at(std::int64_t t) const;
  const std::vector<Timestep>& steps() const noexcept { return steps_; }

private:
  std::vector<Timestep> steps_;
};

// Parses edge_counts.csv, vehicles.csv and totals.csv. totals.csv defines
// the timestep range and must list 0..T-1 exactly once each in order.
// Conservation: at every t the edge counts, the vehicle rows and the active
// total agree; all violating timesteps are reported together.
TrafficSeries load_fcd_csv(std::istream& edge_counts, std::istream& vehicles, std::istream& totals);
// Reads the three files from a directory.
TrafficSeries load_fcd_dir(const std::string& dir);

struct EdgeCount {
  std::string edge_id;
  std::int64_t count = 0;
  friend bool operator==(const EdgeCount&, const EdgeCount&) = default;
};

// Descending count, ties by id; zero counts omitted.
std::vector<EdgeCount> top_k_edges(const TrafficSeries& series, std::int64_t t, std::size_t k = 10);
// Ascending speed, ties by id. Stopped vehicles are included.
std::vector<VehicleState> top_k_slowest(const TrafficSeries& series, std::int64_t t, std::size_t k = 10);

enum class MarkerMode { kBusiestEdges, kSlowestVehicles };
std::string_view to_string(MarkerMode mode);
MarkerMode marker_mode_from_string(std::string_view s);

std::vector<MarkerRecord> markers_for(const TrafficSeries& series, const StreetNetwork& net, std::int64_t t,
                                      MarkerMode mode, std::size_t k = 10);

// edges_data with every edge's weight field set to its count at t (0 when
// absent) plus markers_data from markers_for.
PropertyPatch timestep_patch(const TrafficSeries& series, const StreetNetwork& net, std::int64_t t, MarkerMode mode,
                             std::size_t k = 10, std::string_view weight_field = "weight");

// Chart view for one timestep: both top-k tables and the totals point.
nlohmann::json timestep_view(const TrafficSeries& series, std::int64_t t, MarkerMode mode, std::size_t k = 10);

// Whole-run totals series for the static line charts.
nlohmann::json totals_json(const TrafficSeries& series);

struct FcdCsv {
  std::string edge_counts;
  std::string vehicles;
  std::string totals;
};

// Deterministic synthetic run over `net`: vehicles enter and leave,
// traverse edges, and each active vehicle sits on exactly one edge.
FcdCsv synthesize_fcd(const StreetNetwork& net, std::int64_t timesteps, std::size_t vehicles, std::uint64_t seed);
void write_fcd_dir(const FcdCsv& csv, const std::string& dir);

}  // namespace streetlens::traffic
