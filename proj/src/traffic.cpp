#include "streetlens/traffic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "streetlens/geo.hpp"
#include "streetlens/tessellate.hpp"

namespace streetlens::traffic {

const Timestep& TrafficSeries::at(std::int64_t t) const {
  if (t < 0 || static_cast<std::size_t>(t) >= steps_.size()) {
    throw TrafficError(TrafficErrc::kTimestepOutOfRange,
                       fmt::format("timestep {} outside [0, {})", t, steps_.size()), {t});
  }
  return steps_[static_cast<std::size_t>(t)];
}

// ---- CSV --------------------------------------------------------------------

namespace {

class CsvReader {
public:
  CsvReader(std::istream& in, std::string_view name, std::string_view header) : in_(in), name_(name) {
    std::string line;
    if (!next_line(line)) fail("missing header");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line != header) fail(fmt::format("header must be '{}', got '{}'", header, line));
  }

  // Splits the next non-empty row; false at end of input.
  bool row(std::vector<std::string_view>& fields, std::size_t expected) {
    while (next_line(line_)) {
      if (line_.empty()) continue;
      fields.clear();
      std::string_view rest = line_;
      for (;;) {
        const auto comma = rest.find(',');
        fields.push_back(rest.substr(0, comma));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      if (fields.size() != expected) fail(fmt::format("expected {} fields, got {}", expected, fields.size()));
      return true;
    }
    return false;
  }

  std::int64_t integer(std::string_view field, std::string_view column) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      fail(fmt::format("column {}: '{}' is not an integer", column, field));
    }
    return v;
  }

  double real(std::string_view field, std::string_view column) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
      fail(fmt::format("column {}: '{}' is not a number", column, field));
    }
    return v;
  }

  [[noreturn]] void fail(std::string_view reason) const {
    throw TrafficError(TrafficErrc::kSchemaViolation, fmt::format("{} line {}: {}", name_, line_no_, reason));
  }

private:
  bool next_line(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  std::istream& in_;
  std::string_view name_;
  std::string line_;
  std::size_t line_no_ = 0;
};

}  // namespace

TrafficSeries load_fcd_csv(std::istream& edge_counts, std::istream& vehicles, std::istream& totals) {
  std::vector<Timestep> steps;
  std::vector<std::string_view> f;

  {
    CsvReader r(totals, "totals.csv", "timestep,active_vehicles,mean_speed");
    while (r.row(f, 3)) {
      const auto t = r.integer(f[0], "timestep");
      if (t != static_cast<std::int64_t>(steps.size())) {
        throw TrafficError(TrafficErrc::kNonContiguousTimesteps,
                           fmt::format("totals.csv: expected timestep {}, got {}", steps.size(), t), {t});
      }
      Timestep s;
      s.totals.active_vehicles = r.integer(f[1], "active_vehicles");
      s.totals.mean_speed = r.real(f[2], "mean_speed");
      if (s.totals.active_vehicles < 0) r.fail("active_vehicles must be >= 0");
      steps.push_back(std::move(s));
    }
  }
  auto step_for = [&](std::int64_t t) -> Timestep& {
    if (t < 0 || static_cast<std::size_t>(t) >= steps.size()) {
      throw TrafficError(TrafficErrc::kNonContiguousTimesteps,
                         fmt::format("timestep {} not listed in totals.csv", t), {t});
    }
    return steps[static_cast<std::size_t>(t)];
  };

  {
    CsvReader r(edge_counts, "edge_counts.csv", "timestep,edge_id,count");
    while (r.row(f, 3)) {
      auto& s = step_for(r.integer(f[0], "timestep"));
      if (f[1].empty()) r.fail("empty edge_id");
      const auto count = r.integer(f[2], "count");
      if (count < 0) r.fail("count must be >= 0");
      if (!s.edge_counts.emplace(std::string(f[1]), count).second) {
        r.fail(fmt::format("duplicate edge '{}' within timestep", f[1]));
      }
    }
  }
  {
    CsvReader r(vehicles, "vehicles.csv", "timestep,vehicle_id,speed,lat,lon");
    std::vector<std::set<std::string, std::less<>>> seen(steps.size());
    while (r.row(f, 5)) {
      const auto t = r.integer(f[0], "timestep");
      auto& s = step_for(t);
      if (f[1].empty()) r.fail("empty vehicle_id");
      if (!seen[static_cast<std::size_t>(t)].emplace(f[1]).second) {
        r.fail(fmt::format("duplicate vehicle '{}' within timestep", f[1]));
      }
      VehicleState v{std::string(f[1]), r.real(f[2], "speed"), r.real(f[3], "lat"), r.real(f[4], "lon")};
      if (v.speed < 0.0) r.fail("speed must be >= 0");
      if (!valid_wgs84(v.lat, v.lon)) r.fail("vehicle position outside WGS84 bounds");
      s.vehicles.push_back(std::move(v));
    }
  }

  std::vector<std::int64_t> violations;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const auto& s = steps[t];
    std::int64_t sum = 0;
    for (const auto& [_, c] : s.edge_counts) sum += c;
    const auto rows = static_cast<std::int64_t>(s.vehicles.size());
    if (sum != rows || s.totals.active_vehicles != rows) violations.push_back(static_cast<std::int64_t>(t));
  }
  if (!violations.empty()) {
    const auto& s = steps[static_cast<std::size_t>(violations.front())];
    std::int64_t sum = 0;
    for (const auto& [_, c] : s.edge_counts) sum += c;
    auto message = fmt::format("conservation violated at {} timestep(s), first t={}: edge counts sum {}, "
                               "{} vehicle rows, active_vehicles {}",
                               violations.size(), violations.front(), sum, s.vehicles.size(),
                               s.totals.active_vehicles);
    throw TrafficError(TrafficErrc::kConservationViolation, std::move(message), std::move(violations));
  }
  return TrafficSeries(std::move(steps));
}

TrafficSeries load_fcd_dir(const std::string& dir) {
  auto open = [&](const char* name) {
    const auto path = std::filesystem::path(dir) / name;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
    return in;
  };
  auto ec = open("edge_counts.csv");
  auto ve = open("vehicles.csv");
  auto to = open("totals.csv");
  return load_fcd_csv(ec, ve, to);
}

// ---- extracts ---------------------------------------------------------------

std::vector<EdgeCount> top_k_edges(const TrafficSeries& series, std::int64_t t, std::size_t k) {
  const auto& s = series.at(t);
  std::vector<EdgeCount> all;
  for (const auto& [id, c] : s.edge_counts) {
    if (c > 0) all.push_back({id, c});
  }
  auto before = [](const EdgeCount& a, const EdgeCount& b) {
    return a.count != b.count ? a.count > b.count : a.edge_id < b.edge_id;
  };
  const auto n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), before);
  all.resize(n);
  return all;
}

std::vector<VehicleState> top_k_slowest(const TrafficSeries& series, std::int64_t t, std::size_t k) {
  std::vector<VehicleState> all = series.at(t).vehicles;
  auto before = [](const VehicleState& a, const VehicleState& b) {
    return a.speed != b.speed ? a.speed < b.speed : a.id < b.id;
  };
  const auto n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), before);
  all.resize(n);
  return all;
}

std::string_view to_string(MarkerMode mode) {
  return mode == MarkerMode::kBusiestEdges ? "busiest_edges" : "slowest_vehicles";
}

MarkerMode marker_mode_from_string(std::string_view s) {
  if (s == "busiest_edges") return MarkerMode::kBusiestEdges;
  if (s == "slowest_vehicles") return MarkerMode::kSlowestVehicles;
  throw Error(fmt::format("unknown marker mode '{}'", s));
}

std::vector<MarkerRecord> markers_for(const TrafficSeries& series, const StreetNetwork& net, std::int64_t t,
                                      MarkerMode mode, std::size_t k) {
  std::vector<MarkerRecord> out;
  if (mode == MarkerMode::kBusiestEdges) {
    for (const auto& ec : top_k_edges(series, t, k)) {
      auto idx = net.edge_index(ec.edge_id);
      if (!idx) {
        throw TrafficError(TrafficErrc::kUnknownEdge,
                           fmt::format("timestep {} counts edge '{}' absent from the network", t, ec.edge_id), {t});
      }
      const auto mid = geo::unproject(polyline_midpoint(net.edges()[*idx].coordinates).point);
      MarkerRecord m;
      m.id = "edge:" + ec.edge_id;
      m.lat = mid.lat;
      m.lon = mid.lon;
      m.popup_text = fmt::format("edge {}: {} vehicles", ec.edge_id, ec.count);
      m.data["edge_id"] = ec.edge_id;
      m.data["count"] = static_cast<double>(ec.count);
      out.push_back(std::move(m));
    }
  } else {
    for (const auto& v : top_k_slowest(series, t, k)) {
      MarkerRecord m;
      m.id = "vehicle:" + v.id;
      m.lat = v.lat;
      m.lon = v.lon;
      m.popup_text = fmt::format("vehicle {}: {} m/s", v.id, v.speed);
      m.data["vehicle_id"] = v.id;
      m.data["speed"] = v.speed;
      out.push_back(std::move(m));
    }
  }
  return out;
}

PropertyPatch timestep_patch(const TrafficSeries& series, const StreetNetwork& net, std::int64_t t, MarkerMode mode,
                             std::size_t k, std::string_view weight_field) {
  const auto& s = series.at(t);
  PropertyPatch p;
  std::vector<EdgeRecord> edges = net.edges();
  for (auto& e : edges) {
    auto it = s.edge_counts.find(e.id);
    e.data.insert_or_assign(std::string(weight_field), it == s.edge_counts.end() ? 0.0 : static_cast<double>(it->second));
  }
  p.edges_data = std::move(edges);
  p.markers_data = markers_for(series, net, t, mode, k);
  return p;
}

nlohmann::json timestep_view(const TrafficSeries& series, std::int64_t t, MarkerMode mode, std::size_t k) {
  const auto& s = series.at(t);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : top_k_edges(series, t, k)) edges.push_back({{"edge_id", e.edge_id}, {"count", e.count}});
  nlohmann::json slow = nlohmann::json::array();
  for (const auto& v : top_k_slowest(series, t, k)) {
    slow.push_back({{"vehicle_id", v.id}, {"speed", v.speed}, {"lat", v.lat}, {"lon", v.lon}});
  }
  return {{"time", t},
          {"mode", to_string(mode)},
          {"top_edges", std::move(edges)},
          {"slowest_vehicles", std::move(slow)},
          {"totals", {{"active_vehicles", s.totals.active_vehicles}, {"mean_speed", s.totals.mean_speed}}}};
}

nlohmann::json totals_json(const TrafficSeries& series) {
  nlohmann::json active = nlohmann::json::array();
  nlohmann::json speed = nlohmann::json::array();
  for (const auto& s : series.steps()) {
    active.push_back(s.totals.active_vehicles);
    speed.push_back(s.totals.mean_speed);
  }
  return {{"timesteps", series.size()}, {"active_vehicles", std::move(active)}, {"mean_speed", std::move(speed)}};
}

// ---- synthetic run ----------------------------------------------------------

namespace {

double segment_metres(LatLon a, LatLon b) {
  constexpr double kEarthRadius = 6371008.8;
  const double rad = M_PI / 180.0;
  const double x = (b.lon - a.lon) * rad * std::cos((a.lat + b.lat) / 2.0 * rad);
  const double y = (b.lat - a.lat) * rad;
  return kEarthRadius * std::hypot(x, y);
}

LatLon along(const std::vector<LatLon>& pts, double fraction) {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += segment_metres(pts[i - 1], pts[i]);
  double target = fraction * total;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double len = segment_metres(pts[i - 1], pts[i]);
    if (target <= len && len > 0.0) {
      const double u = target / len;
      return {pts[i - 1].lat + u * (pts[i].lat - pts[i - 1].lat), pts[i - 1].lon + u * (pts[i].lon - pts[i - 1].lon)};
    }
    target -= len;
  }
  return pts.back();
}

}  // namespace

FcdCsv synthesize_fcd(const StreetNetwork& net, std::int64_t timesteps, std::size_t vehicles, std::uint64_t seed) {
  if (net.edges().empty()) throw Error("synthetic traffic needs at least one edge");
  std::mt19937_64 rng(seed);
  const auto& edges = net.edges();
  std::vector<double> length(edges.size());
  std::unordered_map<std::string, std::vector<std::size_t>> out_edges;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = 1; j < edges[i].coordinates.size(); ++j) {
      length[i] += segment_metres(edges[i].coordinates[j - 1], edges[i].coordinates[j]);
    }
    length[i] = std::max(length[i], 1.0);
    out_edges[edges[i].source].push_back(i);
  }

  struct Vehicle {
    std::int64_t enter, leave;
    std::size_t edge;
    double progress;
  };
  std::uniform_int_distribution<std::size_t> pick_edge(0, edges.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vehicle> fleet;
  for (std::size_t i = 0; i < vehicles; ++i) {
    const auto enter = static_cast<std::int64_t>(unit(rng) * 0.7 * static_cast<double>(timesteps));
    const auto life = 5 + static_cast<std::int64_t>(unit(rng) * 0.5 * static_cast<double>(timesteps));
    fleet.push_back({enter, std::min(timesteps, enter + life), pick_edge(rng), unit(rng)});
  }

  FcdCsv csv;
  csv.edge_counts = "timestep,edge_id,count\n";
  csv.vehicles = "timestep,vehicle_id,speed,lat,lon\n";
  csv.totals = "timestep,active_vehicles,mean_speed\n";
  for (std::int64_t t = 0; t < timesteps; ++t) {
    std::map<std::string_view, std::int64_t> counts;
    std::int64_t active = 0;
    double speed_sum = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      auto& v = fleet[i];
      if (t < v.enter || t >= v.leave) continue;
      double speed = unit(rng) < 0.1 ? 0.0 : std::round(unit(rng) * 1400.0) / 100.0;
      v.progress += speed / length[v.edge];
      while (v.progress >= 1.0) {
        v.progress -= 1.0;
        const auto& next = out_edges[edges[v.edge].target];
        v.edge = next.empty() ? pick_edge(rng) : next[std::uniform_int_distribution<std::size_t>(0, next.size() - 1)(rng)];
        v.progress = std::min(v.progress, 0.999);
      }
      const auto pos = along(edges[v.edge].coordinates, v.progress);
      ++counts[edges[v.edge].id];
      ++active;
      speed_sum += speed;
      csv.vehicles += fmt::format("{},veh{},{},{:.7f},{:.7f}\n", t, i, speed, pos.lat, pos.lon);
    }
    for (const auto& [id, c] : counts) csv.edge_counts += fmt::format("{},{},{}\n", t, id, c);
    csv.totals += fmt::format("{},{},{}\n", t, active, active ? speed_sum / static_cast<double>(active) : 0.0);
  }
  return csv;
}

void write_fcd_dir(const FcdCsv& csv, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& body) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  };
  write("edge_counts.csv", csv.edge_counts);
  write("vehicles.csv", csv.vehicles);
  write("totals.csv", csv.totals);
}

}  // namespace streetlens::traffic
