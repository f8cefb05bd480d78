#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "helpers.hpp"
#include "streetlens/bench.hpp"
#include "streetlens/session.hpp"
#include "streetlens/traffic.hpp"

using namespace streetlens;
using namespace streetlens::traffic;
using testing::edge;
using testing::node;

namespace {

constexpr const char* kCountsHeader = "timestep,edge_id,count\n";
constexpr const char* kVehiclesHeader = "timestep,vehicle_id,speed,lat,lon\n";
constexpr const char* kTotalsHeader = "timestep,active_vehicles,mean_speed\n";

TrafficSeries load(const std::string& counts, const std::string& vehicles, const std::string& totals) {
  std::istringstream c(kCountsHeader + counts), v(kVehiclesHeader + vehicles), t(kTotalsHeader + totals);
  return load_fcd_csv(c, v, t);
}

template <typename F>
TrafficError traffic_error(F&& f) {
  try {
    f();
  } catch (const TrafficError& e) {
    return e;
  }
  FAIL("expected TrafficError");
  return TrafficError(TrafficErrc::kSchemaViolation, "");
}

// One timestep whose edge counts and vehicles are given directly.
TrafficSeries single_step(const std::map<std::string, std::int64_t>& counts, const std::vector<std::pair<std::string, double>>& speeds) {
  std::string c, v;
  std::int64_t total = 0;
  for (const auto& [id, n] : counts) {
    c += fmt::format("0,{},{}\n", id, n);
    total += n;
  }
  REQUIRE(total == static_cast<std::int64_t>(speeds.size()));
  double sum = 0;
  for (const auto& [id, s] : speeds) {
    v += fmt::format("0,{},{},20.59,-100.39\n", id, s);
    sum += s;
  }
  return load(c, v, fmt::format("0,{},{}\n", total, speeds.empty() ? 0.0 : sum / speeds.size()));
}

StreetNetwork line_network() {
  const LatLon a{20.59, -100.40}, b{20.59, -100.38}, c{20.60, -100.38};
  return build_network({node("a", a.lat, a.lon), node("b", b.lat, b.lon), node("c", c.lat, c.lon)},
                       {edge("A", "a", "b", {a, b}), edge("B", "b", "c", {b, c}), edge("C", "c", "a", {c, a})});
}

}  // namespace

TEST_SUITE("traffic") {
  TEST_CASE("single vehicle run") {
    const auto s = load("0,A,1\n", "0,v1,8.5,20.59,-100.39\n", "0,1,8.5\n");
    REQUIRE(s.size() == 1);
    CHECK(s.at(0).edge_counts.at("A") == 1);
    REQUIRE(s.at(0).vehicles.size() == 1);
    CHECK(s.at(0).vehicles[0].speed == 8.5);
    CHECK(s.at(0).totals.active_vehicles == 1);
    CHECK(top_k_edges(s, 0, 10) == std::vector<EdgeCount>{{"A", 1}});
  }

  TEST_CASE("conservation violations report every timestep") {
    const auto e = traffic_error([] {
      load("0,A,1\n1,A,2\n2,A,1\n3,A,3\n", "0,v1,1,0,0\n1,v1,1,0,0\n2,v1,1,0,0\n3,v1,1,0,0\n",
           "0,1,1\n1,1,1\n2,1,1\n3,1,1\n");
    });
    CHECK(e.code() == TrafficErrc::kConservationViolation);
    CHECK(e.timesteps() == std::vector<std::int64_t>{1, 3});
    const auto totals_off = traffic_error([] { load("0,A,1\n", "0,v1,1,0,0\n", "0,2,1\n"); });
    CHECK(totals_off.code() == TrafficErrc::kConservationViolation);
  }

  TEST_CASE("top-k edges: descending count, ties by id") {
    std::vector<std::pair<std::string, double>> vs;
    for (int i = 0; i < 12; ++i) vs.push_back({"v" + std::to_string(i), 1.0 + i});
    const auto s = single_step({{"A", 5}, {"B", 2}, {"C", 5}}, vs);
    CHECK(top_k_edges(s, 0, 2) == std::vector<EdgeCount>{{"A", 5}, {"C", 5}});
    CHECK(top_k_edges(s, 0, 10) == std::vector<EdgeCount>{{"A", 5}, {"C", 5}, {"B", 2}});
    CHECK(top_k_edges(s, 0, 0).empty());
    CHECK(top_k_slowest(s, 0, 0).empty());
  }

  TEST_CASE("all-zero timestep has no busy edges") {
    const auto s = load("0,A,0\n0,B,0\n", "", "0,0,0\n");
    CHECK(top_k_edges(s, 0, 10).empty());
    CHECK(top_k_slowest(s, 0, 10).empty());
  }

  TEST_CASE("slowest vehicles include stopped ones") {
    const auto s = single_step({{"A", 3}}, {{"v1", 4.0}, {"v2", 0.0}, {"v3", 2.0}});
    const auto slow = top_k_slowest(s, 0, 1);
    REQUIRE(slow.size() == 1);
    CHECK(slow[0].id == "v2");
    const auto all = top_k_slowest(s, 0, 10);
    REQUIRE(all.size() == 3);
    CHECK(all[1].id == "v3");
    CHECK(all[2].id == "v1");
  }

  TEST_CASE("top-k agrees with a full sort on random data") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      std::map<std::string, std::int64_t> counts;
      std::int64_t total = 0;
      for (int i = 0; i < 50; ++i) {
        const auto n = static_cast<std::int64_t>(rng() % 6);
        counts["e" + std::to_string(i)] = n;
        total += n;
      }
      std::vector<std::pair<std::string, double>> speeds;
      for (std::int64_t i = 0; i < total; ++i) speeds.push_back({"v" + std::to_string(i), static_cast<double>(rng() % 20)});
      const auto s = single_step(counts, speeds);

      std::vector<EdgeCount> want;
      for (const auto& [id, n] : counts) {
        if (n > 0) want.push_back({id, n});
      }
      std::sort(want.begin(), want.end(), [](const EdgeCount& a, const EdgeCount& b) {
        return a.count != b.count ? a.count > b.count : a.edge_id < b.edge_id;
      });
      for (std::size_t k : {1u, 5u, 10u, 100u}) {
        auto w = want;
        w.resize(std::min(k, w.size()));
        CHECK(top_k_edges(s, 0, k) == w);
      }

      auto sorted = speeds;
      std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
      });
      const auto got = top_k_slowest(s, 0, 10);
      REQUIRE(got.size() == std::min<std::size_t>(10, sorted.size()));
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].id == sorted[i].first);
        CHECK(got[i].speed == sorted[i].second);
      }
    }
  }

  TEST_CASE("timestep range, contiguity and schema are enforced") {
    const auto s = load("0,A,1\n", "0,v1,1,0,0\n", "0,1,1\n");
    auto oob = traffic_error([&] { s.at(1); });
    CHECK(oob.code() == TrafficErrc::kTimestepOutOfRange);
    CHECK(traffic_error([&] { top_k_edges(s, -1, 3); }).code() == TrafficErrc::kTimestepOutOfRange);
    CHECK(traffic_error([] { load("", "", "0,0,0\n2,0,0\n"); }).code() == TrafficErrc::kNonContiguousTimesteps);
    CHECK(traffic_error([] { load("", "", "1,0,0\n"); }).code() == TrafficErrc::kNonContiguousTimesteps);
    CHECK(traffic_error([] { load("5,A,0\n", "", "0,0,0\n"); }).code() == TrafficErrc::kNonContiguousTimesteps);

    auto schema = [](std::string counts, std::string totals) {
      return traffic_error([&] {
        std::istringstream c(counts), v(kVehiclesHeader), t(totals);
        load_fcd_csv(c, v, t);
      }).code();
    };
    CHECK(schema("time,edge,count\n", kTotalsHeader + std::string("0,0,0\n")) == TrafficErrc::kSchemaViolation);
    CHECK(schema(kCountsHeader + std::string("0,A\n"), kTotalsHeader + std::string("0,0,0\n")) == TrafficErrc::kSchemaViolation);
    CHECK(schema(kCountsHeader + std::string("0,A,x\n"), kTotalsHeader + std::string("0,0,0\n")) == TrafficErrc::kSchemaViolation);
    CHECK(schema(kCountsHeader + std::string("0,A,-1\n"), kTotalsHeader + std::string("0,0,0\n")) == TrafficErrc::kSchemaViolation);
    CHECK(schema(kCountsHeader + std::string("0,A,0\n0,A,0\n"), kTotalsHeader + std::string("0,0,0\n")) == TrafficErrc::kSchemaViolation);
  }

  TEST_CASE("CRLF and BOM input is accepted") {
    std::istringstream c("\xEF\xBB\xBFtimestep,edge_id,count\r\n0,A,1\r\n");
    std::istringstream v("timestep,vehicle_id,speed,lat,lon\r\n0,v1,3,1,2\r\n");
    std::istringstream t("timestep,active_vehicles,mean_speed\r\n0,1,3\r\n");
    const auto s = load_fcd_csv(c, v, t);
    CHECK(s.at(0).edge_counts.at("A") == 1);
  }

  TEST_CASE("busiest-edge markers sit at the polyline midpoint") {
    const auto net = line_network();
    const auto s = single_step({{"A", 3}, {"B", 1}}, {{"v1", 1}, {"v2", 2}, {"v3", 3}, {"v4", 4}});
    const auto ms = markers_for(s, net, 0, MarkerMode::kBusiestEdges, 10);
    REQUIRE(ms.size() == 2);
    CHECK(ms[0].id == "edge:A");
    CHECK(ms[0].popup_text == std::optional<std::string>("edge A: 3 vehicles"));
    // Edge A is a horizontal segment; its midpoint is halfway in longitude.
    CHECK(ms[0].lat == doctest::Approx(20.59).epsilon(1e-12));
    CHECK(ms[0].lon == doctest::Approx(-100.39).epsilon(1e-12));

    const auto vs = markers_for(s, net, 0, MarkerMode::kSlowestVehicles, 2);
    REQUIRE(vs.size() == 2);
    CHECK(vs[0].id == "vehicle:v1");
    CHECK(vs[0].lat == 20.59);

    const auto bad = single_step({{"Z", 1}}, {{"v1", 1}});
    CHECK(traffic_error([&] { markers_for(bad, net, 0, MarkerMode::kBusiestEdges, 10); }).code() == TrafficErrc::kUnknownEdge);
  }

  TEST_CASE("timestep patch writes every edge weight") {
    const auto net = line_network();
    const auto s = load("0,A,2\n0,B,0\n", "0,v1,1,0,0\n0,v2,1,0,0\n", "0,2,1\n");
    const auto p = timestep_patch(s, net, 0, MarkerMode::kBusiestEdges, 10);
    REQUIRE(p.edges_data);
    REQUIRE(p.edges_data->size() == 3);
    CHECK(element_weight((*p.edges_data)[0].data, "weight") == 2.0);
    CHECK(element_weight((*p.edges_data)[1].data, "weight") == 0.0);
    CHECK(element_weight((*p.edges_data)[2].data, "weight") == 0.0);
    REQUIRE(p.markers_data);
    CHECK(p.markers_data->size() == 1);
    const auto q = timestep_patch(s, net, 0, MarkerMode::kBusiestEdges, 10, "flow");
    CHECK(element_weight((*q.edges_data)[0].data, "flow") == 2.0);
  }

  TEST_CASE("applying a timestep is idempotent") {
    const auto net = line_network();
    const auto s = load("0,A,2\n0,C,1\n", "0,v1,1,0,0\n0,v2,1,0,0\n0,v3,5,0,0\n", "0,3,2.3333\n");
    Session session(NetworkRecords{net.nodes(), net.edges(), {}});
    session.apply_patch(nlohmann::json{{"edge_options", {{"width_method", "SCALE"}}}});
    session.apply_patch(timestep_patch(s, net, 0, MarkerMode::kBusiestEdges));
    const auto first = session.state_json();
    const auto first_bundle = *session.snapshot()->bundle;
    session.apply_patch(timestep_patch(s, net, 0, MarkerMode::kBusiestEdges));
    auto second = session.state_json();
    CHECK(second.at("bundle_version") > first.at("bundle_version"));
    second["bundle_version"] = first.at("bundle_version");
    CHECK(second == first);
    auto second_bundle = *session.snapshot()->bundle;
    second_bundle.version = first_bundle.version;
    CHECK(second_bundle == first_bundle);
    const auto widths = session.snapshot()->edge_styles->width_px;
    CHECK(widths[0] == doctest::Approx(10));
    CHECK(widths[1] == doctest::Approx(1));
  }

  TEST_CASE("timestep view and totals documents") {
    const auto s = load("0,A,1\n1,B,2\n", "0,v1,3,0,0\n1,v1,1,0,0\n1,v2,0,0,0\n", "0,1,3\n1,2,0.5\n");
    const auto v = timestep_view(s, 1, MarkerMode::kSlowestVehicles, 10);
    CHECK(v.at("time") == 1);
    CHECK(v.at("mode") == "slowest_vehicles");
    CHECK(v.at("top_edges").size() == 1);
    CHECK(v.at("slowest_vehicles").size() == 2);
    CHECK(v.at("totals").at("active_vehicles") == 2);
    const auto t = totals_json(s);
    CHECK(t.dump().find("0.5") != std::string::npos);
    CHECK(marker_mode_from_string("busiest_edges") == MarkerMode::kBusiestEdges);
  }

  TEST_CASE("synthetic runs load and conserve vehicles") {
    const auto net = bench::synthesize_grid(400);
    const auto csv = synthesize_fcd(net, 300, 120, 5);
    std::istringstream c(csv.edge_counts), v(csv.vehicles), t(csv.totals);
    const auto s = load_fcd_csv(c, v, t);
    REQUIRE(s.size() == 300);
    bool saw_stopped = false;
    for (std::int64_t i = 0; i < 300; ++i) {
      std::int64_t sum = 0;
      for (const auto& [id, n] : s.at(i).edge_counts) {
        CHECK(net.edge_index(id).has_value());
        sum += n;
      }
      CHECK(sum == static_cast<std::int64_t>(s.at(i).vehicles.size()));
      for (const auto& veh : s.at(i).vehicles) saw_stopped |= veh.speed == 0.0;
    }
    CHECK(saw_stopped);
    const auto again = synthesize_fcd(net, 300, 120, 5);
    CHECK(again.vehicles == csv.vehicles);

    testing::TempDir dir;
    write_fcd_dir(csv, dir.path().string());
    const auto from_dir = load_fcd_dir(dir.path().string());
    CHECK(from_dir.size() == 300);
    CHECK(top_k_edges(from_dir, 299, 5) == top_k_edges(s, 299, 5));
  }
}
