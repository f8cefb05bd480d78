#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "helpers.hpp"
#include "streetlens/geo.hpp"
#include "streetlens/tessellate.hpp"

using namespace streetlens;
using testing::edge;
using testing::node;

namespace {

ResolvedStyle edge_styles(const StreetNetwork& net, StyleOptions o = default_options(ElementKind::kEdge)) {
  return resolve_edge_styles(net, o);
}

StreetNetwork one_edge(std::vector<LatLon> coords) {
  return build_network({node("a", coords.front().lat, coords.front().lon), node("b", coords.back().lat, coords.back().lon)},
                       {edge("e", "a", "b", coords)});
}

double tri_area(const EdgeMesh& m, std::uint32_t i, std::uint32_t j, std::uint32_t k) {
  auto x = [&](std::uint32_t v) { return static_cast<double>(m.positions[2 * v]); };
  auto y = [&](std::uint32_t v) { return static_cast<double>(m.positions[2 * v + 1]); };
  return 0.5 * std::abs((x(j) - x(i)) * (y(k) - y(i)) - (x(k) - x(i)) * (y(j) - y(i)));
}

}  // namespace

TEST_SUITE("tessellate") {
  TEST_CASE("one straight edge is one quad") {
    const auto net = one_edge({{20.5, -100.4}, {20.51, -100.39}});
    const auto mesh = tessellate_edges(net, edge_styles(net), 12);
    CHECK(mesh.vertex_count() == 4);
    CHECK(mesh.positions.size() == 8);
    CHECK(mesh.indices == std::vector<std::uint32_t>{0, 1, 2, 2, 1, 3});
    CHECK(mesh.element_index == std::vector<std::uint32_t>{0, 0, 0, 0});
  }

  TEST_CASE("horizontal segment extrudes only in y") {
    const LatLon a{20.5, -100.4}, b{20.5, -100.3};
    const auto net = one_edge({a, b});
    auto o = default_options(ElementKind::kEdge);
    o.default_width_px = 4;
    const double zoom = 12;
    const auto mesh = tessellate_edges(net, edge_styles(net, o), zoom);
    const double half = 4.0 / geo::world_scale(zoom) / 2.0;
    const auto pa = geo::project(a), pb = geo::project(b);
    const std::vector<geo::MercatorPoint> expected = {{pa.x, pa.y + half}, {pa.x, pa.y - half}, {pb.x, pb.y + half}, {pb.x, pb.y - half}};
    REQUIRE(mesh.vertex_count() == 4);
    std::multiset<std::pair<double, double>> got, want;
    for (std::size_t v = 0; v < 4; ++v) {
      got.insert({mesh.positions[2 * v], mesh.positions[2 * v + 1]});
      const float fx = static_cast<float>(expected[v].x), fy = static_cast<float>(expected[v].y);
      want.emplace(static_cast<double>(fx), static_cast<double>(fy));
    }
    for (std::size_t v = 0; v < 4; ++v) {
      const double x = mesh.positions[2 * v], y = mesh.positions[2 * v + 1];
      const bool at_a = std::abs(x - pa.x) < 1e-7;
      CHECK((at_a || std::abs(x - pb.x) < 1e-7));
      CHECK(std::abs(std::abs(y - pa.y) - half) < 1e-7);
    }
    CHECK(got == want);
  }

  TEST_CASE("hidden edges contribute nothing") {
    const auto net = build_network({node("a", 0, 0), node("b", 0, 1)},
                                   {edge("e1", "a", "b", {{0, 0}, {0, 1}}, {{"visible", false}}), edge("e2", "b", "a", {{0, 1}, {0, 0}})});
    auto o = default_options(ElementKind::kEdge);
    o.visibility_method = VisibilityMethod::kCustom;
    const auto styles = edge_styles(net, o);
    const auto mesh = tessellate_edges(net, styles, 10);
    CHECK(mesh.vertex_count() == 4);
    for (auto e : mesh.element_index) CHECK(e == 1);
    CHECK(place_arrows(net, styles).size() == 1);
  }

  TEST_CASE("accounting, traceability and positive triangle area on random polylines") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    for (int round = 0; round < 40; ++round) {
      std::vector<NodeRecord> nodes;
      std::vector<EdgeRecord> edges;
      const int n = 3 + round % 5;
      for (int i = 0; i < n; ++i) nodes.push_back(node(std::to_string(i), 20 + jitter(rng), -100 + jitter(rng)));
      std::size_t segments = 0;
      std::set<std::uint32_t> visible;
      for (int i = 0; i < 12; ++i) {
        const auto& s = nodes[rng() % n];
        const auto& t = nodes[rng() % n];
        std::vector<LatLon> pts{{s.lat, s.lon}};
        const int mid = rng() % 4;
        for (int k = 0; k < mid; ++k) pts.push_back({20 + jitter(rng), -100 + jitter(rng)});
        if (rng() % 4 == 0) pts.push_back(pts.back());  // zero-length segment
        pts.push_back({t.lat, t.lon});
        const bool show = rng() % 5 != 0;
        edges.push_back(edge("e" + std::to_string(i), s.id, t.id, pts, {{"visible", show}, {"weight", jitter(rng)}}));
        if (show) {
          std::size_t positive = 0;
          for (std::size_t k = 1; k < pts.size(); ++k) {
            const auto a = geo::project(pts[k - 1]), b = geo::project(pts[k]);
            if (a.x != b.x || a.y != b.y) ++positive;
          }
          segments += positive;
          if (positive > 0) visible.insert(static_cast<std::uint32_t>(i));
        }
      }
      const auto net = build_network(nodes, edges);
      auto o = default_options(ElementKind::kEdge);
      o.visibility_method = VisibilityMethod::kCustom;
      o.width_method = ScaleMethod::kScale;
      const auto mesh = tessellate_edges(net, edge_styles(net, o), 14);
      CHECK(mesh.vertex_count() == 4 * segments);
      CHECK(mesh.indices.size() == 6 * segments);
      CHECK(mesh.indices.size() % 3 == 0);
      CHECK(mesh.positions.size() == 2 * mesh.vertex_count());
      CHECK(mesh.element_index.size() == mesh.vertex_count());
      for (auto idx : mesh.indices) CHECK(idx < mesh.vertex_count());
      for (std::size_t t = 0; t < mesh.indices.size(); t += 3) {
        CHECK(tri_area(mesh, mesh.indices[t], mesh.indices[t + 1], mesh.indices[t + 2]) > 0.0);
      }
      CHECK(std::set<std::uint32_t>(mesh.element_index.begin(), mesh.element_index.end()) == visible);
    }
  }

  TEST_CASE("vertex colours carry the folded alpha") {
    const auto net = one_edge({{0, 0}, {0, 1}});
    auto o = default_options(ElementKind::kEdge);
    o.default_alpha = 0.5;
    o.default_color = Rgba{10, 20, 30, 255};
    const auto mesh = tessellate_edges(net, edge_styles(net, o), 5);
    for (const auto& c : mesh.colors) CHECK(c == Rgba{10, 20, 30, 128});
  }

  TEST_CASE("arrow on a straight edge sits at the projected midpoint") {
    const LatLon a{20.5, -100.4}, b{20.52, -100.37};
    const auto net = one_edge({a, b});
    const auto arrows = place_arrows(net, edge_styles(net));
    REQUIRE(arrows.size() == 1);
    const auto pa = geo::project(a), pb = geo::project(b);
    CHECK(arrows.centers[0] == static_cast<float>((pa.x + pb.x) / 2));
    CHECK(arrows.centers[1] == static_cast<float>((pa.y + pb.y) / 2));
    CHECK(arrows.rotation_rad[0] == doctest::Approx(std::atan2(pb.y - pa.y, pb.x - pa.x)));
    CHECK(arrows.size_px[0] == 6.0f);
    CHECK(arrows.icon[0] == kArrowIcon);
  }

  TEST_CASE("arc-length midpoint of a bent polyline") {
    // Projected segment lengths 1 and 3 (in units of L).
    const double L = 1e-4;
    const geo::MercatorPoint p0{0.3, 0.4}, p1{0.3 + L, 0.4}, p2{0.3 + L, 0.4 + 3 * L};
    const std::vector<LatLon> pts{geo::unproject(p0), geo::unproject(p1), geo::unproject(p2)};
    const auto mid = polyline_midpoint(pts);
    CHECK(mid.point.x == doctest::Approx(p1.x).epsilon(1e-9));
    CHECK(mid.point.y == doctest::Approx(p1.y + L).epsilon(1e-9));
    CHECK(mid.heading_rad == doctest::Approx(M_PI / 2));
    const auto arrows = place_arrows(one_edge(pts), edge_styles(one_edge(pts)));
    CHECK(arrows.rotation_rad[0] == doctest::Approx(M_PI / 2));
  }

  TEST_CASE("arrow sizes follow the width clamp and can be disabled") {
    const auto net = build_network({node("a", 0, 0), node("b", 0, 1)},
                                   {edge("w1", "a", "b", {{0, 0}, {0, 1}}, {{"width", 1.0}}),
                                    edge("w4", "a", "b", {{0, 0}, {0, 1}}, {{"width", 4.0}}),
                                    edge("w10", "a", "b", {{0, 0}, {0, 1}}, {{"width", 10.0}})});
    auto o = default_options(ElementKind::kEdge);
    o.width_method = ScaleMethod::kCustom;
    const auto styles = edge_styles(net, o);
    const auto arrows = place_arrows(net, styles);
    CHECK(arrows.size_px == std::vector<float>{6, 12, 24});
    CHECK(place_arrows(net, styles, false).size() == 0);
    for (float r : arrows.rotation_rad) CHECK(std::abs(r) <= M_PI);
  }

  TEST_CASE("node sprites in element order") {
    const auto net = build_network({node("a", 0, 0), node("b", 1, 1), node("c", 2, 2)}, {});
    const auto sprites = build_sprites(ElementKind::kNode, net, resolve_node_styles(net, default_options(ElementKind::kNode)));
    REQUIRE(sprites.size() == 3);
    CHECK(sprites.element_index == std::vector<std::uint32_t>{0, 1, 2});
    CHECK(sprites.icon == std::vector<std::uint16_t>{kNodeIcon, kNodeIcon, kNodeIcon});
    CHECK(sprites.centers[2] == static_cast<float>(geo::project(1, 1).x));
    for (float s : sprites.size_px) CHECK(s > 0);
  }

  TEST_CASE("marker icons resolve through the icon table") {
    MarkerRecord w = testing::marker("w", 0, 0);
    w.icon_id = "warning";
    MarkerRecord p = testing::marker("p", 1, 1);
    const auto net = build_network({}, {}, {w, p});
    const auto styles = resolve_marker_styles(net, default_options(ElementKind::kMarker));
    IconTable icons;
    CHECK(icons.add("warning") == 2);
    CHECK(icons.add("warning") == 2);
    const auto sprites = build_sprites(ElementKind::kMarker, net, styles, icons);
    CHECK(sprites.icon == std::vector<std::uint16_t>{2, 1});
    try {
      build_sprites(ElementKind::kMarker, net, styles, IconTable{});
      FAIL("expected UnknownIcon");
    } catch (const TessellateError& e) {
      CHECK(e.code() == TessellateErrc::kUnknownIcon);
    }
  }
}
