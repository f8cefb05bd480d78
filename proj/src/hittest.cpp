#include "streetlens/hittest.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <fmt/format.h>

namespace streetlens {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

using BgPoint = bg::model::point<double, 2, bg::cs::cartesian>;
using BgBox = bg::model::box<BgPoint>;
using TreeValue = std::pair<BgBox, std::uint32_t>;

struct HitIndex::Tree {
  bgi::rtree<TreeValue, bgi::rstar<16>> rtree;
};

std::string_view to_string(HitKind kind) {
  switch (kind) {
    case HitKind::kNone: return "none";
    case HitKind::kEdge: return "edge";
    case HitKind::kNode: return "node";
    case HitKind::kMarker: return "marker";
  }
  return "?";
}

namespace {

double screen_segment_distance(geo::ScreenPoint p, geo::ScreenPoint a, geo::ScreenPoint b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  const double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  // Clamped cases measure to the exact endpoint so edges sharing a node tie exactly.
  if (t <= 0.0) return std::hypot(p.x - a.x, p.y - a.y);
  if (t >= 1.0) return std::hypot(p.x - b.x, p.y - b.y);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

}  // namespace

double segment_distance_px(geo::MercatorPoint p, geo::MercatorPoint a, geo::MercatorPoint b, double scale) {
  return screen_segment_distance({p.x * scale, p.y * scale}, {a.x * scale, a.y * scale}, {b.x * scale, b.y * scale});
}

HitIndex::HitIndex(std::shared_ptr<const StreetNetwork> net, const NetworkStyles& styles,
                   const HitIndexOptions& options)
    : net_(std::move(net)), tree_(std::make_unique<Tree>()), min_zoom_(options.min_zoom),
      version_(options.version) {
  const double inflate_per_px = 1.0 / geo::world_scale(min_zoom_);
  std::vector<TreeValue> values;

  auto add = [&](Entry e, double min_x, double min_y, double max_x, double max_y) {
    const double pad = e.radius_px * inflate_per_px;
    max_radius_px_ = std::max(max_radius_px_, e.radius_px);
    values.emplace_back(BgBox({min_x - pad, min_y - pad}, {max_x + pad, max_y + pad}),
                        static_cast<std::uint32_t>(entries_.size()));
    entries_.push_back(e);
  };

  if (options.edges) {
    const auto& edges = net_->edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!styles.edges.visible[i]) continue;
      const auto first = static_cast<std::uint32_t>(points_.size());
      double min_x = 1.0, min_y = 1.0, max_x = 0.0, max_y = 0.0;
      for (const auto& c : edges[i].coordinates) {
        const auto p = geo::project(c);
        points_.push_back(p);
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
        max_x = std::max(max_x, p.x);
        max_y = std::max(max_y, p.y);
      }
      const double radius = std::max(styles.edges.width_px[i] / 2.0, kEdgeMinHalfWidthPx);
      add({HitKind::kEdge, static_cast<std::uint32_t>(i), radius, first,
           static_cast<std::uint32_t>(edges[i].coordinates.size())},
          min_x, min_y, max_x, max_y);
    }
  }

  auto add_discs = [&](HitKind kind, const auto& records, const ResolvedStyle& style) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!style.visible[i]) continue;
      const auto p = geo::project(records[i].lat, records[i].lon);
      const auto first = static_cast<std::uint32_t>(points_.size());
      points_.push_back(p);
      const double radius = std::max(style.size_px[i] / 2.0, kDiscMinRadiusPx);
      add({kind, static_cast<std::uint32_t>(i), radius, first, 1}, p.x, p.y, p.x, p.y);
    }
  };
  if (options.nodes) add_discs(HitKind::kNode, net_->nodes(), styles.nodes);
  if (options.markers) add_discs(HitKind::kMarker, net_->markers(), styles.markers);

  // Packing constructor bulk-loads the tree.
  tree_->rtree = decltype(tree_->rtree)(values.begin(), values.end());
}

HitIndex::~HitIndex() = default;
HitIndex::HitIndex(HitIndex&&) noexcept = default;
HitIndex& HitIndex::operator=(HitIndex&&) noexcept = default;

namespace {

int priority(HitKind k) {
  switch (k) {
    case HitKind::kMarker: return 3;
    case HitKind::kNode: return 2;
    case HitKind::kEdge: return 1;
    case HitKind::kNone: return 0;
  }
  return 0;
}

const std::string& element_id(const StreetNetwork& net, HitKind kind, std::uint32_t i) {
  switch (kind) {
    case HitKind::kEdge: return net.edges()[i].id;
    case HitKind::kNode: return net.nodes()[i].id;
    default: return net.markers()[i].id;
  }
}

const DataMap& element_data(const StreetNetwork& net, HitKind kind, std::uint32_t i) {
  switch (kind) {
    case HitKind::kEdge: return net.edges()[i].data;
    case HitKind::kNode: return net.nodes()[i].data;
    default: return net.markers()[i].data;
  }
}

}  // namespace

Hit HitIndex::query(geo::ScreenPoint screen, const geo::Viewport& viewport) const {
  const auto p = geo::from_screen(screen, viewport);
  const double scale = geo::world_scale(viewport.zoom);
  double extra = 0.0;
  if (viewport.zoom < min_zoom_) {
    extra = max_radius_px_ * (1.0 / scale - 1.0 / geo::world_scale(min_zoom_));
  }
  const BgBox window({p.x - extra, p.y - extra}, {p.x + extra, p.y + extra});

  const Entry* best = nullptr;
  double best_distance = 0.0;
  for (auto it = tree_->rtree.qbegin(bgi::intersects(window)); it != tree_->rtree.qend(); ++it) {
    const Entry& e = entries_[it->second];
    // The tree narrows candidates in world space; distances are measured in
    // screen space, where the tolerances are defined.
    double d;
    if (e.kind == HitKind::kEdge) {
      d = std::numeric_limits<double>::infinity();
      auto a = geo::to_screen(points_[e.first_point], viewport);
      for (std::uint32_t s = 1; s < e.point_count; ++s) {
        const auto b = geo::to_screen(points_[e.first_point + s], viewport);
        d = std::min(d, screen_segment_distance(screen, a, b));
        a = b;
      }
    } else {
      const auto c = geo::to_screen(points_[e.first_point], viewport);
      d = std::hypot(screen.x - c.x, screen.y - c.y);
    }
    if (!(d <= e.radius_px)) continue;

    bool better = best == nullptr;
    if (!better) {
      const int pa = priority(e.kind), pb = priority(best->kind);
      if (pa != pb) {
        better = pa > pb;
      } else if (d != best_distance) {
        better = d < best_distance;
      } else {
        better = element_id(*net_, e.kind, e.element) < element_id(*net_, best->kind, best->element);
      }
    }
    if (better) {
      best = &e;
      best_distance = d;
    }
  }

  Hit hit;
  if (best == nullptr) return hit;
  hit.kind = best->kind;
  hit.index = best->element;
  hit.id = element_id(*net_, best->kind, best->element);
  hit.distance_px = best_distance;
  hit.data = element_data(*net_, best->kind, best->element);
  return hit;
}

HitIndex build_hit_index(std::shared_ptr<const StreetNetwork> net, const NetworkStyles& styles,
                         const HitIndexOptions& options) {
  return HitIndex(std::move(net), styles, options);
}

Hit query_point(const HitIndex& index, geo::ScreenPoint screen, const geo::Viewport& viewport,
                std::uint64_t live_version) {
  if (index.version() != live_version) {
    throw HitError(HitErrc::kStaleIndex,
                   fmt::format("hit index version {} does not match bundle version {}",
                               index.version(), live_version));
  }
  return index.query(screen, viewport);
}

}  // namespace streetlens
