#include "streetlens/tessellate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace streetlens {

void SpriteInstances::push(geo::MercatorPoint center, float size, float rotation, Rgba color,
                           std::uint16_t icon_id, std::uint32_t element) {
  centers.push_back(static_cast<float>(center.x));
  centers.push_back(static_cast<float>(center.y));
  size_px.push_back(size);
  rotation_rad.push_back(rotation);
  colors.push_back(color);
  icon.push_back(icon_id);
  element_index.push_back(element);
}

std::uint16_t IconTable::add(std::string_view id) {
  if (auto slot = find(id)) return *slot;
  if (ids_.size() >= std::numeric_limits<std::uint16_t>::max()) {
    throw TessellateError(TessellateErrc::kUnknownIcon, "icon table is full");
  }
  ids_.emplace_back(id);
  return static_cast<std::uint16_t>(ids_.size() - 1);
}

std::optional<std::uint16_t> IconTable::find(std::string_view id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<std::uint16_t>(it - ids_.begin());
}

EdgeMesh tessellate_edges(const StreetNetwork& net, const ResolvedStyle& edge_styles,
                          double reference_zoom) {
  EdgeMesh mesh;
  const double scale = geo::world_scale(reference_zoom);
  const auto& edges = net.edges();

  std::size_t segments = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edge_styles.visible[i]) segments += edges[i].coordinates.size() - 1;
  }
  mesh.positions.reserve(segments * 8);
  mesh.colors.reserve(segments * 4);
  mesh.element_index.reserve(segments * 4);
  mesh.indices.reserve(segments * 6);

  std::vector<geo::MercatorPoint> projected;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!edge_styles.visible[i]) continue;
    const double half = edge_styles.width_px[i] / scale / 2.0;
    const Rgba color = fold_alpha(edge_styles.color[i], edge_styles.alpha[i]);
    const auto element = static_cast<std::uint32_t>(i);

    projected.clear();
    for (const auto& c : edges[i].coordinates) projected.push_back(geo::project(c));

    for (std::size_t s = 0; s + 1 < projected.size(); ++s) {
      const auto a = projected[s];
      const auto b = projected[s + 1];
      const double dx = b.x - a.x;
      const double dy = b.y - a.y;
      const double len = std::hypot(dx, dy);
      if (len == 0.0) continue;
      const double nx = -dy / len * half;
      const double ny = dx / len * half;

      const auto base = static_cast<std::uint32_t>(mesh.colors.size());
      for (const auto& v : {geo::MercatorPoint{a.x + nx, a.y + ny}, geo::MercatorPoint{a.x - nx, a.y - ny},
                            geo::MercatorPoint{b.x + nx, b.y + ny}, geo::MercatorPoint{b.x - nx, b.y - ny}}) {
        mesh.positions.push_back(static_cast<float>(v.x));
        mesh.positions.push_back(static_cast<float>(v.y));
        mesh.colors.push_back(color);
        mesh.element_index.push_back(element);
      }
      for (std::uint32_t k : {0u, 1u, 2u, 2u, 1u, 3u}) mesh.indices.push_back(base + k);
    }
  }
  return mesh;
}

PolylineMidpoint polyline_midpoint(const std::vector<LatLon>& coordinates) {
  std::vector<geo::MercatorPoint> pts;
  pts.reserve(coordinates.size());
  for (const auto& c : coordinates) pts.push_back(geo::project(c));

  std::vector<double> lengths(pts.size() > 0 ? pts.size() - 1 : 0);
  double total = 0.0;
  for (std::size_t s = 0; s < lengths.size(); ++s) {
    lengths[s] = std::hypot(pts[s + 1].x - pts[s].x, pts[s + 1].y - pts[s].y);
    total += lengths[s];
  }
  if (pts.empty()) return {};
  if (total == 0.0) return {pts.front(), 0.0};

  const double half = total / 2.0;
  double walked = 0.0;
  for (std::size_t s = 0; s < lengths.size(); ++s) {
    if (lengths[s] == 0.0) continue;
    const bool last = s + 1 == lengths.size();
    if (walked + lengths[s] >= half || last) {
      const double f = std::clamp((half - walked) / lengths[s], 0.0, 1.0);
      const auto a = pts[s];
      const auto b = pts[s + 1];
      return {{a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f}, std::atan2(b.y - a.y, b.x - a.x)};
    }
    walked += lengths[s];
  }
  return {pts.back(), 0.0};
}

SpriteInstances place_arrows(const StreetNetwork& net, const ResolvedStyle& edge_styles,
                             bool show_arrows) {
  SpriteInstances out;
  if (!show_arrows) return out;
  const auto& edges = net.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!edge_styles.visible[i]) continue;
    const auto mid = polyline_midpoint(edges[i].coordinates);
    const double size = std::clamp(edge_styles.width_px[i] * kArrowWidthFactor, kArrowMinPx, kArrowMaxPx);
    out.push(mid.point, static_cast<float>(size), static_cast<float>(mid.heading_rad),
             fold_alpha(edge_styles.color[i], edge_styles.alpha[i]), kArrowIcon,
             static_cast<std::uint32_t>(i));
  }
  return out;
}

SpriteInstances build_sprites(ElementKind kind, const StreetNetwork& net, const ResolvedStyle& styles,
                              const IconTable& icons) {
  SpriteInstances out;
  if (kind == ElementKind::kNode) {
    const auto& nodes = net.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!styles.visible[i]) continue;
      out.push(geo::project(nodes[i].lat, nodes[i].lon), static_cast<float>(styles.size_px[i]), 0.0f,
               fold_alpha(styles.color[i], styles.alpha[i]), kNodeIcon, static_cast<std::uint32_t>(i));
    }
  } else if (kind == ElementKind::kMarker) {
    const auto& markers = net.markers();
    for (std::size_t i = 0; i < markers.size(); ++i) {
      if (!styles.visible[i]) continue;
      auto slot = icons.find(styles.icon_id[i]);
      if (!slot) {
        throw TessellateError(TessellateErrc::kUnknownIcon,
                              fmt::format("marker '{}' references unknown icon '{}'", markers[i].id,
                                          styles.icon_id[i]));
      }
      out.push(geo::project(markers[i].lat, markers[i].lon), static_cast<float>(styles.size_px[i]), 0.0f,
               fold_alpha(styles.color[i], styles.alpha[i]), *slot, static_cast<std::uint32_t>(i));
    }
  } else {
    throw Error("build_sprites supports node and marker kinds only");
  }
  return out;
}

}  // namespace streetlens
