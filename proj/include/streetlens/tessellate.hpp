#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "streetlens/geo.hpp"
#include "streetlens/network.hpp"
#include "streetlens/style.hpp"

namespace streetlens {

// Edge triangle mesh in normalised Mercator space.
struct EdgeMesh {
  std::vector<float> positions;          // x, y per vertex
  std::vector<Rgba> colors;              // per vertex, alpha folded in
  std::vector<std::uint32_t> element_index;  // per vertex
  std::vector<std::uint32_t> indices;    // triangle list

  std::size_t vertex_count() const noexcept { return colors.size(); }

  friend bool operator==(const EdgeMesh&, const EdgeMesh&) = default;
};

// Structure-of-arrays sprite instance buffer.
struct SpriteInstances {
  std::vector<float> centers;  // x, y per instance
  std::vector<float> size_px;
  std::vector<float> rotation_rad;
  std::vector<Rgba> colors;
  std::vector<std::uint16_t> icon;
  std::vector<std::uint32_t> element_index;

  std::size_t size() const noexcept { return size_px.size(); }
  void push(geo::MercatorPoint center, float size, float rotation, Rgba color, std::uint16_t icon_id,
            std::uint32_t element);

  friend bool operator==(const SpriteInstances&, const SpriteInstances&) = default;
};

// Ordered icon id list; sprite icon fields index into it. Slot 0 is the
// node disc, slot 1 the default marker pin.
class IconTable {
public:
  IconTable() : ids_{"disc", "pin"} {}
  explicit IconTable(std::vector<std::string> ids) : ids_(std::move(ids)) {}

  std::uint16_t add(std::string_view id);
  std::optional<std::uint16_t> find(std::string_view id) const;
  const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
  std::vector<std::string> ids_;
};

struct RenderBundle {
  EdgeMesh edge_mesh;
  SpriteInstances node_sprites;
  SpriteInstances arrow_sprites;
  SpriteInstances marker_sprites;
  std::uint64_t version = 0;
  double reference_zoom = 0.0;
  std::vector<std::string> icon_table;

  friend bool operator==(const RenderBundle&, const RenderBundle&) = default;
};

enum class TessellateErrc { kUnknownIcon };

class TessellateError : public Error {
public:
  TessellateError(TessellateErrc code, std::string message)
      : Error(std::move(message)), code_(code) {}
  TessellateErrc code() const noexcept { return code_; }

private:
  TessellateErrc code_;
};

// Arrow sizing: clamp(width_px * kArrowWidthFactor, kArrowMinPx, kArrowMaxPx).
inline constexpr double kArrowWidthFactor = 3.0;
inline constexpr double kArrowMinPx = 6.0;
inline constexpr double kArrowMaxPx = 24.0;
// Arrow sprites use an implicit glyph; their icon field is always this value.
inline constexpr std::uint16_t kArrowIcon = 0;
inline constexpr std::uint16_t kNodeIcon = 0;

// One quad per positive-length segment of each visible edge, extruded
// +-width/2 along the segment normal. Width is frozen in Mercator units at
// `reference_zoom`.
EdgeMesh tessellate_edges(const StreetNetwork& net, const ResolvedStyle& edge_styles,
                          double reference_zoom);

// Point at half the projected arc length of a polyline, plus the heading
// (atan2 in projected space) of the segment containing it.
struct PolylineMidpoint {
  geo::MercatorPoint point;
  double heading_rad = 0.0;
};
PolylineMidpoint polyline_midpoint(const std::vector<LatLon>& coordinates);

SpriteInstances place_arrows(const StreetNetwork& net, const ResolvedStyle& edge_styles,
                             bool show_arrows = true);

// Node or marker sprites for visible elements. Markers resolve their icon id
// through `icons`; an unregistered id throws TessellateError(kUnknownIcon).
SpriteInstances build_sprites(ElementKind kind, const StreetNetwork& net, const ResolvedStyle& styles,
                              const IconTable& icons = IconTable{});

}  // namespace streetlens
