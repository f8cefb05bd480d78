#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "streetlens/geo.hpp"
#include "streetlens/network.hpp"
#include "streetlens/style.hpp"

namespace streetlens {

enum class HitKind : std::uint8_t { kNone, kEdge, kNode, kMarker };

std::string_view to_string(HitKind kind);

struct Hit {
  HitKind kind = HitKind::kNone;
  std::string id;
  std::uint32_t index = 0;
  double distance_px = 0.0;
  DataMap data;
};

// Minimum click tolerances in screen pixels.
inline constexpr double kEdgeMinHalfWidthPx = 6.0;
inline constexpr double kDiscMinRadiusPx = 8.0;

struct HitIndexOptions {
  bool nodes = true;
  bool edges = true;
  bool markers = true;
  // Entry boxes are inflated for this zoom; queries below it widen their
  // search window to compensate.
  double min_zoom = 3.0;
  std::uint64_t version = 0;
};

enum class HitErrc { kStaleIndex };

class HitError : public Error {
public:
  HitError(HitErrc code, std::string message) : Error(std::move(message)), code_(code) {}
  HitErrc code() const noexcept { return code_; }

private:
  HitErrc code_;
};

// Immutable R-tree over edge, node and marker hit regions. Regions are
// defined in screen pixels: an edge is its centreline dilated by
// max(width/2, 6) px with round caps, a node or marker a disc of radius
// max(size/2, 8) px.
class HitIndex {
public:
  HitIndex(std::shared_ptr<const StreetNetwork> net, const NetworkStyles& styles,
           const HitIndexOptions& options);
  ~HitIndex();
  HitIndex(HitIndex&&) noexcept;
  HitIndex& operator=(HitIndex&&) noexcept;

  std::uint64_t version() const noexcept { return version_; }
  std::size_t entry_count() const noexcept { return entries_.size(); }
  const StreetNetwork& network() const noexcept { return *net_; }

  // Best hit at `screen` under `viewport`: marker > node > edge, then
  // smallest pixel distance, then smallest id. kind == kNone when nothing is
  // within its tolerance.
  Hit query(geo::ScreenPoint screen, const geo::Viewport& viewport) const;

  struct Entry {
    HitKind kind;
    std::uint32_t element;
    double radius_px;
    // Edges: range into the projected polyline store. Discs: single point.
    std::uint32_t first_point;
    std::uint32_t point_count;
  };

  const std::vector<Entry>& entries() const noexcept { return entries_; }

private:
  struct Tree;

  std::shared_ptr<const StreetNetwork> net_;
  std::vector<Entry> entries_;
  std::vector<geo::MercatorPoint> points_;
  std::unique_ptr<Tree> tree_;
  double min_zoom_;
  double max_radius_px_ = 0.0;
  std::uint64_t version_;
};

HitIndex build_hit_index(std::shared_ptr<const StreetNetwork> net, const NetworkStyles& styles,
                         const HitIndexOptions& options = {});

// Throws HitError(kStaleIndex) when the index was built for another bundle
// version than `live_version`.
Hit query_point(const HitIndex& index, geo::ScreenPoint screen, const geo::Viewport& viewport,
                std::uint64_t live_version);

// Pixel distance from `p` to segment [a, b], all in Mercator units, scaled
// by `scale` pixels per world unit.
double segment_distance_px(geo::MercatorPoint p, geo::MercatorPoint a, geo::MercatorPoint b, double scale);

}  // namespace streetlens
