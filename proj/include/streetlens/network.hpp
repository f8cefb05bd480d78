#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "streetlens/error.hpp"

namespace streetlens {

// Scalar stored in an element's data map. Numbers are always doubles.
using DataValue = std::variant<bool, double, std::string>;
using DataMap = std::map<std::string, DataValue, std::less<>>;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

struct NodeRecord {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  DataMap data;

  friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct EdgeRecord {
  std::string id;
  std::string source;
  std::string target;
  std::vector<LatLon> coordinates;
  DataMap data;

  friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

struct MarkerRecord {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<std::string> popup_text;
  std::optional<std::string> icon_id;
  DataMap data;

  friend bool operator==(const MarkerRecord&, const MarkerRecord&) = default;
};

struct BBox {
  double min_lat = 0.0;
  double min_lon = 0.0;
  double max_lat = 0.0;
  double max_lon = 0.0;

  bool contains(LatLon p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
  LatLon center() const { return {(min_lat + max_lat) / 2.0, (min_lon + max_lon) / 2.0}; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

enum class NetworkErrc {
  kDuplicateId,
  kDanglingEndpoint,
  kDegeneratePolyline,
  kOutOfRangeCoordinate,
  kEmptyNetwork,
};

class NetworkError : public Error {
public:
  NetworkError(NetworkErrc code, std::string message) : Error(std::move(message)), code_(code) {}
  NetworkErrc code() const noexcept { return code_; }

private:
  NetworkErrc code_;
};

// Maximum distance in degrees between a polyline end and its endpoint node
// before a snap warning is recorded.
inline constexpr double kEndpointSnapToleranceDeg = 1e-6;

// Validated primal street multigraph. Immutable after construction; element
// indices follow input order and are the join key used by styles, buffers
// and hit results.
class StreetNetwork {
public:
  StreetNetwork() = default;

  const std::vector<NodeRecord>& nodes() const noexcept { return nodes_; }
  const std::vector<EdgeRecord>& edges() const noexcept { return edges_; }
  const std::vector<MarkerRecord>& markers() const noexcept { return markers_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  // Tight bound of node and polyline coordinates; empty when there are none.
  const std::optional<BBox>& bbox() const noexcept { return bbox_; }

  std::optional<std::size_t> node_index(std::string_view id) const;
  std::optional<std::size_t> edge_index(std::string_view id) const;
  std::optional<std::size_t> marker_index(std::string_view id) const;

  // Endpoint node indices of edge `edge`; always resolvable.
  std::size_t source_of(std::size_t edge) const { return endpoints_[edge].first; }
  std::size_t target_of(std::size_t edge) const { return endpoints_[edge].second; }

  bool empty() const noexcept { return nodes_.empty() && edges_.empty() && markers_.empty(); }

  friend bool operator==(const StreetNetwork& a, const StreetNetwork& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.markers_ == b.markers_ &&
           a.warnings_ == b.warnings_ && a.bbox_ == b.bbox_;
  }

private:
  friend StreetNetwork build_network(std::vector<NodeRecord>, std::vector<EdgeRecord>,
                                     std::vector<MarkerRecord>);

  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };
  using IdIndex = std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>>;

  std::vector<NodeRecord> nodes_;
  std::vector<EdgeRecord> edges_;
  std::vector<MarkerRecord> markers_;
  std::vector<std::pair<std::size_t, std::size_t>> endpoints_;
  IdIndex node_ids_;
  IdIndex edge_ids_;
  IdIndex marker_ids_;
  std::vector<std::string> warnings_;
  std::optional<BBox> bbox_;
};

// Validates the records and builds the network. Throws NetworkError on
// duplicate ids, dangling endpoints, polylines shorter than two points and
// coordinates outside WGS84 bounds. Endpoint-snap drift only warns.
StreetNetwork build_network(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges,
                            std::vector<MarkerRecord> markers = {});

// Throws NetworkError(kEmptyNetwork) when the network has no coordinates.
BBox network_bbox(const StreetNetwork& net);

std::optional<double> element_weight(const DataMap& data, std::string_view weight_field);

template <typename Record>
std::optional<double> element_weight(const Record& record, std::string_view weight_field) {
  return element_weight(record.data, weight_field);
}

bool valid_wgs84(double lat, double lon);

}  // namespace streetlens
