#include "streetlens/network.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace streetlens {

namespace {

void require_in_range(std::string_view kind, std::string_view id, double lat, double lon) {
  if (!valid_wgs84(lat, lon)) {
    throw NetworkError(NetworkErrc::kOutOfRangeCoordinate,
                       fmt::format("{} '{}': coordinate ({}, {}) outside WGS84 bounds", kind, id,
                                   lat, lon));
  }
}

void extend(std::optional<BBox>& box, double lat, double lon) {
  if (!box) {
    box = BBox{lat, lon, lat, lon};
    return;
  }
  box->min_lat = std::min(box->min_lat, lat);
  box->min_lon = std::min(box->min_lon, lon);
  box->max_lat = std::max(box->max_lat, lat);
  box->max_lon = std::max(box->max_lon, lon);
}

bool snapped(const LatLon& p, const NodeRecord& n) {
  return std::abs(p.lat - n.lat) <= kEndpointSnapToleranceDeg &&
         std::abs(p.lon - n.lon) <= kEndpointSnapToleranceDeg;
}

}  // namespace

bool valid_wgs84(double lat, double lon) {
  return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

std::optional<std::size_t> StreetNetwork::node_index(std::string_view id) const {
  auto it = node_ids_.find(id);
  if (it == node_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> StreetNetwork::edge_index(std::string_view id) const {
  auto it = edge_ids_.find(id);
  if (it == edge_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> StreetNetwork::marker_index(std::string_view id) const {
  auto it = marker_ids_.find(id);
  if (it == marker_ids_.end()) return std::nullopt;
  return it->second;
}

StreetNetwork build_network(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges,
                            std::vector<MarkerRecord> markers) {
  StreetNetwork net;
  net.node_ids_.reserve(nodes.size());
  net.edge_ids_.reserve(edges.size());
  net.marker_ids_.reserve(markers.size());
  net.endpoints_.reserve(edges.size());

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    require_in_range("node", n.id, n.lat, n.lon);
    if (!net.node_ids_.emplace(n.id, i).second) {
      throw NetworkError(NetworkErrc::kDuplicateId, fmt::format("duplicate node id '{}'", n.id));
    }
    extend(net.bbox_, n.lat, n.lon);
  }

  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (!net.edge_ids_.emplace(e.id, i).second) {
      throw NetworkError(NetworkErrc::kDuplicateId, fmt::format("duplicate edge id '{}'", e.id));
    }
    auto src = net.node_ids_.find(e.source);
    if (src == net.node_ids_.end()) {
      throw NetworkError(NetworkErrc::kDanglingEndpoint,
                         fmt::format("edge '{}' references missing node '{}'", e.id, e.source));
    }
    auto dst = net.node_ids_.find(e.target);
    if (dst == net.node_ids_.end()) {
      throw NetworkError(NetworkErrc::kDanglingEndpoint,
                         fmt::format("edge '{}' references missing node '{}'", e.id, e.target));
    }
    if (e.coordinates.size() < 2) {
      throw NetworkError(NetworkErrc::kDegeneratePolyline,
                         fmt::format("edge '{}' has {} coordinate(s), need at least 2", e.id,
                                     e.coordinates.size()));
    }
    for (const auto& p : e.coordinates) {
      require_in_range("edge", e.id, p.lat, p.lon);
      extend(net.bbox_, p.lat, p.lon);
    }
    if (!snapped(e.coordinates.front(), nodes[src->second])) {
      net.warnings_.push_back(fmt::format(
          "endpoint-snap: edge '{}' first coordinate is off source node '{}'", e.id, e.source));
    }
    if (!snapped(e.coordinates.back(), nodes[dst->second])) {
      net.warnings_.push_back(fmt::format(
          "endpoint-snap: edge '{}' last coordinate is off target node '{}'", e.id, e.target));
    }
    net.endpoints_.emplace_back(src->second, dst->second);
  }

  for (std::size_t i = 0; i < markers.size(); ++i) {
    const auto& m = markers[i];
    require_in_range("marker", m.id, m.lat, m.lon);
    if (!net.marker_ids_.emplace(m.id, i).second) {
      throw NetworkError(NetworkErrc::kDuplicateId, fmt::format("duplicate marker id '{}'", m.id));
    }
  }

  net.nodes_ = std::move(nodes);
  net.edges_ = std::move(edges);
  net.markers_ = std::move(markers);
  return net;
}

BBox network_bbox(const StreetNetwork& net) {
  if (!net.bbox()) {
    throw NetworkError(NetworkErrc::kEmptyNetwork, "network has no coordinates");
  }
  return *net.bbox();
}

std::optional<double> element_weight(const DataMap& data, std::string_view weight_field) {
  auto it = data.find(weight_field);
  if (it == data.end()) return std::nullopt;
  if (const double* v = std::get_if<double>(&it->second)) return *v;
  return std::nullopt;
}

}  // namespace streetlens
