#pragma once

#include <cstddef>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "streetlens/network.hpp"

namespace streetlens {

enum class IngestErrc {
  kMalformedXml,
  kMissingCoordinateAttribute,
  kMalformedWkt,
  kSchemaViolation,
};

class IngestError : public Error {
public:
  IngestError(IngestErrc code, std::string message) : Error(std::move(message)), code_(code) {}
  IngestErrc code() const noexcept { return code_; }

private:
  IngestErrc code_;
};

struct IngestReport {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::vector<std::string> warnings;
  std::set<std::string> attribute_keys_seen;
};

struct NetworkRecords {
  std::vector<NodeRecord> nodes;
  std::vector<EdgeRecord> edges;
  std::vector<MarkerRecord> markers;
};

struct GraphmlRecords {
  std::vector<NodeRecord> nodes;
  std::vector<EdgeRecord> edges;
  IngestReport report;
};

// Reads an OSMnx-flavoured GraphML document. Node attributes `x` (lon) and
// `y` (lat) are mandatory; an edge `geometry` WKT LINESTRING, when present,
// becomes the polyline. Every attribute lands in the record's data map,
// numeric where the text parses as a finite number.
GraphmlRecords load_osmnx_graphml(std::istream& document);
GraphmlRecords load_osmnx_graphml(std::string_view document);

// Parses "LINESTRING (lon lat, lon lat, ...)" into (lat, lon) pairs.
// Throws IngestError(kMalformedWkt) naming `edge_id` on any syntax error.
std::vector<LatLon> parse_wkt_linestring(std::string_view wkt, std::string_view edge_id);

// Parses attribute text: finite numbers become doubles, anything else stays
// a string.
DataValue parse_attribute_value(std::string_view text);

NetworkRecords load_network_json(std::istream& document);
NetworkRecords load_network_json(std::string_view document);

std::string emit_network_json(const StreetNetwork& net);

// Loads either format; GraphML is recognised by a leading '<'.
NetworkRecords load_network_source(std::string_view document, IngestReport* report = nullptr);

// Record-level JSON codecs, shared with the session property model.
// `path` is a JSON-pointer-like prefix used in SchemaViolation messages.
NodeRecord node_from_json(const nlohmann::json& j, const std::string& path);
EdgeRecord edge_from_json(const nlohmann::json& j, const std::string& path);
MarkerRecord marker_from_json(const nlohmann::json& j, const std::string& path);
std::vector<NodeRecord> nodes_from_json(const nlohmann::json& j, const std::string& path);
std::vector<EdgeRecord> edges_from_json(const nlohmann::json& j, const std::string& path);
std::vector<MarkerRecord> markers_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json data_to_json(const DataMap& data);
DataMap data_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json to_json(const NodeRecord& n);
nlohmann::json to_json(const EdgeRecord& e);
nlohmann::json to_json(const MarkerRecord& m);

}  // namespace streetlens
