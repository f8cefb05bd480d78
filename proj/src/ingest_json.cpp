#include <sstream>

#include <fmt/format.h>

#include "streetlens/ingest.hpp"

namespace streetlens {

using nlohmann::json;

namespace {

[[noreturn]] void violation(const std::string& path, std::string_view reason) {
  throw IngestError(IngestErrc::kSchemaViolation, fmt::format("{}: {}", path, reason));
}

const json& field(const json& obj, const char* name, const std::string& path) {
  auto it = obj.find(name);
  if (it == obj.end()) violation(path + "/" + name, "required field missing");
  return *it;
}

std::string string_field(const json& obj, const char* name, const std::string& path) {
  const auto& v = field(obj, name, path);
  if (!v.is_string()) violation(path + "/" + name, "expected string");
  return v.get<std::string>();
}

double number_field(const json& obj, const char* name, const std::string& path) {
  const auto& v = field(obj, name, path);
  if (!v.is_number()) violation(path + "/" + name, "expected number");
  return v.get<double>();
}

std::optional<std::string> optional_string(const json& obj, const char* name,
                                           const std::string& path) {
  auto it = obj.find(name);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) violation(path + "/" + name, "expected string");
  return it->get<std::string>();
}

DataMap optional_data(const json& obj, const std::string& path) {
  auto it = obj.find("data");
  if (it == obj.end() || it->is_null()) return {};
  return data_from_json(*it, path + "/data");
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) violation(path, "expected object");
}

template <typename Record, typename Fn>
std::vector<Record> array_of(const json& j, const std::string& path, Fn&& one) {
  if (!j.is_array()) violation(path, "expected array");
  std::vector<Record> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(one(j[i], fmt::format("{}/{}", path, i)));
  return out;
}

}  // namespace

DataMap data_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  DataMap out;
  for (const auto& [k, v] : j.items()) {
    if (v.is_boolean()) {
      out.emplace(k, v.get<bool>());
    } else if (v.is_number()) {
      out.emplace(k, v.get<double>());
    } else if (v.is_string()) {
      out.emplace(k, v.get<std::string>());
    } else {
      violation(path + "/" + k, "data values must be number, string or boolean");
    }
  }
  return out;
}

json data_to_json(const DataMap& data) {
  json out = json::object();
  for (const auto& [k, v] : data) {
    std::visit([&](const auto& value) { out[k] = value; }, v);
  }
  return out;
}

NodeRecord node_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  NodeRecord n;
  n.id = string_field(j, "id", path);
  n.lat = number_field(j, "lat", path);
  n.lon = number_field(j, "lon", path);
  n.data = optional_data(j, path);
  return n;
}

EdgeRecord edge_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  EdgeRecord e;
  e.id = string_field(j, "id", path);
  e.source = string_field(j, "source", path);
  e.target = string_field(j, "target", path);
  const auto& coords = field(j, "coordinates", path);
  const std::string cpath = path + "/coordinates";
  if (!coords.is_array()) violation(cpath, "expected array of [lat, lon] pairs");
  if (coords.size() < 2) violation(cpath, "polyline needs at least 2 coordinates");
  e.coordinates.reserve(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto& p = coords[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      violation(fmt::format("{}/{}", cpath, i), "expected [lat, lon]");
    }
    e.coordinates.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  e.data = optional_data(j, path);
  return e;
}

MarkerRecord marker_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  MarkerRecord m;
  m.id = string_field(j, "id", path);
  m.lat = number_field(j, "lat", path);
  m.lon = number_field(j, "lon", path);
  m.popup_text = optional_string(j, "popup_text", path);
  m.icon_id = optional_string(j, "icon_id", path);
  m.data = optional_data(j, path);
  return m;
}

std::vector<NodeRecord> nodes_from_json(const json& j, const std::string& path) {
  return array_of<NodeRecord>(j, path, node_from_json);
}
std::vector<EdgeRecord> edges_from_json(const json& j, const std::string& path) {
  return array_of<EdgeRecord>(j, path, edge_from_json);
}
std::vector<MarkerRecord> markers_from_json(const json& j, const std::string& path) {
  return array_of<MarkerRecord>(j, path, marker_from_json);
}

json to_json(const NodeRecord& n) {
  return {{"id", n.id}, {"lat", n.lat}, {"lon", n.lon}, {"data", data_to_json(n.data)}};
}

json to_json(const EdgeRecord& e) {
  json coords = json::array();
  for (const auto& p : e.coordinates) coords.push_back({p.lat, p.lon});
  return {{"id", e.id},
          {"source", e.source},
          {"target", e.target},
          {"coordinates", std::move(coords)},
          {"data", data_to_json(e.data)}};
}

json to_json(const MarkerRecord& m) {
  json out = {{"id", m.id}, {"lat", m.lat}, {"lon", m.lon}, {"data", data_to_json(m.data)}};
  if (m.popup_text) out["popup_text"] = *m.popup_text;
  if (m.icon_id) out["icon_id"] = *m.icon_id;
  return out;
}

NetworkRecords load_network_json(std::string_view document) {
  json doc = json::parse(document, nullptr, false);
  if (doc.is_discarded()) violation("", "document is not valid JSON");
  require_object(doc, "");
  NetworkRecords out;
  auto section = [&](const char* name) -> const json* {
    auto it = doc.find(name);
    return it == doc.end() ? nullptr : &*it;
  };
  if (const json* s = section("nodes")) out.nodes = nodes_from_json(*s, "/nodes");
  else violation("/nodes", "required field missing");
  if (const json* s = section("edges")) out.edges = edges_from_json(*s, "/edges");
  else violation("/edges", "required field missing");
  if (const json* s = section("markers")) out.markers = markers_from_json(*s, "/markers");
  return out;
}

NetworkRecords load_network_json(std::istream& document) {
  std::ostringstream buffer;
  buffer << document.rdbuf();
  return load_network_json(std::string_view(buffer.str()));
}

std::string emit_network_json(const StreetNetwork& net) {
  json nodes = json::array();
  for (const auto& n : net.nodes()) nodes.push_back(to_json(n));
  json edges = json::array();
  for (const auto& e : net.edges()) edges.push_back(to_json(e));
  json markers = json::array();
  for (const auto& m : net.markers()) markers.push_back(to_json(m));
  json doc = {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"markers", std::move(markers)}};
  return doc.dump();
}

NetworkRecords load_network_source(std::string_view document, IngestReport* report) {
  std::size_t first = document.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
  if (first != std::string_view::npos && document[first] == '<') {
    auto g = load_osmnx_graphml(document);
    if (report) *report = std::move(g.report);
    return {std::move(g.nodes), std::move(g.edges), {}};
  }
  auto records = load_network_json(document);
  if (report) {
    report->node_count = records.nodes.size();
    report->edge_count = records.edges.size();
  }
  return records;
}

}  // namespace streetlens
