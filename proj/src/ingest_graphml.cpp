#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

#include <expat.h>
#include <fmt/format.h>

#include "streetlens/ingest.hpp"

namespace streetlens {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

struct KeyDecl {
  std::string for_kind;  // "node", "edge", "graph", "all"
  std::string name;
  std::optional<std::string> default_value;
};

struct PendingEdge {
  std::string source;
  std::string target;
  std::optional<std::string> explicit_key;
  std::map<std::string, std::string> attributes;
};

// Streaming GraphML reader. Only the structure OSMnx emits is interpreted;
// graph-level data and nested graphs are ignored.
class GraphmlReader {
public:
  GraphmlReader() : parser_(XML_ParserCreate(nullptr)) {
    XML_SetUserData(parser_, this);
    XML_SetElementHandler(parser_, &GraphmlReader::on_start, &GraphmlReader::on_end);
    XML_SetCharacterDataHandler(parser_, &GraphmlReader::on_text);
  }
  ~GraphmlReader() { XML_ParserFree(parser_); }
  GraphmlReader(const GraphmlReader&) = delete;
  GraphmlReader& operator=(const GraphmlReader&) = delete;

  void feed(const char* data, std::size_t size, bool final) {
    if (XML_Parse(parser_, data, static_cast<int>(size), final ? 1 : 0) == XML_STATUS_ERROR) {
      if (pending_error_) std::rethrow_exception(pending_error_);
      throw IngestError(IngestErrc::kMalformedXml,
                        fmt::format("malformed XML at line {}, column {}: {}",
                                    XML_GetCurrentLineNumber(parser_),
                                    XML_GetCurrentColumnNumber(parser_),
                                    XML_ErrorString(XML_GetErrorCode(parser_))));
    }
  }

  GraphmlRecords finish();

private:
  static void XMLCALL on_start(void* self, const XML_Char* name, const XML_Char** attrs) {
    auto* r = static_cast<GraphmlReader*>(self);
    try {
      r->start(name, attrs);
    } catch (...) {
      r->abort(std::current_exception());
    }
  }
  static void XMLCALL on_end(void* self, const XML_Char* name) {
    auto* r = static_cast<GraphmlReader*>(self);
    try {
      r->end(name);
    } catch (...) {
      r->abort(std::current_exception());
    }
  }
  static void XMLCALL on_text(void* self, const XML_Char* s, int len) {
    auto* r = static_cast<GraphmlReader*>(self);
    if (r->in_data_ || r->in_default_) r->text_.append(s, static_cast<std::size_t>(len));
  }

  void abort(std::exception_ptr e) {
    if (!pending_error_) pending_error_ = e;
    XML_StopParser(parser_, XML_FALSE);
  }

  static std::optional<std::string> attr(const XML_Char** attrs, std::string_view key) {
    for (int i = 0; attrs[i] != nullptr; i += 2) {
      if (key == attrs[i]) return std::string(attrs[i + 1]);
    }
    return std::nullopt;
  }

  static std::string_view local_name(std::string_view qname) {
    auto pos = qname.rfind(':');
    return pos == std::string_view::npos ? qname : qname.substr(pos + 1);
  }

  void start(std::string_view qname, const XML_Char** attrs) {
    const auto name = local_name(qname);
    if (name == "key") {
      auto id = attr(attrs, "id");
      if (!id) throw IngestError(IngestErrc::kMalformedXml, "GraphML <key> without id");
      KeyDecl decl;
      decl.for_kind = attr(attrs, "for").value_or("all");
      decl.name = attr(attrs, "attr.name").value_or(*id);
      current_key_ = *id;
      keys_[*id] = std::move(decl);
    } else if (name == "default" && current_key_) {
      in_default_ = true;
      text_.clear();
    } else if (name == "graph") {
      ++graph_depth_;
    } else if (name == "node" && graph_depth_ == 1) {
      auto id = attr(attrs, "id");
      if (!id) throw IngestError(IngestErrc::kMalformedXml, "GraphML <node> without id");
      current_node_.emplace();
      current_node_id_ = *id;
    } else if (name == "edge" && graph_depth_ == 1) {
      auto source = attr(attrs, "source");
      auto target = attr(attrs, "target");
      if (!source || !target) {
        throw IngestError(IngestErrc::kMalformedXml, "GraphML <edge> without source/target");
      }
      current_edge_.emplace();
      current_edge_->source = *source;
      current_edge_->target = *target;
      current_edge_->explicit_key = attr(attrs, "id");
    } else if (name == "data" && (current_node_ || current_edge_)) {
      auto key = attr(attrs, "key");
      if (!key) throw IngestError(IngestErrc::kMalformedXml, "GraphML <data> without key");
      current_data_key_ = *key;
      in_data_ = true;
      text_.clear();
    }
  }

  void end(std::string_view qname) {
    const auto name = local_name(qname);
    if (name == "default" && in_default_) {
      keys_[*current_key_].default_value = text_;
      in_default_ = false;
    } else if (name == "key") {
      current_key_.reset();
    } else if (name == "graph") {
      --graph_depth_;
    } else if (name == "data" && in_data_) {
      in_data_ = false;
      auto it = keys_.find(current_data_key_);
      const std::string attr_name = it != keys_.end() ? it->second.name : current_data_key_;
      if (it == keys_.end()) {
        warnings_.push_back(fmt::format("data references undeclared key '{}'", current_data_key_));
      }
      if (current_node_) {
        (*current_node_)[attr_name] = text_;
      } else if (current_edge_) {
        current_edge_->attributes[attr_name] = text_;
      }
    } else if (name == "node" && current_node_) {
      finish_node();
    } else if (name == "edge" && current_edge_) {
      edges_.push_back(std::move(*current_edge_));
      current_edge_.reset();
    }
  }

  void apply_defaults(std::map<std::string, std::string>& attributes, std::string_view kind) {
    for (const auto& [id, decl] : keys_) {
      if (!decl.default_value) continue;
      if (decl.for_kind != kind && decl.for_kind != "all") continue;
      attributes.emplace(decl.name, *decl.default_value);
    }
  }

  void finish_node() {
    auto& attributes = *current_node_;
    for (const auto& [k, _] : attributes) keys_seen_.insert(k);
    apply_defaults(attributes, "node");
    NodeRecord node;
    node.id = current_node_id_;
    auto x = attributes.find("x");
    auto y = attributes.find("y");
    std::optional<double> lon = x != attributes.end() ? parse_number(x->second) : std::nullopt;
    std::optional<double> lat = y != attributes.end() ? parse_number(y->second) : std::nullopt;
    if (!lon || !lat) {
      throw IngestError(IngestErrc::kMissingCoordinateAttribute,
                        fmt::format("node '{}' lacks numeric x/y attributes", node.id));
    }
    node.lat = *lat;
    node.lon = *lon;
    for (const auto& [k, v] : attributes) node.data.emplace(k, parse_attribute_value(v));
    node_lookup_.emplace(node.id, nodes_.size());
    nodes_.push_back(std::move(node));
    current_node_.reset();
  }

  XML_Parser parser_;
  std::exception_ptr pending_error_;
  int graph_depth_ = 0;
  std::unordered_map<std::string, KeyDecl> keys_;
  std::optional<std::string> current_key_;
  bool in_default_ = false;
  bool in_data_ = false;
  std::string current_data_key_;
  std::string text_;
  std::optional<std::map<std::string, std::string>> current_node_;
  std::string current_node_id_;
  std::optional<PendingEdge> current_edge_;
  std::vector<NodeRecord> nodes_;
  std::unordered_map<std::string, std::size_t> node_lookup_;
  std::vector<PendingEdge> edges_;
  std::vector<std::string> warnings_;
  std::set<std::string> keys_seen_;
};

GraphmlRecords GraphmlReader::finish() {
  GraphmlRecords out;
  out.nodes = std::move(nodes_);
  out.edges.reserve(edges_.size());
  std::map<std::pair<std::string, std::string>, std::size_t> parallel_count;

  for (auto& pending : edges_) {
    for (const auto& [k, _] : pending.attributes) keys_seen_.insert(k);
    apply_defaults(pending.attributes, "edge");

    std::string key;
    if (pending.explicit_key) {
      key = *pending.explicit_key;
    } else if (auto it = pending.attributes.find("key"); it != pending.attributes.end()) {
      key = std::string(trim(it->second));
    } else {
      key = std::to_string(parallel_count[{pending.source, pending.target}]++);
    }

    EdgeRecord edge;
    edge.id = fmt::format("{}-{}-{}", pending.source, pending.target, key);
    edge.source = std::move(pending.source);
    edge.target = std::move(pending.target);
    if (auto geom = pending.attributes.find("geometry"); geom != pending.attributes.end()) {
      edge.coordinates = parse_wkt_linestring(geom->second, edge.id);
    } else {
      auto s = node_lookup_.find(edge.source);
      auto t = node_lookup_.find(edge.target);
      // Unresolvable endpoints are left for build_network to report.
      if (s != node_lookup_.end() && t != node_lookup_.end()) {
        const auto& sn = out.nodes[s->second];
        const auto& tn = out.nodes[t->second];
        edge.coordinates = {{sn.lat, sn.lon}, {tn.lat, tn.lon}};
      }
    }
    for (const auto& [k, v] : pending.attributes) edge.data.emplace(k, parse_attribute_value(v));
    out.edges.push_back(std::move(edge));
  }

  out.report.node_count = out.nodes.size();
  out.report.edge_count = out.edges.size();
  out.report.warnings = std::move(warnings_);
  out.report.attribute_keys_seen = std::move(keys_seen_);
  return out;
}

}  // namespace

DataValue parse_attribute_value(std::string_view text) {
  if (auto v = parse_number(text)) return *v;
  return std::string(text);
}

std::vector<LatLon> parse_wkt_linestring(std::string_view wkt, std::string_view edge_id) {
  auto fail = [&](std::string_view why) -> IngestError {
    return IngestError(IngestErrc::kMalformedWkt,
                       fmt::format("edge '{}': malformed WKT ({})", edge_id, why));
  };
  std::string_view s = trim(wkt);
  constexpr std::string_view kTag = "LINESTRING";
  if (s.size() < kTag.size()) throw fail("missing LINESTRING tag");
  for (std::size_t i = 0; i < kTag.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(s[i])) != kTag[i]) {
      throw fail("missing LINESTRING tag");
    }
  }
  s = trim(s.substr(kTag.size()));
  for (std::string_view dim : {"ZM", "Z", "M"}) {
    if (s.size() > dim.size() && std::toupper(static_cast<unsigned char>(s[0])) == dim[0] &&
        (dim.size() == 1 || std::toupper(static_cast<unsigned char>(s[1])) == dim[1]) &&
        !std::isalpha(static_cast<unsigned char>(s[dim.size()]))) {
      s = trim(s.substr(dim.size()));
      break;
    }
  }
  if (s.size() < 2 || s.front() != '(' || s.back() != ')') throw fail("missing parentheses");
  s = s.substr(1, s.size() - 2);

  std::vector<LatLon> out;
  while (true) {
    auto comma = s.find(',');
    std::string_view pair = trim(s.substr(0, comma));
    auto space = pair.find_first_of(" \t\r\n");
    if (space == std::string_view::npos) throw fail("coordinate needs two values");
    auto lon = parse_number(pair.substr(0, space));
    std::string_view rest = trim(pair.substr(space));
    // Extra ordinates (Z/M) are tolerated and dropped.
    auto lat = parse_number(rest.substr(0, rest.find_first_of(" \t\r\n")));
    if (!lon || !lat) throw fail("non-numeric coordinate");
    out.push_back({*lat, *lon});
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  if (out.size() < 2) throw fail("fewer than two points");
  return out;
}

GraphmlRecords load_osmnx_graphml(std::istream& document) {
  GraphmlReader reader;
  std::array<char, 1 << 16> buffer{};
  while (document) {
    document.read(buffer.data(), buffer.size());
    const auto got = static_cast<std::size_t>(document.gcount());
    if (got == 0) break;
    reader.feed(buffer.data(), got, false);
  }
  reader.feed(nullptr, 0, true);
  return reader.finish();
}

GraphmlRecords load_osmnx_graphml(std::string_view document) {
  GraphmlReader reader;
  constexpr std::size_t kChunk = 1 << 20;
  for (std::size_t off = 0; off < document.size(); off += kChunk) {
    reader.feed(document.data() + off, std::min(kChunk, document.size() - off), false);
  }
  reader.feed(nullptr, 0, true);
  return reader.finish();
}

}  // namespace streetlens
