#include "streetlens/session.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>

namespace streetlens {

using nlohmann::json;

const std::vector<PropertyInfo>& property_catalog() {
  static const std::vector<PropertyInfo> kCatalog = {
      {"nodes_data", "data", PropertyAccess::kSettable},
      {"edges_data", "data", PropertyAccess::kSettable},
      {"markers_data", "data", PropertyAccess::kSettable},
      {"node_options", "options", PropertyAccess::kSettable},
      {"edge_options", "options", PropertyAccess::kSettable},
      {"marker_options", "options", PropertyAccess::kSettable},
      {"show_nodes", "show", PropertyAccess::kSettable},
      {"show_edges", "show", PropertyAccess::kSettable},
      {"show_arrows", "show", PropertyAccess::kSettable},
      {"show_markers", "show", PropertyAccess::kSettable},
      {"map_center", "map", PropertyAccess::kSettable},
      {"map_zoom", "map", PropertyAccess::kSettable},
      {"map_min_zoom", "map", PropertyAccess::kSettable},
      {"map_max_zoom", "map", PropertyAccess::kSettable},
      {"map_style", "map", PropertyAccess::kPassThrough},
      {"tile_layer_url", "tile_layer", PropertyAccess::kPassThrough},
      {"tile_layer_subdomains", "tile_layer", PropertyAccess::kPassThrough},
      {"tile_layer_attribution", "tile_layer", PropertyAccess::kPassThrough},
      {"tile_layer_opacity", "tile_layer", PropertyAccess::kPassThrough},
      {"clicked_node", "callback", PropertyAccess::kServerWritten},
      {"clicked_edge", "callback", PropertyAccess::kServerWritten},
      {"clicked_marker", "callback", PropertyAccess::kServerWritten},
  };
  return kCatalog;
}

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::kEdges: return "edges";
    case Layer::kArrows: return "arrows";
    case Layer::kNodes: return "nodes";
    case Layer::kMarkers: return "markers";
  }
  return "?";
}

std::string_view to_string(EventType type) {
  switch (type) {
    case EventType::kBuffersUpdated: return "buffers_updated";
    case EventType::kPropertyChanged: return "property_changed";
    case EventType::kClickedNode: return "clicked_node";
    case EventType::kClickedEdge: return "clicked_edge";
    case EventType::kClickedMarker: return "clicked_marker";
    case EventType::kError: return "error";
    case EventType::kTimestepView: return "timestep_view";
  }
  return "?";
}

json to_json(const Event& event) { return {{"event", to_string(event.type)}, {"payload", event.payload}}; }

bool PropertyPatch::empty() const {
  return !nodes_data && !edges_data && !markers_data && !node_options && !edge_options &&
         !marker_options && !show_nodes && !show_edges && !show_arrows && !show_markers &&
         !map_center && !map_zoom && !map_min_zoom && !map_max_zoom && !map_style && !tile_layer_url &&
         !tile_layer_subdomains && !tile_layer_attribution && !tile_layer_opacity;
}

// ---- patch parsing ----------------------------------------------------------

namespace {

[[noreturn]] void invalid_patch(std::string_view field, std::string_view reason) {
  throw SessionError(SessionErrc::kInvalidPatch, std::string(field),
                     fmt::format("invalid patch for '{}': {}", field, reason));
}

bool expect_bool(const json& v, std::string_view field) {
  if (!v.is_boolean()) invalid_patch(field, "expected boolean");
  return v.get<bool>();
}

double expect_number(const json& v, std::string_view field) {
  if (!v.is_number()) invalid_patch(field, "expected number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) invalid_patch(field, "expected finite number");
  return d;
}

std::string expect_string(const json& v, std::string_view field) {
  if (!v.is_string()) invalid_patch(field, "expected string");
  return v.get<std::string>();
}

LatLon parse_latlon(const json& v, std::string_view field) {
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  if (v.is_object() && v.contains("lat") && v.contains("lon") && v["lat"].is_number() &&
      v["lon"].is_number()) {
    return {v["lat"].get<double>(), v["lon"].get<double>()};
  }
  invalid_patch(field, "expected [lat, lon]");
}

template <typename Fn>
auto guarded(std::string_view field, Fn&& fn) {
  try {
    return fn();
  } catch (const SessionError&) {
    throw;
  } catch (const Error& e) {
    invalid_patch(field, e.what());
  }
}

}  // namespace

PropertyPatch parse_patch(const json& j) {
  if (!j.is_object()) invalid_patch("", "patch must be a JSON object");
  PropertyPatch p;
  for (const auto& [key, v] : j.items()) {
    const auto& catalog = property_catalog();
    auto info = std::find_if(catalog.begin(), catalog.end(),
                             [&](const PropertyInfo& i) { return i.name == key; });
    if (info == catalog.end()) invalid_patch(key, "unknown property");
    if (info->access == PropertyAccess::kServerWritten) invalid_patch(key, "property is written by the server only");

    const std::string path = "/" + key;
    if (key == "nodes_data") p.nodes_data = guarded(key, [&] { return nodes_from_json(v, path); });
    else if (key == "edges_data") p.edges_data = guarded(key, [&] { return edges_from_json(v, path); });
    else if (key == "markers_data") p.markers_data = guarded(key, [&] { return markers_from_json(v, path); });
    else if (key == "node_options") p.node_options = guarded(key, [&] { return options_from_json(ElementKind::kNode, v); });
    else if (key == "edge_options") p.edge_options = guarded(key, [&] { return options_from_json(ElementKind::kEdge, v); });
    else if (key == "marker_options") p.marker_options = guarded(key, [&] { return options_from_json(ElementKind::kMarker, v); });
    else if (key == "show_nodes") p.show_nodes = expect_bool(v, key);
    else if (key == "show_edges") p.show_edges = expect_bool(v, key);
    else if (key == "show_arrows") p.show_arrows = expect_bool(v, key);
    else if (key == "show_markers") p.show_markers = expect_bool(v, key);
    else if (key == "map_center") p.map_center = parse_latlon(v, key);
    else if (key == "map_zoom") p.map_zoom = expect_number(v, key);
    else if (key == "map_min_zoom") p.map_min_zoom = expect_number(v, key);
    else if (key == "map_max_zoom") p.map_max_zoom = expect_number(v, key);
    else if (key == "map_style") {
      if (!v.is_object()) invalid_patch(key, "expected object of CSS properties");
      std::map<std::string, std::string> style;
      for (const auto& [k, s] : v.items()) style[k] = expect_string(s, key);
      p.map_style = std::move(style);
    } else if (key == "tile_layer_url") p.tile_layer_url = expect_string(v, key);
    else if (key == "tile_layer_subdomains") {
      std::vector<std::string> subs;
      if (v.is_string()) {
        for (char c : v.get<std::string>()) subs.emplace_back(1, c);
      } else if (v.is_array()) {
        for (const auto& s : v) subs.push_back(expect_string(s, key));
      } else {
        invalid_patch(key, "expected string or array of strings");
      }
      p.tile_layer_subdomains = std::move(subs);
    } else if (key == "tile_layer_attribution") p.tile_layer_attribution = expect_string(v, key);
    else if (key == "tile_layer_opacity") p.tile_layer_opacity = expect_number(v, key);
  }
  return p;
}

// ---- JSON views -------------------------------------------------------------

geo::Viewport viewport_from_json(const json& j) {
  if (!j.is_object()) throw Error("viewport must be an object");
  geo::Viewport v;
  auto number = [&](std::initializer_list<const char*> names) {
    for (const char* n : names) {
      if (auto it = j.find(n); it != j.end() && it->is_number()) return it->get<double>();
    }
    throw Error(fmt::format("viewport lacks numeric '{}'", *names.begin()));
  };
  auto c = j.find("center");
  if (c == j.end()) throw Error("viewport lacks 'center'");
  v.center = guarded("viewport", [&] { return parse_latlon(*c, "viewport.center"); });
  v.zoom = number({"zoom"});
  v.width_px = number({"width", "width_px"});
  v.height_px = number({"height", "height_px"});
  return v;
}

json to_json(const geo::Viewport& v) {
  return {{"center", {v.center.lat, v.center.lon}}, {"zoom", v.zoom}, {"width", v.width_px}, {"height", v.height_px}};
}

namespace {

template <typename Records>
json records_json(const Records& records, bool full) {
  if (!full) return {{"count", records.size()}};
  json out = json::array();
  for (const auto& r : records) out.push_back(to_json(r));
  return out;
}

json property_json(const SessionSnapshot& s, std::string_view name, bool full) {
  const auto& p = s.props;
  if (name == "nodes_data") return records_json(s.network->nodes(), full);
  if (name == "edges_data") return records_json(s.network->edges(), full);
  if (name == "markers_data") return records_json(s.network->markers(), full);
  if (name == "node_options") return to_json(p.options.nodes);
  if (name == "edge_options") return to_json(p.options.edges);
  if (name == "marker_options") return to_json(p.options.markers);
  if (name == "show_nodes") return p.show_nodes;
  if (name == "show_edges") return p.show_edges;
  if (name == "show_arrows") return p.show_arrows;
  if (name == "show_markers") return p.show_markers;
  if (name == "map_center") return {p.map_center.lat, p.map_center.lon};
  if (name == "map_zoom") return p.map_zoom;
  if (name == "map_min_zoom") return p.map_min_zoom;
  if (name == "map_max_zoom") return p.map_max_zoom;
  if (name == "map_style") return p.map_style;
  if (name == "tile_layer_url") return p.tile_layer_url;
  if (name == "tile_layer_subdomains") return p.tile_layer_subdomains;
  if (name == "tile_layer_attribution") return p.tile_layer_attribution;
  if (name == "tile_layer_opacity") return p.tile_layer_opacity;
  if (name == "clicked_node") return p.clicked_node.value_or(json());
  if (name == "clicked_edge") return p.clicked_edge.value_or(json());
  if (name == "clicked_marker") return p.clicked_marker.value_or(json());
  return json();
}

bool patch_has(const PropertyPatch& p, std::string_view name) {
  if (name == "nodes_data") return p.nodes_data.has_value();
  if (name == "edges_data") return p.edges_data.has_value();
  if (name == "markers_data") return p.markers_data.has_value();
  if (name == "node_options") return p.node_options.has_value();
  if (name == "edge_options") return p.edge_options.has_value();
  if (name == "marker_options") return p.marker_options.has_value();
  if (name == "show_nodes") return p.show_nodes.has_value();
  if (name == "show_edges") return p.show_edges.has_value();
  if (name == "show_arrows") return p.show_arrows.has_value();
  if (name == "show_markers") return p.show_markers.has_value();
  if (name == "map_center") return p.map_center.has_value();
  if (name == "map_zoom") return p.map_zoom.has_value();
  if (name == "map_min_zoom") return p.map_min_zoom.has_value();
  if (name == "map_max_zoom") return p.map_max_zoom.has_value();
  if (name == "map_style") return p.map_style.has_value();
  if (name == "tile_layer_url") return p.tile_layer_url.has_value();
  if (name == "tile_layer_subdomains") return p.tile_layer_subdomains.has_value();
  if (name == "tile_layer_attribution") return p.tile_layer_attribution.has_value();
  if (name == "tile_layer_opacity") return p.tile_layer_opacity.has_value();
  return false;
}

template <typename T>
void assign(T& target, const std::optional<T>& value) {
  if (value) target = *value;
}

ResolvedStyle hidden_copy(const ResolvedStyle& s) {
  ResolvedStyle out = s;
  out.visible.assign(out.visible.size(), false);
  return out;
}

}  // namespace

json hit_payload(const Hit& hit, const StreetNetwork& net) {
  json out = {{"kind", to_string(hit.kind)},
              {"id", hit.id},
              {"index", hit.index},
              {"distance_px", hit.distance_px},
              {"data", data_to_json(hit.data)}};
  switch (hit.kind) {
    case HitKind::kNode: {
      const auto& n = net.nodes()[hit.index];
      out["lat"] = n.lat;
      out["lon"] = n.lon;
      break;
    }
    case HitKind::kEdge: {
      const auto& e = net.edges()[hit.index];
      out["source"] = e.source;
      out["target"] = e.target;
      json coords = json::array();
      for (const auto& c : e.coordinates) coords.push_back({c.lat, c.lon});
      out["coordinates"] = std::move(coords);
      break;
    }
    case HitKind::kMarker: {
      const auto& m = net.markers()[hit.index];
      out["lat"] = m.lat;
      out["lon"] = m.lon;
      out["popup_text"] = m.popup_text ? json(*m.popup_text) : json();
      out["icon_id"] = m.icon_id ? json(*m.icon_id) : json();
      break;
    }
    case HitKind::kNone:
      break;
  }
  return out;
}

// ---- session ----------------------------------------------------------------

Session::Session(NetworkRecords records, const PropertyPatch& initial) {
  SessionSnapshot base;
  base.network = std::make_shared<const StreetNetwork>(
      build_network(std::move(records.nodes), std::move(records.edges), std::move(records.markers)));
  if (base.network->bbox()) base.props.map_center = base.network->bbox()->center();
  base.bundle = std::make_shared<const RenderBundle>();
  std::lock_guard writer(writer_mutex_);
  publish(transition(base, initial, true, nullptr));
}

std::shared_ptr<const SessionSnapshot> Session::transition(const SessionSnapshot& from, const PropertyPatch& patch,
                                                           bool regenerate_all, std::vector<Event>* events) {
  auto next = std::make_shared<SessionSnapshot>(from);
  auto& p = next->props;

  // Properties.
  const bool data_changed = patch.nodes_data || patch.edges_data || patch.markers_data;
  if (data_changed) {
    const std::string_view field = patch.nodes_data ? "nodes_data" : patch.edges_data ? "edges_data" : "markers_data";
    next->network = guarded(field, [&] {
      return std::make_shared<const StreetNetwork>(
          build_network(patch.nodes_data.value_or(from.network->nodes()),
                        patch.edges_data.value_or(from.network->edges()),
                        patch.markers_data.value_or(from.network->markers())));
    });
  }
  auto set_options = [&](StyleOptions& target, const std::optional<StyleOptions>& value, ElementKind kind,
                         std::string_view field) {
    if (!value) return;
    if (value->kind != kind) invalid_patch(field, "options are for another element kind");
    guarded(field, [&] { validate_options(*value); return 0; });
    target = *value;
  };
  set_options(p.options.nodes, patch.node_options, ElementKind::kNode, "node_options");
  set_options(p.options.edges, patch.edge_options, ElementKind::kEdge, "edge_options");
  set_options(p.options.markers, patch.marker_options, ElementKind::kMarker, "marker_options");
  assign(p.show_nodes, patch.show_nodes);
  assign(p.show_edges, patch.show_edges);
  assign(p.show_arrows, patch.show_arrows);
  assign(p.show_markers, patch.show_markers);
  assign(p.map_center, patch.map_center);
  assign(p.map_zoom, patch.map_zoom);
  assign(p.map_min_zoom, patch.map_min_zoom);
  assign(p.map_max_zoom, patch.map_max_zoom);
  assign(p.map_style, patch.map_style);
  assign(p.tile_layer_url, patch.tile_layer_url);
  assign(p.tile_layer_subdomains, patch.tile_layer_subdomains);
  assign(p.tile_layer_attribution, patch.tile_layer_attribution);
  assign(p.tile_layer_opacity, patch.tile_layer_opacity);

  // Cross-property invariants.
  if (!valid_wgs84(p.map_center.lat, p.map_center.lon)) invalid_patch("map_center", "outside WGS84 bounds");
  const std::string_view zoom_field =
      patch.map_zoom ? "map_zoom" : patch.map_min_zoom ? "map_min_zoom" : "map_max_zoom";
  if (p.map_min_zoom < 0.0) invalid_patch("map_min_zoom", "must be >= 0");
  if (p.map_min_zoom > p.map_max_zoom) invalid_patch(zoom_field, "map_min_zoom exceeds map_max_zoom");
  if (p.map_zoom < p.map_min_zoom || p.map_zoom > p.map_max_zoom) {
    invalid_patch(zoom_field, fmt::format("zoom {} outside [{}, {}]", p.map_zoom, p.map_min_zoom, p.map_max_zoom));
  }
  if (p.tile_layer_opacity < 0.0 || p.tile_layer_opacity > 1.0) invalid_patch("tile_layer_opacity", "must lie in [0, 1]");
  guarded(patch.tile_layer_subdomains && !patch.tile_layer_url ? "tile_layer_subdomains" : "tile_layer_url", [&] {
    return geo::tile_url(p.tile_layer_url, p.tile_layer_subdomains, 0, 0, 0);
  });

  // Pipeline stages.
  const bool restyle_nodes = regenerate_all || patch.nodes_data || patch.node_options;
  const bool restyle_edges = regenerate_all || patch.edges_data || patch.edge_options;
  const bool restyle_markers = regenerate_all || patch.markers_data || patch.marker_options;
  if (restyle_nodes) {
    next->node_styles = guarded(patch.node_options ? "node_options" : "nodes_data", [&] {
      return std::make_shared<const ResolvedStyle>(resolve_node_styles(*next->network, p.options.nodes));
    });
  }
  if (restyle_edges) {
    next->edge_styles = guarded(patch.edge_options ? "edge_options" : "edges_data", [&] {
      return std::make_shared<const ResolvedStyle>(resolve_edge_styles(*next->network, p.options.edges));
    });
  }
  if (restyle_markers) {
    next->marker_styles = guarded(patch.marker_options ? "marker_options" : "markers_data", [&] {
      return std::make_shared<const ResolvedStyle>(resolve_marker_styles(*next->network, p.options.markers));
    });
  }

  std::vector<Layer> layers;
  if (restyle_edges || patch.show_edges) layers.push_back(Layer::kEdges);
  if (restyle_edges || patch.show_edges || patch.show_arrows) layers.push_back(Layer::kArrows);
  if (restyle_nodes || patch.show_nodes) layers.push_back(Layer::kNodes);
  if (restyle_markers || patch.show_markers) layers.push_back(Layer::kMarkers);

  if (!layers.empty()) {
    auto bundle = std::make_shared<RenderBundle>(*from.bundle);
    const auto& net = *next->network;
    for (Layer layer : layers) {
      switch (layer) {
        case Layer::kEdges:
          bundle->reference_zoom = p.map_zoom;
          bundle->edge_mesh = p.show_edges ? tessellate_edges(net, *next->edge_styles, p.map_zoom) : EdgeMesh{};
          break;
        case Layer::kArrows:
          bundle->arrow_sprites = p.show_edges ? place_arrows(net, *next->edge_styles, p.show_arrows) : SpriteInstances{};
          break;
        case Layer::kNodes:
          bundle->node_sprites =
              p.show_nodes ? build_sprites(ElementKind::kNode, net, *next->node_styles) : SpriteInstances{};
          break;
        case Layer::kMarkers: {
          IconTable icons;
          for (const auto& id : p.options.markers.icons) icons.add(id);
          bundle->icon_table = icons.ids();
          bundle->marker_sprites = guarded(patch.marker_options ? "marker_options" : "markers_data", [&] {
            return p.show_markers ? build_sprites(ElementKind::kMarker, net, *next->marker_styles, icons)
                                  : SpriteInstances{};
          });
          break;
        }
      }
    }
    bundle->version = last_version_ + 1;
    next->encoded_bundle = std::make_shared<const std::vector<std::byte>>(encode_bundle(*bundle));

    const NetworkStyles hit_styles{p.show_nodes ? *next->node_styles : hidden_copy(*next->node_styles),
                                   p.show_edges ? *next->edge_styles : hidden_copy(*next->edge_styles),
                                   p.show_markers ? *next->marker_styles : hidden_copy(*next->marker_styles)};
    HitIndexOptions hit_options;
    hit_options.min_zoom = p.map_min_zoom;
    hit_options.version = bundle->version;
    next->hit_index = std::make_shared<const HitIndex>(next->network, hit_styles, hit_options);
    next->bundle = std::move(bundle);
  } else if (patch.map_min_zoom && next->hit_index) {
    // Entry inflation depends on the minimum zoom; rebuild against the same bundle.
    const NetworkStyles hit_styles{p.show_nodes ? *next->node_styles : hidden_copy(*next->node_styles),
                                   p.show_edges ? *next->edge_styles : hidden_copy(*next->edge_styles),
                                   p.show_markers ? *next->marker_styles : hidden_copy(*next->marker_styles)};
    HitIndexOptions hit_options;
    hit_options.min_zoom = p.map_min_zoom;
    hit_options.version = next->bundle->version;
    next->hit_index = std::make_shared<const HitIndex>(next->network, hit_styles, hit_options);
  }

  if (events) {
    for (const auto& info : property_catalog()) {
      if (!patch_has(patch, info.name)) continue;
      events->push_back({EventType::kPropertyChanged,
                         {{"property", info.name}, {"value", property_json(*next, info.name, false)}}});
    }
    if (!layers.empty()) {
      json names = json::array();
      for (Layer l : layers) names.push_back(to_string(l));
      events->push_back({EventType::kBuffersUpdated, {{"layers", std::move(names)}, {"version", next->version()}}});
    }
  }
  return next;
}

void Session::publish(std::shared_ptr<const SessionSnapshot> next) {
  last_version_ = std::max(last_version_, next->version());
  std::lock_guard lock(snapshot_mutex_);
  current_ = std::move(next);
}

std::vector<Event> Session::apply_patch(const PropertyPatch& patch) {
  std::lock_guard writer(writer_mutex_);
  std::vector<Event> events;
  auto next = transition(*snapshot(), patch, false, &events);
  publish(std::move(next));
  return events;
}

std::vector<Event> Session::apply_patch(const json& patch) { return apply_patch(parse_patch(patch)); }

std::vector<Event> Session::handle_click(geo::ScreenPoint point, const geo::Viewport& viewport,
                                         std::optional<std::uint64_t> client_version) {
  std::lock_guard writer(writer_mutex_);
  auto snap = snapshot();
  Hit hit;
  try {
    hit = query_point(*snap->hit_index, point, viewport, client_version.value_or(snap->version()));
  } catch (const HitError& e) {
    return {{EventType::kError,
             {{"code", "StaleIndex"}, {"message", e.what()}, {"retryable", true}, {"version", snap->version()}}}};
  }
  if (hit.kind == HitKind::kNone) return {};

  auto next = std::make_shared<SessionSnapshot>(*snap);
  json payload = hit_payload(hit, *snap->network);
  EventType type = EventType::kClickedEdge;
  switch (hit.kind) {
    case HitKind::kNode:
      next->props.clicked_node = payload;
      type = EventType::kClickedNode;
      break;
    case HitKind::kEdge:
      next->props.clicked_edge = payload;
      type = EventType::kClickedEdge;
      break;
    case HitKind::kMarker:
      next->props.clicked_marker = payload;
      type = EventType::kClickedMarker;
      break;
    case HitKind::kNone:
      break;
  }
  publish(std::move(next));
  return {{type, std::move(payload)}};
}

std::shared_ptr<const SessionSnapshot> Session::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return current_;
}

json Session::state_json() const {
  auto snap = snapshot();
  json out = json::object();
  for (const auto& info : property_catalog()) out[std::string(info.name)] = property_json(*snap, info.name, true);
  out["bundle_version"] = snap->version();
  return out;
}

// ---- registry ---------------------------------------------------------------

std::string SessionRegistry::create(std::string_view network_source, const json& initial_patch) {
  PropertyPatch patch = initial_patch.is_null() ? PropertyPatch{} : parse_patch(initial_patch);
  auto session = std::make_shared<Session>(load_network_source(network_source), patch);
  return add(std::move(session));
}

std::string SessionRegistry::add(std::shared_ptr<Session> session) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mutex_);
  std::string id = fmt::format("s{}-{:08x}", ++counter_, static_cast<std::uint32_t>(rng()));
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<Session> SessionRegistry::get(std::string_view id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw SessionError(SessionErrc::kUnknownSession, std::string(id), fmt::format("unknown session '{}'", id));
  }
  return it->second;
}

std::vector<std::string> SessionRegistry::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

std::shared_ptr<const std::vector<std::byte>> SessionRegistry::get_bundle(std::string_view id,
                                                                          std::uint64_t since_version) const {
  auto snap = get(id)->snapshot();
  if (snap->version() > since_version) return snap->encoded_bundle;
  return nullptr;
}

}  // namespace streetlens
