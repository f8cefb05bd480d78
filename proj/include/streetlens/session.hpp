#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "streetlens/bundle.hpp"
#include "streetlens/geo.hpp"
#include "streetlens/hittest.hpp"
#include "streetlens/ingest.hpp"
#include "streetlens/network.hpp"
#include "streetlens/style.hpp"
#include "streetlens/tessellate.hpp"

namespace streetlens {

enum class SessionErrc { kInvalidPatch, kUnknownSession };

class SessionError : public Error {
public:
  SessionError(SessionErrc code, std::string field, std::string message)
      : Error(std::move(message)), code_(code), field_(std::move(field)) {}
  SessionErrc code() const noexcept { return code_; }
  // Offending property for kInvalidPatch, session id for kUnknownSession.
  const std::string& field() const noexcept { return field_; }

private:
  SessionErrc code_;
  std::string field_;
};

enum class PropertyAccess { kSettable, kServerWritten, kPassThrough };

struct PropertyInfo {
  std::string_view name;
  std::string_view category;  // data, options, show, map, tile_layer, callback
  PropertyAccess access;
};

// Every component property in canonical order. property_changed events and
// the state document follow this order.
const std::vector<PropertyInfo>& property_catalog();

// Render layers named in buffers_updated events.
enum class Layer : std::uint8_t { kEdges, kArrows, kNodes, kMarkers };
std::string_view to_string(Layer layer);

struct SessionProperties {
  NetworkStyleOptions options;
  bool show_nodes = true;
  bool show_edges = true;
  bool show_arrows = true;
  bool show_markers = true;
  LatLon map_center;
  double map_zoom = 12.0;
  double map_min_zoom = 3.0;
  double map_max_zoom = 19.0;
  std::map<std::string, std::string> map_style;
  std::string tile_layer_url = "https://{s}.tile.openstreetmap.org/{z}/{x}/{y}.png";
  std::vector<std::string> tile_layer_subdomains = {"a", "b", "c"};
  std::string tile_layer_attribution = "&copy; OpenStreetMap contributors";
  double tile_layer_opacity = 1.0;
  std::optional<nlohmann::json> clicked_node;
  std::optional<nlohmann::json> clicked_edge;
  std::optional<nlohmann::json> clicked_marker;
};

// Partial update of the settable properties. Server-written properties are
// not representable; parse_patch rejects them.
struct PropertyPatch {
  std::optional<std::vector<NodeRecord>> nodes_data;
  std::optional<std::vector<EdgeRecord>> edges_data;
  std::optional<std::vector<MarkerRecord>> markers_data;
  std::optional<StyleOptions> node_options;
  std::optional<StyleOptions> edge_options;
  std::optional<StyleOptions> marker_options;
  std::optional<bool> show_nodes;
  std::optional<bool> show_edges;
  std::optional<bool> show_arrows;
  std::optional<bool> show_markers;
  std::optional<LatLon> map_center;
  std::optional<double> map_zoom;
  std::optional<double> map_min_zoom;
  std::optional<double> map_max_zoom;
  std::optional<std::map<std::string, std::string>> map_style;
  std::optional<std::string> tile_layer_url;
  std::optional<std::vector<std::string>> tile_layer_subdomains;
  std::optional<std::string> tile_layer_attribution;
  std::optional<double> tile_layer_opacity;

  bool empty() const;
};

// Throws SessionError(kInvalidPatch) naming the offending property.
PropertyPatch parse_patch(const nlohmann::json& j);

enum class EventType {
  kBuffersUpdated,
  kPropertyChanged,
  kClickedNode,
  kClickedEdge,
  kClickedMarker,
  kError,
  kTimestepView,
};

std::string_view to_string(EventType type);

struct Event {
  EventType type;
  nlohmann::json payload;
};

nlohmann::json to_json(const Event& event);

geo::Viewport viewport_from_json(const nlohmann::json& j);
nlohmann::json to_json(const geo::Viewport& v);

// Immutable view of a session at one bundle version. Readers hold it
// without coordinating with writers.
struct SessionSnapshot {
  SessionProperties props;
  std::shared_ptr<const StreetNetwork> network;
  std::shared_ptr<const ResolvedStyle> node_styles;
  std::shared_ptr<const ResolvedStyle> edge_styles;
  std::shared_ptr<const ResolvedStyle> marker_styles;
  std::shared_ptr<const RenderBundle> bundle;
  std::shared_ptr<const std::vector<std::byte>> encoded_bundle;
  std::shared_ptr<const HitIndex> hit_index;

  std::uint64_t version() const noexcept { return bundle->version; }
};

class Session {
public:
  // Builds the network, applies default properties (styles per kind, every
  // layer shown, centre on the bbox, zoom 12 within [3, 19]) and then
  // `initial`. Network errors propagate; a bad patch throws kInvalidPatch.
  Session(NetworkRecords records, const PropertyPatch& initial = {});

  // Applies the patch atomically. Only the pipeline stages the changed
  // properties feed are recomputed. On error the session is unchanged.
  std::vector<Event> apply_patch(const PropertyPatch& patch);
  std::vector<Event> apply_patch(const nlohmann::json& patch);

  // Resolves a click. When `client_version` is given and differs from the
  // live bundle the result is a retryable StaleIndex error event.
  std::vector<Event> handle_click(geo::ScreenPoint point, const geo::Viewport& viewport,
                                  std::optional<std::uint64_t> client_version = std::nullopt);

  std::shared_ptr<const SessionSnapshot> snapshot() const;
  std::uint64_t bundle_version() const { return snapshot()->version(); }

  // Full property document (every catalog entry plus bundle_version).
  nlohmann::json state_json() const;

private:
  std::shared_ptr<const SessionSnapshot> transition(const SessionSnapshot& from, const PropertyPatch& patch,
                                                    bool regenerate_all, std::vector<Event>* events);
  void publish(std::shared_ptr<const SessionSnapshot> next);

  mutable std::mutex snapshot_mutex_;
  std::mutex writer_mutex_;
  std::shared_ptr<const SessionSnapshot> current_;
  std::uint64_t last_version_ = 0;
};

nlohmann::json hit_payload(const Hit& hit, const StreetNetwork& net);

// Owns live sessions keyed by id.
class SessionRegistry {
public:
  std::string create(std::string_view network_source, const nlohmann::json& initial_patch);
  std::string add(std::shared_ptr<Session> session);
  std::shared_ptr<Session> get(std::string_view id) const;
  std::vector<std::string> ids() const;

  // Encoded bundle when its version is newer than `since_version`, nullptr
  // for not-modified. Unknown ids throw kUnknownSession.
  std::shared_ptr<const std::vector<std::byte>> get_bundle(std::string_view id,
                                                           std::uint64_t since_version) const;

private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace streetlens
