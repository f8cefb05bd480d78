#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "streetlens/network.hpp"

namespace streetlens {

enum class ElementKind : std::uint8_t { kNode, kEdge, kMarker };

std::string_view to_string(ElementKind kind);

struct Rgba {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 255;

  friend bool operator==(const Rgba&, const Rgba&) = default;
};

// Accepts "#RRGGBB" and "#RRGGBBAA" (case-insensitive).
std::optional<Rgba> parse_hex_color(std::string_view text);
std::string to_hex(Rgba c);

// Tint that leaves an icon image with its own colours.
inline constexpr Rgba kOriginalIconTint{255, 255, 255, 255};

enum class ColorMethod : std::uint8_t { kDefault, kScale, kCustom, kOriginal };
enum class ScaleMethod : std::uint8_t { kDefault, kScale, kCustom };
enum class VisibilityMethod : std::uint8_t { kAlways, kCustom };
enum class IconMethod : std::uint8_t { kDefault, kCustom };

// Per-kind style configuration. Channels that do not apply to a kind are
// empty optionals; validate_options rejects any that are set.
struct StyleOptions {
  ElementKind kind = ElementKind::kNode;

  ColorMethod color_method = ColorMethod::kDefault;
  std::optional<ScaleMethod> size_method;   // nodes, markers
  ScaleMethod alpha_method = ScaleMethod::kDefault;
  VisibilityMethod visibility_method = VisibilityMethod::kAlways;
  std::optional<ScaleMethod> width_method;  // edges
  std::optional<IconMethod> icon_method;    // markers

  Rgba default_color;
  double default_size_px = 6.0;
  double min_size_px = 2.0;
  double max_size_px = 14.0;
  double default_alpha = 1.0;
  double min_alpha = 0.1;
  double max_alpha = 1.0;
  double default_width_px = 2.0;
  double min_width_px = 1.0;
  double max_width_px = 10.0;
  std::vector<Rgba> color_stops;
  std::string default_icon = "pin";
  // Additional icon ids made available to markers, in registration order.
  std::vector<std::string> icons;

  std::string weight_field = "weight";
  std::string color_field = "color";
  std::string size_field = "size";
  std::string alpha_field = "alpha";
  std::string visible_field = "visible";
  std::string width_field = "width";
  std::string icon_field = "icon";

  friend bool operator==(const StyleOptions&, const StyleOptions&) = default;
};

enum class StyleErrc { kInapplicableChannel, kInvalidOptions };

class StyleError : public Error {
public:
  StyleError(StyleErrc code, std::string message) : Error(std::move(message)), code_(code) {}
  StyleErrc code() const noexcept { return code_; }

private:
  StyleErrc code_;
};

StyleOptions default_options(ElementKind kind);

// Throws StyleError for channels inapplicable to the kind, inverted bounds,
// alpha outside [0, 1] and colour scales with fewer than two stops.
void validate_options(const StyleOptions& options);

// Options JSON merges onto default_options(kind); unknown keys and keys for
// inapplicable channels are rejected.
StyleOptions options_from_json(ElementKind kind, const nlohmann::json& j);
nlohmann::json to_json(const StyleOptions& options);

class ColorScale {
public:
  explicit ColorScale(std::vector<Rgba> stops);
  Rgba at(double t) const;
  const std::vector<Rgba>& stops() const noexcept { return stops_; }

private:
  std::vector<Rgba> stops_;
};

// Piecewise-linear RGB interpolation over evenly spaced stops; t is clamped
// to [0, 1] and channels are rounded half-up.
Rgba eval_color_scale(const ColorScale& scale, double t);

// Min-max normalisation. Absent values map to 0; when every present value
// is equal they all map to 0.5.
std::vector<double> normalize_weights(std::span<const std::optional<double>> values);

struct ResolvedStyle {
  ElementKind kind = ElementKind::kNode;
  std::vector<Rgba> color;
  std::vector<double> alpha;
  std::vector<bool> visible;
  std::vector<double> size_px;   // nodes, markers
  std::vector<double> width_px;  // edges
  std::vector<std::string> icon_id;  // markers
  std::vector<bool> original_color;  // markers
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return visible.size(); }
  std::size_t visible_count() const;

  friend bool operator==(const ResolvedStyle&, const ResolvedStyle&) = default;
};

struct NetworkStyleOptions {
  StyleOptions nodes = default_options(ElementKind::kNode);
  StyleOptions edges = default_options(ElementKind::kEdge);
  StyleOptions markers = default_options(ElementKind::kMarker);

  friend bool operator==(const NetworkStyleOptions&, const NetworkStyleOptions&) = default;
};

struct NetworkStyles {
  ResolvedStyle nodes;
  ResolvedStyle edges;
  ResolvedStyle markers;
};

ResolvedStyle resolve_node_styles(const StreetNetwork& net, const StyleOptions& options);
ResolvedStyle resolve_edge_styles(const StreetNetwork& net, const StyleOptions& options);
ResolvedStyle resolve_marker_styles(const StreetNetwork& net, const StyleOptions& options);
NetworkStyles resolve_styles(const StreetNetwork& net, const NetworkStyleOptions& options);

// Rounds a [0, 255] channel value half-up to a byte.
std::uint8_t round_channel(double v);

// Colour with alpha folded into the alpha byte.
Rgba fold_alpha(Rgba color, double alpha);

}  // namespace streetlens
