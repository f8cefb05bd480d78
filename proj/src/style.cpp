#include "streetlens/style.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <fmt/format.h>

namespace streetlens {

using nlohmann::json;

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::kNode: return "node";
    case ElementKind::kEdge: return "edge";
    case ElementKind::kMarker: return "marker";
  }
  return "?";
}

std::optional<Rgba> parse_hex_color(std::string_view text) {
  if (text.size() != 7 && text.size() != 9) return std::nullopt;
  if (text.front() != '#') return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::array<std::uint8_t, 4> bytes{0, 0, 0, 255};
  for (std::size_t i = 0; i * 2 + 1 < text.size(); ++i) {
    const int hi = nibble(text[1 + 2 * i]);
    const int lo = nibble(text[2 + 2 * i]);
    if (hi < 0 || lo < 0) return std::nullopt;
    bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return Rgba{bytes[0], bytes[1], bytes[2], bytes[3]};
}

std::string to_hex(Rgba c) { return fmt::format("#{:02X}{:02X}{:02X}{:02X}", c.r, c.g, c.b, c.a); }

std::uint8_t round_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

Rgba fold_alpha(Rgba color, double alpha) {
  color.a = round_channel(color.a * std::clamp(alpha, 0.0, 1.0));
  return color;
}

StyleOptions default_options(ElementKind kind) {
  StyleOptions o;
  o.kind = kind;
  o.color_stops = {*parse_hex_color("#FFF5C0"), *parse_hex_color("#D7301F")};
  switch (kind) {
    case ElementKind::kNode:
      o.default_color = *parse_hex_color("#1E90FF");
      o.size_method = ScaleMethod::kDefault;
      o.default_size_px = 6.0;
      break;
    case ElementKind::kEdge:
      o.default_color = *parse_hex_color("#3273DC");
      o.width_method = ScaleMethod::kDefault;
      o.default_width_px = 2.0;
      break;
    case ElementKind::kMarker:
      o.default_color = *parse_hex_color("#E53935");
      o.size_method = ScaleMethod::kDefault;
      o.default_size_px = 24.0;
      o.icon_method = IconMethod::kDefault;
      o.default_icon = "pin";
      break;
  }
  return o;
}

namespace {

[[noreturn]] void inapplicable(ElementKind kind, std::string_view channel) {
  throw StyleError(StyleErrc::kInapplicableChannel,
                   fmt::format("channel '{}' is not applicable to {} styles", channel, to_string(kind)));
}

[[noreturn]] void invalid(std::string_view what) {
  throw StyleError(StyleErrc::kInvalidOptions, std::string(what));
}

bool has_size(ElementKind k) { return k != ElementKind::kEdge; }
bool has_width(ElementKind k) { return k == ElementKind::kEdge; }
bool has_icon(ElementKind k) { return k == ElementKind::kMarker; }

void check_bounds(std::string_view name, double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    invalid(fmt::format("{} bounds must satisfy min <= max (got {} > {})", name, lo, hi));
  }
}

}  // namespace

void validate_options(const StyleOptions& o) {
  if (o.size_method && !has_size(o.kind)) inapplicable(o.kind, "size");
  if (o.width_method && !has_width(o.kind)) inapplicable(o.kind, "width");
  if (o.icon_method && !has_icon(o.kind)) inapplicable(o.kind, "icon");
  if (o.color_method == ColorMethod::kOriginal && o.kind != ElementKind::kMarker) {
    inapplicable(o.kind, "color ORIGINAL");
  }
  if (has_size(o.kind)) {
    check_bounds("size", o.min_size_px, o.max_size_px);
    if (!(o.default_size_px > 0.0) || o.min_size_px < 0.0) invalid("sizes must be positive");
  }
  if (has_width(o.kind)) {
    check_bounds("width", o.min_width_px, o.max_width_px);
    if (!(o.default_width_px > 0.0) || o.min_width_px < 0.0) invalid("widths must be positive");
  }
  check_bounds("alpha", o.min_alpha, o.max_alpha);
  for (double a : {o.default_alpha, o.min_alpha, o.max_alpha}) {
    if (a < 0.0 || a > 1.0) invalid("alpha values must lie in [0, 1]");
  }
  if (o.color_stops.size() < 2) invalid("color scale needs at least two stops");
}

// ---- JSON -----------------------------------------------------------------

namespace {

template <typename E>
struct EnumName {
  E value;
  std::string_view name;
};

constexpr EnumName<ColorMethod> kColorMethods[] = {{ColorMethod::kDefault, "DEFAULT"},
                                                   {ColorMethod::kScale, "SCALE"},
                                                   {ColorMethod::kCustom, "CUSTOM"},
                                                   {ColorMethod::kOriginal, "ORIGINAL"}};
constexpr EnumName<ScaleMethod> kScaleMethods[] = {
    {ScaleMethod::kDefault, "DEFAULT"}, {ScaleMethod::kScale, "SCALE"}, {ScaleMethod::kCustom, "CUSTOM"}};
constexpr EnumName<VisibilityMethod> kVisibilityMethods[] = {{VisibilityMethod::kAlways, "ALWAYS"},
                                                             {VisibilityMethod::kCustom, "CUSTOM"}};
constexpr EnumName<IconMethod> kIconMethods[] = {{IconMethod::kDefault, "DEFAULT"},
                                                 {IconMethod::kCustom, "CUSTOM"}};

template <typename E, std::size_t N>
std::string_view name_of(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <typename E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], const json& j, std::string_view key) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    for (const auto& e : table) {
      if (e.name == s) return e.value;
    }
  }
  invalid(fmt::format("'{}' has unsupported method {}", key, j.dump()));
}

double parse_number(const json& j, std::string_view key) {
  if (!j.is_number()) invalid(fmt::format("'{}' must be a number", key));
  return j.get<double>();
}

std::string parse_string(const json& j, std::string_view key) {
  if (!j.is_string()) invalid(fmt::format("'{}' must be a string", key));
  return j.get<std::string>();
}

Rgba parse_color(const json& j, std::string_view key) {
  auto c = j.is_string() ? parse_hex_color(j.get<std::string>()) : std::nullopt;
  if (!c) invalid(fmt::format("'{}' must be a #RRGGBB or #RRGGBBAA string", key));
  return *c;
}

}  // namespace

StyleOptions options_from_json(ElementKind kind, const json& j) {
  if (!j.is_object()) invalid("style options must be a JSON object");
  StyleOptions o = default_options(kind);
  static const std::set<std::string, std::less<>> kSizeKeys = {"size_method", "default_size_px",
                                                               "min_size_px", "max_size_px", "size_field"};
  static const std::set<std::string, std::less<>> kWidthKeys = {
      "width_method", "default_width_px", "min_width_px", "max_width_px", "width_field"};
  static const std::set<std::string, std::less<>> kIconKeys = {"icon_method", "default_icon", "icons",
                                                               "icon_field"};
  for (const auto& [key, v] : j.items()) {
    if (kSizeKeys.contains(key) && !has_size(kind)) inapplicable(kind, "size");
    if (kWidthKeys.contains(key) && !has_width(kind)) inapplicable(kind, "width");
    if (kIconKeys.contains(key) && !has_icon(kind)) inapplicable(kind, "icon");

    if (key == "color_method") o.color_method = parse_enum(kColorMethods, v, key);
    else if (key == "size_method") o.size_method = parse_enum(kScaleMethods, v, key);
    else if (key == "alpha_method") o.alpha_method = parse_enum(kScaleMethods, v, key);
    else if (key == "visibility_method") o.visibility_method = parse_enum(kVisibilityMethods, v, key);
    else if (key == "width_method") o.width_method = parse_enum(kScaleMethods, v, key);
    else if (key == "icon_method") o.icon_method = parse_enum(kIconMethods, v, key);
    else if (key == "default_color") o.default_color = parse_color(v, key);
    else if (key == "default_size_px") o.default_size_px = parse_number(v, key);
    else if (key == "min_size_px") o.min_size_px = parse_number(v, key);
    else if (key == "max_size_px") o.max_size_px = parse_number(v, key);
    else if (key == "default_alpha") o.default_alpha = parse_number(v, key);
    else if (key == "min_alpha") o.min_alpha = parse_number(v, key);
    else if (key == "max_alpha") o.max_alpha = parse_number(v, key);
    else if (key == "default_width_px") o.default_width_px = parse_number(v, key);
    else if (key == "min_width_px") o.min_width_px = parse_number(v, key);
    else if (key == "max_width_px") o.max_width_px = parse_number(v, key);
    else if (key == "color_stops") {
      if (!v.is_array()) invalid("'color_stops' must be an array of colours");
      o.color_stops.clear();
      for (const auto& s : v) o.color_stops.push_back(parse_color(s, key));
    } else if (key == "default_icon") o.default_icon = parse_string(v, key);
    else if (key == "icons") {
      if (!v.is_array()) invalid("'icons' must be an array of strings");
      o.icons.clear();
      for (const auto& s : v) o.icons.push_back(parse_string(s, key));
    } else if (key == "weight_field") o.weight_field = parse_string(v, key);
    else if (key == "color_field") o.color_field = parse_string(v, key);
    else if (key == "size_field") o.size_field = parse_string(v, key);
    else if (key == "alpha_field") o.alpha_field = parse_string(v, key);
    else if (key == "visible_field") o.visible_field = parse_string(v, key);
    else if (key == "width_field") o.width_field = parse_string(v, key);
    else if (key == "icon_field") o.icon_field = parse_string(v, key);
    else invalid(fmt::format("unknown style option '{}'", key));
  }
  validate_options(o);
  return o;
}

json to_json(const StyleOptions& o) {
  json j;
  j["color_method"] = name_of(kColorMethods, o.color_method);
  j["alpha_method"] = name_of(kScaleMethods, o.alpha_method);
  j["visibility_method"] = name_of(kVisibilityMethods, o.visibility_method);
  j["default_color"] = to_hex(o.default_color);
  j["default_alpha"] = o.default_alpha;
  j["min_alpha"] = o.min_alpha;
  j["max_alpha"] = o.max_alpha;
  json stops = json::array();
  for (auto c : o.color_stops) stops.push_back(to_hex(c));
  j["color_stops"] = std::move(stops);
  j["weight_field"] = o.weight_field;
  j["color_field"] = o.color_field;
  j["alpha_field"] = o.alpha_field;
  j["visible_field"] = o.visible_field;
  if (o.size_method) {
    j["size_method"] = name_of(kScaleMethods, *o.size_method);
    j["default_size_px"] = o.default_size_px;
    j["min_size_px"] = o.min_size_px;
    j["max_size_px"] = o.max_size_px;
    j["size_field"] = o.size_field;
  }
  if (o.width_method) {
    j["width_method"] = name_of(kScaleMethods, *o.width_method);
    j["default_width_px"] = o.default_width_px;
    j["min_width_px"] = o.min_width_px;
    j["max_width_px"] = o.max_width_px;
    j["width_field"] = o.width_field;
  }
  if (o.icon_method) {
    j["icon_method"] = name_of(kIconMethods, *o.icon_method);
    j["default_icon"] = o.default_icon;
    j["icons"] = o.icons;
    j["icon_field"] = o.icon_field;
  }
  return j;
}

// ---- scales ---------------------------------------------------------------

ColorScale::ColorScale(std::vector<Rgba> stops) : stops_(std::move(stops)) {
  if (stops_.size() < 2) invalid("color scale needs at least two stops");
}

Rgba ColorScale::at(double t) const { return eval_color_scale(*this, t); }

Rgba eval_color_scale(const ColorScale& scale, double t) {
  const auto& stops = scale.stops();
  if (!(t > 0.0)) return stops.front();
  if (t >= 1.0) return stops.back();
  const double pos = t * static_cast<double>(stops.size() - 1);
  const auto seg = std::min(static_cast<std::size_t>(pos), stops.size() - 2);
  const double f = pos - static_cast<double>(seg);
  const Rgba a = stops[seg];
  const Rgba b = stops[seg + 1];
  auto mix = [f](std::uint8_t x, std::uint8_t y) {
    return round_channel(static_cast<double>(x) + (static_cast<double>(y) - x) * f);
  };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b), mix(a.a, b.a)};
}

std::vector<double> normalize_weights(std::span<const std::optional<double>> values) {
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (const auto& v : values) {
    if (!v) continue;
    if (!any) {
      lo = hi = *v;
      any = true;
    } else {
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
  }
  std::vector<double> out(values.size(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    out[i] = hi == lo ? 0.5 : (*values[i] - lo) / (hi - lo);
  }
  return out;
}

std::size_t ResolvedStyle::visible_count() const {
  return static_cast<std::size_t>(std::count(visible.begin(), visible.end(), true));
}

// ---- resolution -----------------------------------------------------------

namespace {

// Collects CUSTOM fallbacks per channel so one warning summarises them.
class FallbackLog {
public:
  FallbackLog(ElementKind kind, std::string_view channel, std::string_view field)
      : kind_(kind), channel_(channel), field_(field) {}

  void note(const std::string& id) {
    if (count_++ == 0) first_ = id;
  }

  void flush(std::vector<std::string>& warnings) const {
    if (count_ == 0) return;
    warnings.push_back(fmt::format(
        "{} {}: {} element(s) lack a usable '{}' value (first: '{}'); default applied",
        to_string(kind_), channel_, count_, field_, first_));
  }

private:
  ElementKind kind_;
  std::string_view channel_;
  std::string field_;
  std::size_t count_ = 0;
  std::string first_;
};

template <typename Record>
std::vector<double> weight_positions(const std::vector<Record>& records, const std::string& field) {
  std::vector<std::optional<double>> weights;
  weights.reserve(records.size());
  for (const auto& r : records) weights.push_back(element_weight(r.data, field));
  return normalize_weights(weights);
}

template <typename Record>
std::vector<double> resolve_scalar(const std::vector<Record>& records, ScaleMethod method,
                                   double def, double lo, double hi, const std::string& field,
                                   const std::vector<double>& t, std::string_view channel,
                                   ElementKind kind, std::vector<std::string>& warnings) {
  std::vector<double> out(records.size(), def);
  switch (method) {
    case ScaleMethod::kDefault:
      break;
    case ScaleMethod::kScale:
      for (std::size_t i = 0; i < records.size(); ++i) {
        out[i] = std::clamp(lo + t[i] * (hi - lo), lo, hi);
      }
      break;
    case ScaleMethod::kCustom: {
      FallbackLog log(kind, channel, field);
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (auto v = element_weight(records[i].data, field)) {
          out[i] = std::clamp(*v, lo, hi);
        } else {
          log.note(records[i].id);
        }
      }
      log.flush(warnings);
      break;
    }
  }
  return out;
}

std::optional<bool> parse_bool(const DataValue& v) {
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  if (const std::string* s = std::get_if<std::string>(&v)) {
    std::string lower(*s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "true") return true;
    if (lower == "false") return false;
  }
  return std::nullopt;
}

const std::string* data_string(const DataMap& data, std::string_view field) {
  auto it = data.find(field);
  if (it == data.end()) return nullptr;
  return std::get_if<std::string>(&it->second);
}

bool uses_scale(const StyleOptions& o) {
  auto scaled = [](const std::optional<ScaleMethod>& m) { return m == ScaleMethod::kScale; };
  return o.color_method == ColorMethod::kScale || o.alpha_method == ScaleMethod::kScale ||
         scaled(o.size_method) || scaled(o.width_method);
}

template <typename Record>
ResolvedStyle resolve_common(const std::vector<Record>& records, const StyleOptions& o) {
  validate_options(o);
  ResolvedStyle s;
  s.kind = o.kind;
  const std::size_t n = records.size();
  const std::vector<double> t =
      uses_scale(o) ? weight_positions(records, o.weight_field) : std::vector<double>(n, 0.0);

  s.color.assign(n, o.default_color);
  switch (o.color_method) {
    case ColorMethod::kDefault:
      break;
    case ColorMethod::kScale: {
      const ColorScale scale(o.color_stops);
      for (std::size_t i = 0; i < n; ++i) s.color[i] = scale.at(t[i]);
      break;
    }
    case ColorMethod::kCustom: {
      FallbackLog log(o.kind, "color", o.color_field);
      for (std::size_t i = 0; i < n; ++i) {
        const std::string* text = data_string(records[i].data, o.color_field);
        auto c = text ? parse_hex_color(*text) : std::nullopt;
        if (c) s.color[i] = *c;
        else log.note(records[i].id);
      }
      log.flush(s.warnings);
      break;
    }
    case ColorMethod::kOriginal:
      s.color.assign(n, kOriginalIconTint);
      break;
  }
  if (o.kind == ElementKind::kMarker) {
    s.original_color.assign(n, o.color_method == ColorMethod::kOriginal);
  }

  s.alpha = resolve_scalar(records, o.alpha_method, o.default_alpha, o.min_alpha, o.max_alpha,
                           o.alpha_field, t, "alpha", o.kind, s.warnings);
  if (o.size_method) {
    s.size_px = resolve_scalar(records, *o.size_method, o.default_size_px, o.min_size_px,
                               o.max_size_px, o.size_field, t, "size", o.kind, s.warnings);
  }
  if (o.width_method) {
    s.width_px = resolve_scalar(records, *o.width_method, o.default_width_px, o.min_width_px,
                                o.max_width_px, o.width_field, t, "width", o.kind, s.warnings);
  }

  s.visible.assign(n, true);
  if (o.visibility_method == VisibilityMethod::kCustom) {
    FallbackLog log(o.kind, "visibility", o.visible_field);
    for (std::size_t i = 0; i < n; ++i) {
      auto it = records[i].data.find(o.visible_field);
      auto b = it != records[i].data.end() ? parse_bool(it->second) : std::nullopt;
      if (b) s.visible[i] = *b;
      else log.note(records[i].id);
    }
    log.flush(s.warnings);
  }
  return s;
}

}  // namespace

ResolvedStyle resolve_node_styles(const StreetNetwork& net, const StyleOptions& options) {
  if (options.kind != ElementKind::kNode) invalid("node styles need node options");
  return resolve_common(net.nodes(), options);
}

ResolvedStyle resolve_edge_styles(const StreetNetwork& net, const StyleOptions& options) {
  if (options.kind != ElementKind::kEdge) invalid("edge styles need edge options");
  return resolve_common(net.edges(), options);
}

ResolvedStyle resolve_marker_styles(const StreetNetwork& net, const StyleOptions& options) {
  if (options.kind != ElementKind::kMarker) invalid("marker styles need marker options");
  ResolvedStyle s = resolve_common(net.markers(), options);
  const auto& markers = net.markers();
  s.icon_id.resize(markers.size());
  FallbackLog log(ElementKind::kMarker, "icon", options.icon_field);
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const auto& m = markers[i];
    std::string fallback = m.icon_id.value_or(options.default_icon);
    if (options.icon_method == IconMethod::kCustom) {
      if (const std::string* icon = data_string(m.data, options.icon_field)) {
        s.icon_id[i] = *icon;
        continue;
      }
      log.note(m.id);
    }
    s.icon_id[i] = std::move(fallback);
  }
  log.flush(s.warnings);
  return s;
}

NetworkStyles resolve_styles(const StreetNetwork& net, const NetworkStyleOptions& options) {
  return {resolve_node_styles(net, options.nodes), resolve_edge_styles(net, options.edges),
          resolve_marker_styles(net, options.markers)};
}

}  // namespace streetlens
