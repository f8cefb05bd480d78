#include "streetlens/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace streetlens::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void replace_all(std::string& s, std::string_view token, std::string_view value) {
  for (auto pos = s.find(token); pos != std::string::npos; pos = s.find(token, pos + value.size())) {
    s.replace(pos, token.size(), value);
  }
}

}  // namespace

MercatorPoint project(double lat, double lon) {
  const double phi = std::clamp(lat, -kMaxLatitude, kMaxLatitude) * kDegToRad;
  const double x = (lon + 180.0) / 360.0;
  const double y = (1.0 - std::log(std::tan(phi) + 1.0 / std::cos(phi)) / std::numbers::pi) / 2.0;
  return {x, y};
}

LatLon unproject(MercatorPoint p) {
  const double lon = p.x * 360.0 - 180.0;
  const double lat = std::atan(std::sinh(std::numbers::pi * (1.0 - 2.0 * p.y))) / kDegToRad;
  return {lat, lon};
}

double world_scale(double zoom) { return kTileSize * std::exp2(zoom); }

ScreenPoint to_screen(MercatorPoint p, const Viewport& v) {
  const MercatorPoint c = project(v.center);
  const double scale = world_scale(v.zoom);
  return {(p.x - c.x) * scale + v.width_px / 2.0, (p.y - c.y) * scale + v.height_px / 2.0};
}

MercatorPoint from_screen(ScreenPoint s, const Viewport& v) {
  const MercatorPoint c = project(v.center);
  const double scale = world_scale(v.zoom);
  return {c.x + (s.x - v.width_px / 2.0) / scale, c.y + (s.y - v.height_px / 2.0) / scale};
}

std::string tile_url(std::string_view url_template, const std::vector<std::string>& subdomains,
                     int x, int y, int z) {
  for (std::string_view token : {"{x}", "{y}", "{z}"}) {
    if (url_template.find(token) == std::string_view::npos) {
      throw GeoError(GeoErrc::kMissingPlaceholder,
                     fmt::format("tile URL template lacks {} placeholder", token));
    }
  }
  std::string url(url_template);
  if (url.find("{s}") != std::string::npos) {
    if (subdomains.empty()) {
      throw GeoError(GeoErrc::kNoSubdomains, "tile URL template uses {s} but no subdomains given");
    }
    const auto n = static_cast<long long>(subdomains.size());
    const auto slot = ((static_cast<long long>(x) + y) % n + n) % n;
    replace_all(url, "{s}", subdomains[static_cast<std::size_t>(slot)]);
  }
  replace_all(url, "{x}", std::to_string(x));
  replace_all(url, "{y}", std::to_string(y));
  replace_all(url, "{z}", std::to_string(z));
  return url;
}

}  // namespace streetlens::geo
