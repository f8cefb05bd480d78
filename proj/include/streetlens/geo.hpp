#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "streetlens/error.hpp"
#include "streetlens/network.hpp"

namespace streetlens::geo {

// Latitude limit of the square Web Mercator world.
inline constexpr double kMaxLatitude = 85.0511287798;
inline constexpr double kTileSize = 256.0;

// Normalised world coordinate: x grows east, y grows south, both in [0, 1].
struct MercatorPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const MercatorPoint&, const MercatorPoint&) = default;
};

struct ScreenPoint {
  double x = 0.0;
  double y = 0.0;
};

struct Viewport {
  LatLon center;
  double zoom = 0.0;
  double width_px = 0.0;
  double height_px = 0.0;
};

MercatorPoint project(double lat, double lon);
inline MercatorPoint project(LatLon p) { return project(p.lat, p.lon); }

LatLon unproject(MercatorPoint p);

// World width in pixels at `zoom`: 256 * 2^zoom.
double world_scale(double zoom);

ScreenPoint to_screen(MercatorPoint p, const Viewport& v);
MercatorPoint from_screen(ScreenPoint s, const Viewport& v);

enum class GeoErrc { kMissingPlaceholder, kNoSubdomains };

class GeoError : public Error {
public:
  GeoError(GeoErrc code, std::string message) : Error(std::move(message)), code_(code) {}
  GeoErrc code() const noexcept { return code_; }

private:
  GeoErrc code_;
};

// Expands a slippy-map URL template. {s} picks subdomains[(x + y) mod n].
std::string tile_url(std::string_view url_template, const std::vector<std::string>& subdomains,
                     int x, int y, int z);

}  // namespace streetlens::geo
