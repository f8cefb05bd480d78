#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "streetlens/network.hpp"

namespace testing {

using namespace streetlens;

inline NodeRecord node(std::string id, double lat, double lon, DataMap data = {}) {
  return {std::move(id), lat, lon, std::move(data)};
}

inline EdgeRecord edge(std::string id, std::string source, std::string target, std::vector<LatLon> coords,
                       DataMap data = {}) {
  return {std::move(id), std::move(source), std::move(target), std::move(coords), std::move(data)};
}

inline MarkerRecord marker(std::string id, double lat, double lon, DataMap data = {}) {
  MarkerRecord m;
  m.id = std::move(id);
  m.lat = lat;
  m.lon = lon;
  m.data = std::move(data);
  return m;
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("streetlens-test-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline std::string fixture_path(const char* name) { return std::string(STREETLENS_FIXTURE_DIR) + "/" + name; }

}  // namespace testing
