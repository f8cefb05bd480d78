#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "streetlens/tessellate.hpp"

namespace streetlens {

// Little-endian wire layout:
//   "SYRB" | u16 format_version | u16 reserved | u64 bundle_version |
//   f64 reference_zoom | u32 edge vertices | u32 edge indices |
//   u32 node instances | u32 arrow instances | u32 marker instances |
//   u32 icon table byte length
// followed by the edge sections (positions f32x2, colors u8x4,
// element_index u32, indices u32), then for nodes, arrows and markers in
// that order: centers f32x2, size f32, rotation f32, color u8x4, icon u16,
// element_index u32. The icon table closes the bundle as a sequence of
// u32-length-prefixed UTF-8 strings.
inline constexpr std::uint16_t kBundleFormatVersion = 1;
inline constexpr std::size_t kBundleHeaderSize = 48;

enum class BundleErrc { kBadMagic, kTruncatedSection, kUnsupportedFormatVersion };

class BundleError : public Error {
public:
  BundleError(BundleErrc code, std::string message) : Error(std::move(message)), code_(code) {}
  BundleErrc code() const noexcept { return code_; }

private:
  BundleErrc code_;
};

std::vector<std::byte> encode_bundle(const RenderBundle& bundle);
RenderBundle decode_bundle(std::span<const std::byte> bytes);

}  // namespace streetlens
