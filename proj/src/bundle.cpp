#include "streetlens/bundle.hpp"

#include <bit>
#include <cstring>
#include <string_view>

#include <fmt/format.h>

namespace streetlens {

static_assert(std::endian::native == std::endian::little,
              "bundle codec writes host-order scalars and assumes a little-endian host");

namespace {

constexpr std::string_view kMagic = "SYRB";

class Writer {
public:
  explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

  template <typename T>
  void scalar(T v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }

  template <typename T>
  void array(const std::vector<T>& v) {
    const auto* p = reinterpret_cast<const std::byte*>(v.data());
    out_.insert(out_.end(), p, p + v.size() * sizeof(T));
  }

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::byte*>(data);
    out_.insert(out_.end(), p, p + n);
  }

  std::vector<std::byte> take() { return std::move(out_); }

private:
  std::vector<std::byte> out_;
};

class Reader {
public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}

  template <typename T>
  T scalar(std::string_view section) {
    need(sizeof(T), section);
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  template <typename T>
  void array(std::vector<T>& v, std::size_t count, std::string_view section) {
    need(count * sizeof(T), section);
    v.resize(count);
    std::memcpy(v.data(), in_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
  }

  std::span<const std::byte> take(std::size_t n, std::string_view section) {
    need(n, section);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return in_.size() - pos_; }

private:
  void need(std::size_t n, std::string_view section) const {
    if (n > in_.size() - pos_) {
      throw BundleError(BundleErrc::kTruncatedSection,
                        fmt::format("bundle section '{}' needs {} bytes, {} left", section, n,
                                    in_.size() - pos_));
    }
  }

  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

static_assert(sizeof(Rgba) == 4);

std::size_t sprite_bytes(const SpriteInstances& s) {
  return s.size() * (8 + 4 + 4 + 4 + 2 + 4);
}

void write_sprites(Writer& w, const SpriteInstances& s) {
  w.array(s.centers);
  w.array(s.size_px);
  w.array(s.rotation_rad);
  w.array(s.colors);
  w.array(s.icon);
  w.array(s.element_index);
}

void read_sprites(Reader& r, SpriteInstances& s, std::size_t n, std::string_view kind) {
  const std::string prefix(kind);
  r.array(s.centers, 2 * n, prefix + " centers");
  r.array(s.size_px, n, prefix + " size");
  r.array(s.rotation_rad, n, prefix + " rotation");
  r.array(s.colors, n, prefix + " color");
  r.array(s.icon, n, prefix + " icon");
  r.array(s.element_index, n, prefix + " element_index");
}

std::uint32_t count32(std::size_t n, std::string_view what) {
  if (n > 0xFFFFFFFFu) throw Error(fmt::format("bundle {} count {} exceeds u32", what, n));
  return static_cast<std::uint32_t>(n);
}

void check_sprites(const SpriteInstances& s, std::string_view kind) {
  const auto n = s.size();
  if (s.centers.size() != 2 * n || s.rotation_rad.size() != n || s.colors.size() != n ||
      s.icon.size() != n || s.element_index.size() != n) {
    throw Error(fmt::format("{} sprite arrays have inconsistent lengths", kind));
  }
}

}  // namespace

std::vector<std::byte> encode_bundle(const RenderBundle& b) {
  const auto& m = b.edge_mesh;
  const auto vertices = m.vertex_count();
  if (m.positions.size() != 2 * vertices || m.element_index.size() != vertices) {
    throw Error("edge mesh arrays have inconsistent lengths");
  }
  check_sprites(b.node_sprites, "node");
  check_sprites(b.arrow_sprites, "arrow");
  check_sprites(b.marker_sprites, "marker");

  std::size_t icon_bytes = 0;
  for (const auto& id : b.icon_table) icon_bytes += 4 + id.size();

  Writer w(kBundleHeaderSize + vertices * 16 + m.indices.size() * 4 + sprite_bytes(b.node_sprites) +
           sprite_bytes(b.arrow_sprites) + sprite_bytes(b.marker_sprites) + icon_bytes);
  w.bytes(kMagic.data(), kMagic.size());
  w.scalar<std::uint16_t>(kBundleFormatVersion);
  w.scalar<std::uint16_t>(0);
  w.scalar<std::uint64_t>(b.version);
  w.scalar<double>(b.reference_zoom);
  w.scalar(count32(vertices, "edge vertex"));
  w.scalar(count32(m.indices.size(), "edge index"));
  w.scalar(count32(b.node_sprites.size(), "node instance"));
  w.scalar(count32(b.arrow_sprites.size(), "arrow instance"));
  w.scalar(count32(b.marker_sprites.size(), "marker instance"));
  w.scalar(count32(icon_bytes, "icon table byte"));

  w.array(m.positions);
  w.array(m.colors);
  w.array(m.element_index);
  w.array(m.indices);
  write_sprites(w, b.node_sprites);
  write_sprites(w, b.arrow_sprites);
  write_sprites(w, b.marker_sprites);
  for (const auto& id : b.icon_table) {
    w.scalar(count32(id.size(), "icon id length"));
    w.bytes(id.data(), id.size());
  }
  return w.take();
}

RenderBundle decode_bundle(std::span<const std::byte> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic.data(), 4) != 0) {
    throw BundleError(BundleErrc::kBadMagic, "bundle does not start with SYRB");
  }
  const auto format = r.scalar<std::uint16_t>("format_version");
  if (format != kBundleFormatVersion) {
    throw BundleError(BundleErrc::kUnsupportedFormatVersion,
                      fmt::format("bundle format version {} is not supported", format));
  }
  r.scalar<std::uint16_t>("reserved");

  RenderBundle b;
  b.version = r.scalar<std::uint64_t>("bundle_version");
  b.reference_zoom = r.scalar<double>("reference_zoom");
  const auto vertices = r.scalar<std::uint32_t>("counts");
  const auto indices = r.scalar<std::uint32_t>("counts");
  const auto nodes = r.scalar<std::uint32_t>("counts");
  const auto arrows = r.scalar<std::uint32_t>("counts");
  const auto markers = r.scalar<std::uint32_t>("counts");
  const auto icon_bytes = r.scalar<std::uint32_t>("counts");

  // Check the declared total before allocating anything sized by the counts.
  const std::uint64_t declared = std::uint64_t{vertices} * 16 + std::uint64_t{indices} * 4 +
                                 (std::uint64_t{nodes} + arrows + markers) * 26 + icon_bytes;
  if (declared != r.remaining()) {
    throw BundleError(BundleErrc::kTruncatedSection,
                      fmt::format("bundle declares {} payload bytes but carries {}", declared,
                                  r.remaining()));
  }

  auto& m = b.edge_mesh;
  r.array(m.positions, std::size_t{vertices} * 2, "edge positions");
  r.array(m.colors, vertices, "edge colors");
  r.array(m.element_index, vertices, "edge element_index");
  r.array(m.indices, indices, "edge indices");
  read_sprites(r, b.node_sprites, nodes, "node");
  read_sprites(r, b.arrow_sprites, arrows, "arrow");
  read_sprites(r, b.marker_sprites, markers, "marker");

  auto table = r.take(icon_bytes, "icon table");
  Reader tr(table);
  while (tr.remaining() > 0) {
    const auto len = tr.scalar<std::uint32_t>("icon id length");
    auto s = tr.take(len, "icon id");
    b.icon_table.emplace_back(reinterpret_cast<const char*>(s.data()), s.size());
  }
  return b;
}

}  // namespace streetlens
