#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "leafmetric/point_cloud.hpp"

namespace leafmetric::io {

enum class PlyFormat { ascii, binary_little_endian };

/// Parses an ascii 1.0 or binary_little_endian 1.0 PLY stream.
///
/// The vertex element must carry x, y, z as float or double; red, green,
/// blue (uchar) are read when all three are present. Other properties and
/// elements are skipped. Organized dimensions come from
/// "obj_info width N" / "obj_info height M" (or the same keys as comments).
/// Throws ParseError naming a header line or body byte offset.
PointCloud parse_ply(std::string_view bytes);

/// Serializes a non-empty cloud. Coordinates keep the cloud's precision;
/// invalid points are written as NaN; the grid goes into obj_info lines.
std::string write_ply(const PointCloud& cloud, PlyFormat format);

PointCloud read_ply(const std::filesystem::path& path);

/// A binary mask over an organized cloud's pixel grid.
struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

class LeafMask {
 public:
  /// Pixels are sorted into row-major order and de-duplicated. Throws
  /// EmptyMaskError for an empty set, std::invalid_argument when a pixel
  /// lies outside the image.
  LeafMask(std::size_t width, std::size_t height, std::vector<Pixel> pixels,
           std::string leaf_id);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  const std::vector<Pixel>& pixels() const { return pixels_; }
  const std::string& leaf_id() const { return leaf_id_; }

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<Pixel> pixels_;
  std::string leaf_id_;
};

/// Parses a P2 or P5 PGM (maxval <= 255); nonzero pixels are leaf.
LeafMask parse_mask(std::string_view bytes, std::string leaf_id);

/// Encodes a mask as P5 with leaf pixels at 255.
std::string write_mask_pgm(const LeafMask& mask);

/// Encodes a mask as P2 (plain text). Mostly useful for fixtures.
std::string write_mask_pgm_ascii(const LeafMask& mask);

/// Returns the valid points under the mask, in row-major pixel order.
/// Throws GridError when the cloud has no grid or its size differs from the
/// mask, InsufficientPointsError when fewer than 3 valid points remain.
PointCloud extract_leaf_points(const PointCloud& cloud, const LeafMask& mask);

/// Whole-file read; throws Error if the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace leafmetric::io
