#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace leafmetric {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Color = std::array<std::uint8_t, 3>;

/// Pixel-grid dimensions of an organized cloud.
struct GridSize {
  std::size_t width = 0;
  std::size_t height = 0;

  friend bool operator==(const GridSize&, const GridSize&) = default;
};

/// Storage precision of coordinates, carried through PLY round trips.
enum class ScalarType { float32, float64 };

/// A set of 3D points in millimetres.
///
/// When `grid()` is set the cloud is organized: pixel (row, col) maps to
/// point index row * width + col. Points with any non-finite coordinate are
/// invalid and are kept in place so the pixel mapping survives.
class PointCloud {
 public:
  PointCloud() = default;

  /// Throws std::invalid_argument if colors or grid disagree with the
  /// point count.
  explicit PointCloud(std::vector<Vec3> points,
                      std::optional<std::vector<Color>> colors = std::nullopt,
                      std::optional<GridSize> grid = std::nullopt,
                      ScalarType precision = ScalarType::float64);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  const std::vector<Vec3>& points() const { return points_; }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }

  bool has_colors() const { return colors_.has_value(); }
  const std::optional<std::vector<Color>>& colors() const { return colors_; }

  const std::optional<GridSize>& grid() const { return grid_; }
  bool is_organized() const { return grid_.has_value(); }

  ScalarType precision() const { return precision_; }

  bool is_valid(std::size_t i) const { return validity_[i] != 0; }
  std::size_t valid_count() const { return valid_count_; }

  /// Indices of the valid points in ascending order.
  std::vector<std::size_t> valid_indices() const;

 private:
  std::vector<Vec3> points_;
  std::optional<std::vector<Color>> colors_;
  std::optional<GridSize> grid_;
  ScalarType precision_ = ScalarType::float64;
  std::vector<std::uint8_t> validity_;
  std::size_t valid_count_ = 0;
};

inline bool is_finite_point(const Vec3& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

}  // namespace leafmetric
