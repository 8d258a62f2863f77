#include "leafmetric/point_cloud.hpp"

#include <stdexcept>
#include <string>

namespace leafmetric {

PointCloud::PointCloud(std::vector<Vec3> points,
                       std::optional<std::vector<Color>> colors,
                       std::optional<GridSize> grid, ScalarType precision)
    : points_(std::move(points)),
      colors_(std::move(colors)),
      grid_(grid),
      precision_(precision) {
  if (colors_ && colors_->size() != points_.size()) {
    throw std::invalid_argument("color count " + std::to_string(colors_->size()) +
                                " does not match point count " +
                                std::to_string(points_.size()));
  }
  if (grid_ && grid_->width * grid_->height != points_.size()) {
    throw std::invalid_argument("grid " + std::to_string(grid_->width) + "x" +
                                std::to_string(grid_->height) +
                                " does not match point count " +
                                std::to_string(points_.size()));
  }
  validity_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    validity_[i] = is_finite_point(points_[i]) ? 1 : 0;
    valid_count_ += validity_[i];
  }
}

std::vector<std::size_t> PointCloud::valid_indices() const {
  std::vector<std::size_t> out;
  out.reserve(valid_count_);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (validity_[i]) out.push_back(i);
  }
  return out;
}

}  // namespace leafmetric
