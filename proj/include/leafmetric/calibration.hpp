#pragma once

#include <array>
#include <string>
#include <vector>

#include "leafmetric/plane_geometry.hpp"
#include "leafmetric/point_cloud.hpp"

namespace leafmetric::eval {

/// How a face's edge length is read off its points.
///   moment - sqrt(12 * variance) along the edge direction, minus the
///            plane noise variance; treats each sample as a pixel
///            footprint, so it grows with sample spacing
///   extent - plain max - min along the edge direction
enum class EdgeEstimator { moment, extent };

struct CalibrationConfig {
  geometry::RansacConfig ransac{.iterations = 1000, .distance_threshold = 2.0, .min_inliers = 12,
                                .seed = 0, .refine = true};
  EdgeEstimator estimator = EdgeEstimator::moment;
  /// A face must hold at least this fraction of the valid points.
  double min_face_fraction = 0.10;
  /// The three planes together must explain this fraction of the points.
  double min_coverage = 0.80;
  /// Allowed deviation of face normals from mutual orthogonality.
  double max_orthogonality_error_deg = 10.0;
};

struct FaceFit {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  std::size_t points = 0;
  double rms = 0.0;  // mm
};

struct CalibrationResult {
  std::array<FaceFit, 3> faces;
  std::vector<double> edge_samples;  // one per (face, neighbouring face)
  double edge_estimate = 0.0;        // mm
  double true_edge = 0.0;            // mm
  double error_percentage = 0.0;
  double rmse = 0.0;  // mm, point-to-face distance over all face points
  double camera_distance = 0.0;  // mm, origin (camera) to the fitted cube centre
};

/// Fits the three visible faces of a cube scan and estimates its edge.
/// Throws DegenerateInputError when three mutually orthogonal faces
/// covering the cloud cannot be found.
CalibrationResult calibrate_cube(const PointCloud& cloud, double true_edge,
                                 const CalibrationConfig& config = {});

/// One row in the "camera to cube / error percentage / RMSE" layout, with
/// a header and per-face RMS lines.
std::string calibration_table(const CalibrationResult& result);
std::string calibration_json(const CalibrationResult& result);

}  // namespace leafmetric::eval
