#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "leafmetric/point_cloud.hpp"

namespace leafmetric::geometry {

/// Plane normal·p = offset with a unit normal whose largest-magnitude
/// component is positive.
struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  /// Indices into the cloud the plane was fitted on.
  std::vector<std::size_t> inliers;
  /// RMS point-to-plane distance over `inliers`, mm.
  double rms_distance = 0.0;
};

/// Orthonormal frame spanning a plane; (u, v, normal) is right-handed.
struct PlaneBasis {
  Vec3 origin = Vec3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();

  Vec3 normal() const { return u.cross(v); }
};

struct RansacConfig {
  int iterations = 1000;
  double distance_threshold = 2.0;  // mm
  std::size_t min_inliers = 12;
  std::uint64_t seed = 0;
  /// Total-least-squares refit on the winning inlier set.
  bool refine = false;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// Three distinct positions into the list of valid points.
using SampleTriple = std::array<std::uint32_t, 3>;

/// The draw schedule used by both RANSAC drivers: `iterations` triples of
/// distinct values in [0, n), generated from `seed` alone.
std::vector<SampleTriple> ransac_sample_schedule(std::size_t n, int iterations,
                                                 std::uint64_t seed);

double point_plane_distance(const Vec3& p, const PlaneModel& plane);

/// Best-of-N minimal-sample consensus over the valid points of `points`.
///
/// Winner: most inliers, then lower RMS, then lower iteration index.
/// Iterations are scored in parallel (OpenMP); the result is bit-identical
/// to fit_plane_ransac_serial for the same input and seed.
///
/// Throws InsufficientPointsError (< 3 valid points), DegenerateInputError
/// (every sample collinear), FitError (best support below min_inliers).
PlaneModel fit_plane_ransac(const PointCloud& points, const RansacConfig& config);

/// Single-threaded reference implementation of fit_plane_ransac.
PlaneModel fit_plane_ransac_serial(const PointCloud& points, const RansacConfig& config);

/// Plane through the centroid of `indices` with the normal of least
/// scatter. `inliers` is set to `indices` and `rms_distance` is computed
/// over them.
PlaneModel fit_plane_least_squares(const PointCloud& points,
                                   std::span<const std::size_t> indices);

/// Flips (normal, offset) so the largest-magnitude normal component is
/// positive. Ties go to the lowest axis.
void orient_normal(Vec3& normal, double& offset);

/// Origin = centroid of the valid points' projections; u = projection of
/// the global axis least parallel to the normal; v = normal × u.
PlaneBasis plane_basis(const PlaneModel& plane, const PointCloud& points);

/// In-plane coordinates ((p - origin)·u, (p - origin)·v) of each valid
/// point, input order preserved.
std::vector<Vec2> project_to_plane(const PointCloud& points, const PlaneBasis& basis);

}  // namespace leafmetric::geometry
