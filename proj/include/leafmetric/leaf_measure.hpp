#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leafmetric/cloud_io.hpp"
#include "leafmetric/manifest.hpp"
#include "leafmetric/plane_geometry.hpp"
#include "leafmetric/point_cloud.hpp"

namespace leafmetric::measure {

/// Which plane estimate(s) feed the extents.
///   plain    - minimal-sample RANSAC plane
///   refined  - RANSAC followed by a least-squares refit on the inliers
///   combined - mean of the plain and refined (length, width)
///   selected - length from plain, width from refined
enum class Method { plain, refined, combined, selected };

std::string_view to_string(Method m);
/// Throws std::invalid_argument for unknown names.
Method parse_method(std::string_view name);

struct LeafMeasurement {
  std::string leaf_id;
  double length = 0.0;  // mm
  double width = 0.0;   // mm
  Method method = Method::plain;
  double inlier_fraction = 0.0;
  double plane_rms = 0.0;  // mm
};

struct ExtentConfig {
  /// Fraction trimmed from each end of the projected coordinate before
  /// taking the extent; 0 gives the full min-max extent.
  double trim_percentile = 0.0;
  geometry::RansacConfig ransac;

  void validate() const;
};

/// Extents of a 2D point set along its principal axes.
struct PrincipalExtents {
  double major = 0.0;
  double minor = 0.0;
  Vec2 major_axis = Vec2::UnitX();
  Vec2 minor_axis = Vec2::UnitY();
};

/// Principal axes from the 2D scatter matrix about the centroid; extent is
/// the spread between the (1 - trim) and trim quantiles along each axis.
/// Near-circular sets (relative eigen gap < 1e-9) take as major axis the
/// eigenvector closer to the u direction.
PrincipalExtents principal_extents(std::span<const Vec2> points, double trim);

/// Linear-interpolation quantile of already sorted values.
double sorted_quantile(std::span<const double> sorted, double q);

LeafMeasurement measure_leaf(const PointCloud& leaf_points, const ExtentConfig& config,
                             Method method, std::string leaf_id = {});

/// Mean of two measurements of the same leaf. Throws std::invalid_argument
/// when the inputs are not (plain, refined) for one leaf_id.
LeafMeasurement combined_estimate(const LeafMeasurement& plain, const LeafMeasurement& refined);

struct SkipRecord {
  std::string leaf_id;
  std::string error;
};

struct ScanResult {
  std::vector<LeafMeasurement> measurements;
  std::vector<SkipRecord> skipped;
};

/// Measures every mask against one organized cloud. Per-leaf failures
/// become skip records; output order follows `masks`. Leaves are processed
/// in parallel.
ScanResult measure_masks(const PointCloud& cloud, std::span<const io::LeafMask> masks,
                         const ExtentConfig& config, Method method);

/// Loads the manifest's cloud and masks, then measures. Cloud load
/// failures and unreadable mask files throw; a mask that parses badly, is
/// empty, mismatches the grid or fails geometry becomes a skip record.
ScanResult measure_scan(const io::ScanManifest& manifest, const ExtentConfig& config,
                        Method method);

}  // namespace leafmetric::measure
