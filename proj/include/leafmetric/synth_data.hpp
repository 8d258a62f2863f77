#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "leafmetric/cloud_io.hpp"
#include "leafmetric/point_cloud.hpp"

namespace leafmetric::synth {

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  /// Rotation about x, then y, then z (degrees), followed by translation.
  static RigidTransform from_euler_deg(double rx, double ry, double rz, const Vec3& t);
};

/// Where replaced points go.
///   depth - same in-plane position, pushed along the leaf normal by at
///           least `outlier_min_distance` (a mask pixel that leaks onto
///           background behind or in front of the leaf)
///   box   - uniform in a box three times the leaf's size, rejected while
///           closer than `outlier_min_distance` to the leaf plane
enum class OutlierModel { depth, box };

struct LeafSpec {
  double length = 60.0;  // mm, full major axis
  double width = 35.0;   // mm, full minor axis
  double point_spacing = 0.5;
  double noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  double outlier_min_distance = 0.0;
  OutlierModel outlier_model = OutlierModel::depth;
  /// Cylinder radius for bending along the length; infinity is flat.
  double bend_radius = std::numeric_limits<double>::infinity();
  RigidTransform pose;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LeafTruth {
  double length = 0.0;
  double width = 0.0;
};

/// Organized samples of one leaf: `cols` x `rows` pixels, NaN outside the
/// outline. Columns run along the length, rows along the width.
struct LeafTile {
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::vector<Vec3> points;
  LeafTruth truth;
};

struct SyntheticLeaf {
  PointCloud cloud;
  LeafTruth truth;
};

/// Samples an elliptical leaf with semi-axes length/2, width/2 on a grid
/// whose spacing is at most point_spacing and which contains both axis
/// tips. Then bends, adds noise, replaces outliers and applies the pose.
LeafTile generate_leaf_tile(const LeafSpec& spec);

/// The valid points of generate_leaf_tile as an unorganized cloud. Throws
/// InsufficientPointsError below 3 points.
SyntheticLeaf generate_leaf(const LeafSpec& spec);

struct CubeSpec {
  double edge = 50.0;              // mm
  double camera_distance = 400.0;  // mm, camera to cube centre
  double noise_sigma = 0.0;
  /// Camera angular pitch in radians; face sample spacing is about
  /// camera_distance * angular_pitch.
  double angular_pitch = 0.002;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticCube {
  PointCloud cloud;
  double truth_edge = 0.0;
  double point_spacing = 0.0;
};

/// The three faces of a cube visible from a camera on the cube's main
/// diagonal. Coordinates are in the camera frame (camera at the origin
/// looking down +z). Each face is a (m+1) x (m+1) grid that includes its
/// edges, m = round(edge / (distance * pitch)).
SyntheticCube generate_cube_face_scan(const CubeSpec& spec);

struct ScanLeaf {
  std::string leaf_id;
  LeafSpec spec;
};

struct ScanSpec {
  std::string scan_id = "synthetic";
  std::string date = "1970-01-01";
  std::vector<ScanLeaf> leaves;
  std::size_t gutter = 2;  // NaN columns between leaf tiles
};

struct SyntheticScan {
  PointCloud cloud;  // organized
  std::vector<io::LeafMask> masks;
  std::vector<LeafTruth> truth;  // parallel to masks
};

/// Places leaf tiles side by side in one organized cloud and emits a full
/// mask per leaf.
SyntheticScan generate_scan(const ScanSpec& spec);

/// Parsed synth spec file: exactly one of `scan` / `cube` is set.
struct SynthRequest {
  std::optional<ScanSpec> scan;
  std::optional<CubeSpec> cube;
};

/// JSON input for the synth command. Leaf scan form:
///   {"scan_id": "...", "date": "...", "seed": 7,
///    "defaults": {"point_spacing": 0.5, "noise_sigma": 0, ...},
///    "leaves": [{"leaf_id": "L01", "length": 60, "width": 35,
///                "rotation_deg": [0, 0, 0], "translation": [0, 0, 400]}]}
/// Cube form: {"cube": {"edge": 50, "camera_distance": 400, ...}}.
/// Throws ParseError or std::invalid_argument.
SynthRequest parse_synth_spec(std::string_view json_text);

}  // namespace leafmetric::synth
