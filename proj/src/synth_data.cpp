#include "leafmetric/synth_data.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include <Eigen/Geometry>
#include <json.hpp>

#include "leafmetric/error.hpp"
#include "leafmetric/rng.hpp"

namespace leafmetric::synth {

RigidTransform RigidTransform::from_euler_deg(double rx, double ry, double rz, const Vec3& t) {
  constexpr double deg = std::numbers::pi / 180.0;
  RigidTransform out;
  out.rotation = (Eigen::AngleAxisd(rz * deg, Vec3::UnitZ()) *
                  Eigen::AngleAxisd(ry * deg, Vec3::UnitY()) *
                  Eigen::AngleAxisd(rx * deg, Vec3::UnitX()))
                     .toRotationMatrix();
  out.translation = t;
  return out;
}

void LeafSpec::validate() const {
  if (!(width > 0.0) || !(length >= width) || !std::isfinite(length)) {
    throw std::invalid_argument("leaf spec needs length >= width > 0");
  }
  if (!(point_spacing > 0.0)) throw std::invalid_argument("point_spacing must be > 0");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    throw std::invalid_argument("outlier_fraction must be in [0, 1)");
  }
  if (!(outlier_min_distance >= 0.0)) {
    throw std::invalid_argument("outlier_min_distance must be >= 0");
  }
  if (!(bend_radius > 0.0)) throw std::invalid_argument("bend_radius must be > 0");
  if (std::isfinite(bend_radius) && length > 2.0 * std::numbers::pi * bend_radius) {
    throw std::invalid_argument("bend_radius too small: leaf would wrap past a full turn");
  }
}

LeafTile generate_leaf_tile(const LeafSpec& spec) {
  spec.validate();
  const double a = 0.5 * spec.length;
  const double b = 0.5 * spec.width;
  // Even interval counts put grid lines on both axes, so the tips are sampled.
  const auto nx = static_cast<std::size_t>(2 * std::ceil(spec.length / (2 * spec.point_spacing)));
  const auto ny = static_cast<std::size_t>(2 * std::ceil(spec.width / (2 * spec.point_spacing)));
  const double hx = spec.length / static_cast<double>(nx);
  const double hy = spec.width / static_cast<double>(ny);

  LeafTile tile;
  tile.cols = nx + 1;
  tile.rows = ny + 1;
  tile.truth = {spec.length, spec.width};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  tile.points.assign(tile.cols * tile.rows, Vec3(nan, nan, nan));

  std::vector<std::size_t> leaf;  // tile indices inside the outline
  const bool bent = std::isfinite(spec.bend_radius);
  for (std::size_t r = 0; r < tile.rows; ++r) {
    const double y = (static_cast<double>(r) - static_cast<double>(ny / 2)) * hy;
    for (std::size_t c = 0; c < tile.cols; ++c) {
      const double x = (static_cast<double>(c) - static_cast<double>(nx / 2)) * hx;
      if ((x / a) * (x / a) + (y / b) * (y / b) > 1.0 + 1e-9) continue;
      Vec3 p(x, y, 0.0);
      if (bent) {
        const double R = spec.bend_radius;
        p = Vec3(R * std::sin(x / R), y, R * (1.0 - std::cos(x / R)));
      }
      tile.points[r * tile.cols + c] = p;
      leaf.push_back(r * tile.cols + c);
    }
  }

  Rng rng(spec.seed);
  if (spec.noise_sigma > 0.0) {
    for (std::size_t idx : leaf) {
      Vec3& p = tile.points[idx];
      p.x() += spec.noise_sigma * rng.normal();
      p.y() += spec.noise_sigma * rng.normal();
      p.z() += spec.noise_sigma * rng.normal();
    }
  }

  const auto n_out = static_cast<std::size_t>(spec.outlier_fraction * static_cast<double>(leaf.size()));
  if (n_out > 0) {
    // Partial Fisher-Yates picks which leaf pixels become outliers.
    std::vector<std::size_t> pool = leaf;
    const double reach = std::max(1.5 * spec.width, spec.outlier_min_distance + spec.width);
    for (std::size_t k = 0; k < n_out; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.index(pool.size() - k));
      std::swap(pool[k], pool[j]);
      Vec3& p = tile.points[pool[k]];
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      if (spec.outlier_model == OutlierModel::depth) {
        p.z() += sign * rng.uniform(spec.outlier_min_distance, reach);
      } else {
        double z = 0.0;
        do {
          z = rng.uniform(-reach, reach);
        } while (std::abs(z) < spec.outlier_min_distance);
        p = Vec3(rng.uniform(-3.0 * a, 3.0 * a), rng.uniform(-3.0 * b, 3.0 * b), z);
      }
    }
  }

  for (std::size_t idx : leaf) tile.points[idx] = spec.pose.apply(tile.points[idx]);
  return tile;
}

SyntheticLeaf generate_leaf(const LeafSpec& spec) {
  LeafTile tile = generate_leaf_tile(spec);
  std::vector<Vec3> pts;
  for (const auto& p : tile.points) {
    if (is_finite_point(p)) pts.push_back(p);
  }
  if (pts.size() < 3) {
    throw InsufficientPointsError("leaf spec yields " + std::to_string(pts.size()) +
                                  " points; at least 3 are required");
  }
  return {PointCloud(std::move(pts)), tile.truth};
}

void CubeSpec::validate() const {
  if (!(edge > 0.0)) throw std::invalid_argument("cube edge must be > 0");
  if (!(camera_distance > edge)) {
    throw std::invalid_argument("camera_distance must exceed the cube edge");
  }
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  if (!(angular_pitch > 0.0)) throw std::invalid_argument("angular_pitch must be > 0");
}

SyntheticCube generate_cube_face_scan(const CubeSpec& spec) {
  spec.validate();
  const double e = spec.edge;
  const auto m = static_cast<std::size_t>(
      std::max(1.0, std::round(e / (spec.camera_distance * spec.angular_pitch))));
  const double h = e / static_cast<double>(m);
  const double half = 0.5 * e;

  // Cube frame: centred at the origin, visible faces +x, +y, +z.
  const Vec3 toward_camera = Vec3(1.0, 1.0, 1.0).normalized();
  const Eigen::Matrix3d R =
      Eigen::Quaterniond::FromTwoVectors(toward_camera, -Vec3::UnitZ()).toRotationMatrix();
  const Vec3 centre(0.0, 0.0, spec.camera_distance);

  Rng rng(spec.seed);
  std::vector<Vec3> pts;
  pts.reserve(3 * (m + 1) * (m + 1));
  for (int face = 0; face < 3; ++face) {
    const int ax_u = (face + 1) % 3;
    const int ax_v = (face + 2) % 3;
    for (std::size_t i = 0; i <= m; ++i) {
      for (std::size_t j = 0; j <= m; ++j) {
        // Shared edges are emitted once, by the lower-numbered face.
        if ((ax_u < face && i == m) || (ax_v < face && j == m)) continue;
        Vec3 p;
        p[face] = half;
        p[ax_u] = -half + static_cast<double>(i) * h;
        p[ax_v] = -half + static_cast<double>(j) * h;
        Vec3 q = R * p + centre;
        if (spec.noise_sigma > 0.0) {
          q.x() += spec.noise_sigma * rng.normal();
          q.y() += spec.noise_sigma * rng.normal();
          q.z() += spec.noise_sigma * rng.normal();
        }
        pts.push_back(q);
      }
    }
  }
  return {PointCloud(std::move(pts)), e, h};
}

SyntheticScan generate_scan(const ScanSpec& spec) {
  if (spec.leaves.empty()) throw std::invalid_argument("scan spec has no leaves");
  std::set<std::string> ids;
  for (const auto& l : spec.leaves) {
    if (l.leaf_id.empty()) throw std::invalid_argument("leaf_id must not be empty");
    if (!ids.insert(l.leaf_id).second) {
      throw std::invalid_argument("duplicate leaf_id '" + l.leaf_id + "'");
    }
  }

  std::vector<LeafTile> tiles;
  tiles.reserve(spec.leaves.size());
  std::size_t width = 0;
  std::size_t height = 0;
  for (const auto& l : spec.leaves) {
    tiles.push_back(generate_leaf_tile(l.spec));
    width += tiles.back().cols;
    height = std::max(height, tiles.back().rows);
  }
  width += spec.gutter * (tiles.size() - 1);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Vec3> grid(width * height, Vec3(nan, nan, nan));
  SyntheticScan out;
  std::size_t col0 = 0;
  for (std::size_t k = 0; k < tiles.size(); ++k) {
    const LeafTile& t = tiles[k];
    std::vector<io::Pixel> pixels;
    for (std::size_t r = 0; r < t.rows; ++r) {
      for (std::size_t c = 0; c < t.cols; ++c) {
        const Vec3& p = t.points[r * t.cols + c];
        if (!is_finite_point(p)) continue;
        grid[r * width + col0 + c] = p;
        pixels.push_back({r, col0 + c});
      }
    }
    out.masks.emplace_back(width, height, std::move(pixels), spec.leaves[k].leaf_id);
    out.truth.push_back(t.truth);
    col0 += t.cols + spec.gutter;
  }
  out.cloud = PointCloud(std::move(grid), std::nullopt, GridSize{width, height});
  return out;
}

namespace {

using nlohmann::json;

double number_or(const json& obj, const char* key, double fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_number()) throw ParseError(std::string("synth spec: '") + key + "' must be a number");
  return it->get<double>();
}

Vec3 vec3_or(const json& obj, const char* key, const Vec3& fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_array() || it->size() != 3 || !(*it)[0].is_number() || !(*it)[1].is_number() ||
      !(*it)[2].is_number()) {
    throw ParseError(std::string("synth spec: '") + key + "' must be an array of 3 numbers");
  }
  return Vec3((*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>());
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ParseError(std::string("synth spec: unknown key '") + k + "' in " + where);
  }
}

// Fields shared between "defaults" and individual leaves.
void apply_leaf_fields(const json& obj, LeafSpec& s) {
  s.point_spacing = number_or(obj, "point_spacing", s.point_spacing);
  s.noise_sigma = number_or(obj, "noise_sigma", s.noise_sigma);
  s.outlier_fraction = number_or(obj, "outlier_fraction", s.outlier_fraction);
  s.outlier_min_distance = number_or(obj, "outlier_min_distance", s.outlier_min_distance);
  if (auto it = obj.find("outlier_model"); it != obj.end()) {
    if (*it == "depth") s.outlier_model = OutlierModel::depth;
    else if (*it == "box") s.outlier_model = OutlierModel::box;
    else throw ParseError("synth spec: outlier_model must be \"depth\" or \"box\"");
  }
  if (auto it = obj.find("bend_radius"); it != obj.end()) {
    s.bend_radius = it->is_null() ? std::numeric_limits<double>::infinity()
                                  : number_or(obj, "bend_radius", s.bend_radius);
  }
}

SynthRequest parse_impl(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("synth spec: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("synth spec: top level must be an object");

  SynthRequest req;
  if (auto it = doc.find("cube"); it != doc.end()) {
    check_keys(doc, {"cube"}, "cube spec");
    const json& c = *it;
    if (!c.is_object()) throw ParseError("synth spec: 'cube' must be an object");
    check_keys(c, {"edge", "camera_distance", "noise_sigma", "angular_pitch", "seed"}, "cube");
    CubeSpec cube;
    cube.edge = number_or(c, "edge", cube.edge);
    cube.camera_distance = number_or(c, "camera_distance", cube.camera_distance);
    cube.noise_sigma = number_or(c, "noise_sigma", cube.noise_sigma);
    cube.angular_pitch = number_or(c, "angular_pitch", cube.angular_pitch);
    if (c.contains("seed")) cube.seed = c["seed"].get<std::uint64_t>();
    cube.validate();
    req.cube = cube;
    return req;
  }

  check_keys(doc, {"scan_id", "date", "seed", "defaults", "leaves", "gutter"}, "scan spec");
  ScanSpec scan;
  if (doc.contains("scan_id")) scan.scan_id = doc["scan_id"].get<std::string>();
  if (doc.contains("date")) scan.date = doc["date"].get<std::string>();
  if (doc.contains("gutter")) scan.gutter = doc["gutter"].get<std::size_t>();
  const std::uint64_t seed = doc.value("seed", std::uint64_t{0});

  static constexpr std::initializer_list<const char*> kLeafFields = {
      "point_spacing", "noise_sigma", "outlier_fraction", "outlier_min_distance",
      "outlier_model", "bend_radius"};
  LeafSpec defaults;
  if (auto it = doc.find("defaults"); it != doc.end()) {
    check_keys(*it, kLeafFields, "defaults");
    apply_leaf_fields(*it, defaults);
  }

  auto leaves = doc.find("leaves");
  if (leaves == doc.end() || !leaves->is_array()) {
    throw ParseError("synth spec: 'leaves' must be an array");
  }
  if (leaves->empty()) throw std::invalid_argument("synth spec: 'leaves' is empty");
  for (std::size_t i = 0; i < leaves->size(); ++i) {
    const json& l = (*leaves)[i];
    if (!l.is_object()) throw ParseError("synth spec: each leaf must be an object");
    check_keys(l,
               {"leaf_id", "length", "width", "rotation_deg", "translation", "seed",
                "point_spacing", "noise_sigma", "outlier_fraction", "outlier_min_distance",
                "outlier_model", "bend_radius"},
               "leaf");
    ScanLeaf leaf;
    leaf.spec = defaults;
    leaf.leaf_id = l.value("leaf_id", "leaf_" + std::to_string(i + 1));
    if (!l.contains("length") || !l.contains("width")) {
      throw ParseError("synth spec: leaf " + std::to_string(i) + " needs length and width");
    }
    leaf.spec.length = number_or(l, "length", 0.0);
    leaf.spec.width = number_or(l, "width", 0.0);
    apply_leaf_fields(l, leaf.spec);
    const Vec3 rot = vec3_or(l, "rotation_deg", Vec3::Zero());
    const Vec3 t = vec3_or(l, "translation", Vec3(150.0 * static_cast<double>(i), 0.0, 500.0));
    leaf.spec.pose = RigidTransform::from_euler_deg(rot.x(), rot.y(), rot.z(), t);
    leaf.spec.seed = l.contains("seed") ? l["seed"].get<std::uint64_t>() : mix_seed(seed, i);
    leaf.spec.validate();
    scan.leaves.push_back(std::move(leaf));
  }
  req.scan = std::move(scan);
  return req;
}

}  // namespace

SynthRequest parse_synth_spec(std::string_view json_text) {
  try {
    return parse_impl(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("synth spec: ") + e.what());
  }
}

}  // namespace leafmetric::synth
