#include "leafmetric/plane_geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "leafmetric/error.hpp"
#include "leafmetric/rng.hpp"

namespace leafmetric::geometry {
namespace {

struct Hypothesis {
  Vec3 normal = Vec3::Zero();
  double offset = 0.0;
  std::size_t support = 0;
  double rms = std::numeric_limits<double>::infinity();
  bool degenerate = true;
};

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.degenerate) return false;
  if (b.degenerate) return true;
  if (a.support != b.support) return a.support > b.support;
  return a.rms < b.rms;
}

double distance(const Vec3& p, const Vec3& n, double offset) {
  return std::abs(n.dot(p) - offset);
}

// Scores one minimal sample against every valid point. This is the kernel
// shared by the serial and OpenMP drivers.
Hypothesis score_sample(const std::vector<Vec3>& pts, const SampleTriple& s, double threshold) {
  Hypothesis h;
  const Vec3& a = pts[s[0]];
  const Vec3 e1 = pts[s[1]] - a;
  const Vec3 e2 = pts[s[2]] - a;
  Vec3 n = e1.cross(e2);
  const double scale = e1.norm() * e2.norm();
  const double len = n.norm();
  if (scale == 0.0 || len <= 1e-12 * scale) return h;
  n /= len;
  double offset = n.dot(a);
  orient_normal(n, offset);

  std::size_t support = 0;
  double ss = 0.0;
  for (const Vec3& p : pts) {
    const double d = distance(p, n, offset);
    if (d <= threshold) {
      ++support;
      ss += d * d;
    }
  }
  h.normal = n;
  h.offset = offset;
  h.support = support;
  h.rms = support ? std::sqrt(ss / static_cast<double>(support)) : 0.0;
  h.degenerate = false;
  return h;
}

struct Prepared {
  std::vector<std::size_t> index;  // valid position -> cloud index
  std::vector<Vec3> pts;           // valid points, compacted
  std::vector<SampleTriple> schedule;
};

Prepared prepare(const PointCloud& cloud, const RansacConfig& config) {
  config.validate();
  Prepared p;
  p.index = cloud.valid_indices();
  if (p.index.size() < 3) {
    throw InsufficientPointsError("plane fit needs at least 3 valid points, got " +
                                  std::to_string(p.index.size()));
  }
  p.pts.reserve(p.index.size());
  for (std::size_t i : p.index) p.pts.push_back(cloud[i]);
  p.schedule = ransac_sample_schedule(p.pts.size(), config.iterations, config.seed);
  return p;
}

// Inliers of (n, offset) as cloud indices, plus their rms.
void collect_inliers(const Prepared& p, const Vec3& n, double offset, double threshold,
                     PlaneModel& out) {
  out.inliers.clear();
  double ss = 0.0;
  for (std::size_t k = 0; k < p.pts.size(); ++k) {
    const double d = distance(p.pts[k], n, offset);
    if (d <= threshold) {
      out.inliers.push_back(p.index[k]);
      ss += d * d;
    }
  }
  out.rms_distance =
      out.inliers.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(out.inliers.size()));
}

PlaneModel finish(const PointCloud& cloud, const Prepared& p, const Hypothesis& best,
                  const RansacConfig& config) {
  if (best.degenerate) {
    throw DegenerateInputError("all " + std::to_string(config.iterations) +
                               " RANSAC samples were collinear");
  }
  if (best.support < config.min_inliers) {
    throw FitError("best plane has " + std::to_string(best.support) + " inliers; " +
                   std::to_string(config.min_inliers) + " required");
  }
  PlaneModel model;
  model.normal = best.normal;
  model.offset = best.offset;
  collect_inliers(p, model.normal, model.offset, config.distance_threshold, model);

  if (config.refine) {
    const PlaneModel refit = fit_plane_least_squares(cloud, model.inliers);
    model.normal = refit.normal;
    model.offset = refit.offset;
    collect_inliers(p, model.normal, model.offset, config.distance_threshold, model);
    if (model.inliers.size() < config.min_inliers) {
      throw FitError("refitted plane has " + std::to_string(model.inliers.size()) +
                     " inliers; " + std::to_string(config.min_inliers) + " required");
    }
  }
  return model;
}

}  // namespace

void RansacConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("RANSAC iterations must be >= 1");
  if (!(distance_threshold > 0.0) || !std::isfinite(distance_threshold)) {
    throw std::invalid_argument("RANSAC distance threshold must be a positive number");
  }
  if (min_inliers < 3) throw std::invalid_argument("RANSAC min_inliers must be >= 3");
}

std::vector<SampleTriple> ransac_sample_schedule(std::size_t n, int iterations,
                                                 std::uint64_t seed) {
  if (n < 3) throw InsufficientPointsError("sample schedule needs n >= 3");
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("too many points for the RANSAC sampler");
  }
  Rng rng(seed);
  std::vector<SampleTriple> out(static_cast<std::size_t>(std::max(iterations, 0)));
  for (auto& t : out) {
    t[0] = static_cast<std::uint32_t>(rng.index(n));
    do t[1] = static_cast<std::uint32_t>(rng.index(n)); while (t[1] == t[0]);
    do t[2] = static_cast<std::uint32_t>(rng.index(n)); while (t[2] == t[0] || t[2] == t[1]);
  }
  return out;
}

double point_plane_distance(const Vec3& p, const PlaneModel& plane) {
  return distance(p, plane.normal, plane.offset);
}

void orient_normal(Vec3& normal, double& offset) {
  int axis = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(normal[k]) > std::abs(normal[axis])) axis = k;
  }
  if (normal[axis] < 0.0) {
    normal = -normal;
    offset = -offset;
  }
}

PlaneModel fit_plane_ransac(const PointCloud& points, const RansacConfig& config) {
  const Prepared p = prepare(points, config);
  const auto count = static_cast<std::ptrdiff_t>(p.schedule.size());
  std::vector<Hypothesis> scored(p.schedule.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    scored[static_cast<std::size_t>(i)] =
        score_sample(p.pts, p.schedule[static_cast<std::size_t>(i)], config.distance_threshold);
  }

  // Reduce in iteration order so ties resolve to the lowest index.
  Hypothesis best;
  for (const auto& h : scored) {
    if (better(h, best)) best = h;
  }
  return finish(points, p, best, config);
}

PlaneModel fit_plane_ransac_serial(const PointCloud& points, const RansacConfig& config) {
  const Prepared p = prepare(points, config);
  Hypothesis best;
  for (const auto& s : p.schedule) {
    const Hypothesis h = score_sample(p.pts, s, config.distance_threshold);
    if (better(h, best)) best = h;
  }
  return finish(points, p, best, config);
}

PlaneModel fit_plane_least_squares(const PointCloud& points,
                                   std::span<const std::size_t> indices) {
  if (indices.size() < 3) {
    throw InsufficientPointsError("least-squares plane needs at least 3 points");
  }
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i : indices) centroid += points[i];
  centroid /= static_cast<double>(indices.size());

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i : indices) {
    const Vec3 d = points[i] - centroid;
    scatter.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  if (eig.info() != Eigen::Success) {
    throw DegenerateInputError("scatter matrix eigen-decomposition failed");
  }
  // Eigenvalues come back ascending; the middle one is the squared spread
  // across the line, so 1e-12 relative is a 1e-6 relative width.
  if (eig.eigenvalues()[1] <= 1e-12 * eig.eigenvalues()[2]) {
    throw DegenerateInputError("least-squares plane: points are collinear");
  }
  PlaneModel model;
  model.normal = eig.eigenvectors().col(0).normalized();
  model.offset = model.normal.dot(centroid);
  orient_normal(model.normal, model.offset);
  model.inliers.assign(indices.begin(), indices.end());
  double ss = 0.0;
  for (std::size_t i : indices) {
    const double d = point_plane_distance(points[i], model);
    ss += d * d;
  }
  model.rms_distance = std::sqrt(ss / static_cast<double>(indices.size()));
  return model;
}

PlaneBasis plane_basis(const PlaneModel& plane, const PointCloud& points) {
  const Vec3& n = plane.normal;
  PlaneBasis basis;

  Vec3 origin = Vec3::Zero();
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points.is_valid(i)) continue;
    const Vec3& p = points[i];
    origin += p - (n.dot(p) - plane.offset) * n;
    ++count;
  }
  if (count > 0) {
    origin /= static_cast<double>(count);
  } else {
    origin = plane.offset * n;
  }
  basis.origin = origin;

  int axis = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(n[k]) < std::abs(n[axis])) axis = k;
  }
  const Vec3 e = Vec3::Unit(axis);
  basis.u = (e - e.dot(n) * n).normalized();
  basis.v = n.cross(basis.u);
  return basis;
}

std::vector<Vec2> project_to_plane(const PointCloud& points, const PlaneBasis& basis) {
  std::vector<Vec2> out;
  out.reserve(points.valid_count());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points.is_valid(i)) continue;
    const Vec3 d = points[i] - basis.origin;
    out.emplace_back(d.dot(basis.u), d.dot(basis.v));
  }
  return out;
}

}  // namespace leafmetric::geometry
