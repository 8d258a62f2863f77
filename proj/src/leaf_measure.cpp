#include "leafmetric/leaf_measure.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "leafmetric/error.hpp"

namespace leafmetric::measure {
namespace {

struct VariantResult {
  double length = 0.0;
  double width = 0.0;
  double inlier_fraction = 0.0;
  double rms = 0.0;
};

std::size_t distinct_count(std::span<const Vec2> pts) {
  std::vector<std::pair<double, double>> v;
  v.reserve(pts.size());
  for (const auto& p : pts) v.emplace_back(p.x(), p.y());
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

// First nonzero component positive.
Vec2 canonical_sign(Vec2 a) {
  if (a.x() < 0.0 || (a.x() == 0.0 && a.y() < 0.0)) return -a;
  return a;
}

double extent_along(std::span<const Vec2> pts, const Vec2& centroid, const Vec2& axis,
                    double trim, std::vector<double>& scratch) {
  scratch.clear();
  for (const auto& p : pts) scratch.push_back((p - centroid).dot(axis));
  if (trim == 0.0) {
    const auto [lo, hi] = std::minmax_element(scratch.begin(), scratch.end());
    return *hi - *lo;
  }
  std::sort(scratch.begin(), scratch.end());
  return sorted_quantile(scratch, 1.0 - trim) - sorted_quantile(scratch, trim);
}

VariantResult measure_variant(const PointCloud& pts, const ExtentConfig& config, bool refine) {
  geometry::RansacConfig rc = config.ransac;
  rc.refine = refine;
  const geometry::PlaneModel plane = geometry::fit_plane_ransac(pts, rc);
  const geometry::PlaneBasis basis = geometry::plane_basis(plane, pts);
  const std::vector<Vec2> projected = geometry::project_to_plane(pts, basis);
  if (distinct_count(projected) < 3) {
    throw InsufficientPointsError("fewer than 3 distinct projected points");
  }
  const PrincipalExtents ext = principal_extents(projected, config.trim_percentile);
  if (!(ext.minor > 0.0)) throw DegenerateInputError("leaf has zero projected width");

  VariantResult r;
  r.length = ext.major;
  r.width = ext.minor;
  r.inlier_fraction =
      static_cast<double>(plane.inliers.size()) / static_cast<double>(pts.valid_count());
  r.rms = plane.rms_distance;
  return r;
}

LeafMeasurement from_variant(const VariantResult& v, Method m, std::string leaf_id) {
  LeafMeasurement out;
  out.leaf_id = std::move(leaf_id);
  out.length = v.length;
  out.width = v.width;
  out.method = m;
  out.inlier_fraction = v.inlier_fraction;
  out.plane_rms = v.rms;
  return out;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::plain: return "plain";
    case Method::refined: return "refined";
    case Method::combined: return "combined";
    case Method::selected: return "selected";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "plain") return Method::plain;
  if (name == "refined") return Method::refined;
  if (name == "combined") return Method::combined;
  if (name == "selected") return Method::selected;
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected plain, refined, combined or selected)");
}

void ExtentConfig::validate() const {
  if (!(trim_percentile >= 0.0 && trim_percentile < 0.5)) {
    throw std::invalid_argument("trim_percentile must be in [0, 0.5)");
  }
  ransac.validate();
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty range");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

PrincipalExtents principal_extents(std::span<const Vec2> points, double trim) {
  if (points.empty()) throw InsufficientPointsError("no points to measure");
  Vec2 c = Vec2::Zero();
  for (const auto& p : points) c += p;
  c /= static_cast<double>(points.size());

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const Vec2 d = p - c;
    sxx += d.x() * d.x();
    sxy += d.x() * d.y();
    syy += d.y() * d.y();
  }
  const double half_diff = 0.5 * (sxx - syy);
  const double radius = std::hypot(half_diff, sxy);
  const double mean = 0.5 * (sxx + syy);
  const double l1 = mean + radius;
  const double l2 = mean - radius;

  const double theta = 0.5 * std::atan2(sxy, half_diff);
  Vec2 major(std::cos(theta), std::sin(theta));
  Vec2 minor(-major.y(), major.x());
  if (l1 - l2 < 1e-9 * std::abs(l1)) {
    // Axes are not identified by the spectrum; prefer the one nearer u.
    if (std::abs(minor.x()) > std::abs(major.x())) std::swap(major, minor);
  }
  PrincipalExtents out;
  out.major_axis = canonical_sign(major);
  out.minor_axis = canonical_sign(minor);

  std::vector<double> scratch;
  scratch.reserve(points.size());
  out.major = extent_along(points, c, out.major_axis, trim, scratch);
  out.minor = extent_along(points, c, out.minor_axis, trim, scratch);
  if (out.minor > out.major) {
    std::swap(out.major, out.minor);
    std::swap(out.major_axis, out.minor_axis);
  }
  return out;
}

LeafMeasurement combined_estimate(const LeafMeasurement& plain, const LeafMeasurement& refined) {
  if (plain.leaf_id != refined.leaf_id) {
    throw std::invalid_argument("combined_estimate: leaf_id mismatch ('" + plain.leaf_id +
                                "' vs '" + refined.leaf_id + "')");
  }
  if (plain.method != Method::plain || refined.method != Method::refined) {
    throw std::invalid_argument("combined_estimate expects a plain and a refined measurement");
  }
  LeafMeasurement out;
  out.leaf_id = plain.leaf_id;
  out.method = Method::combined;
  out.length = 0.5 * (plain.length + refined.length);
  out.width = 0.5 * (plain.width + refined.width);
  out.inlier_fraction = 0.5 * (plain.inlier_fraction + refined.inlier_fraction);
  out.plane_rms = 0.5 * (plain.plane_rms + refined.plane_rms);
  return out;
}

LeafMeasurement measure_leaf(const PointCloud& leaf_points, const ExtentConfig& config,
                             Method method, std::string leaf_id) {
  config.validate();
  if (leaf_points.valid_count() < config.ransac.min_inliers) {
    throw InsufficientPointsError("leaf has " + std::to_string(leaf_points.valid_count()) +
                                  " valid points; " +
                                  std::to_string(config.ransac.min_inliers) + " required");
  }
  switch (method) {
    case Method::plain:
      return from_variant(measure_variant(leaf_points, config, false), method, std::move(leaf_id));
    case Method::refined:
      return from_variant(measure_variant(leaf_points, config, true), method, std::move(leaf_id));
    case Method::combined: {
      const auto a = from_variant(measure_variant(leaf_points, config, false), Method::plain, leaf_id);
      const auto b = from_variant(measure_variant(leaf_points, config, true), Method::refined, leaf_id);
      return combined_estimate(a, b);
    }
    case Method::selected: {
      const VariantResult a = measure_variant(leaf_points, config, false);
      const VariantResult b = measure_variant(leaf_points, config, true);
      LeafMeasurement out;
      out.leaf_id = std::move(leaf_id);
      out.method = Method::selected;
      out.length = a.length;
      out.width = b.width;
      if (out.width > out.length) std::swap(out.length, out.width);
      out.inlier_fraction = 0.5 * (a.inlier_fraction + b.inlier_fraction);
      out.plane_rms = 0.5 * (a.rms + b.rms);
      return out;
    }
  }
  throw std::invalid_argument("unknown method");
}

namespace {

// One slot per leaf: either a mask to measure or an error found earlier.
struct LeafJob {
  std::string leaf_id;
  const io::LeafMask* mask = nullptr;
  std::string error;
};

ScanResult run_jobs(const PointCloud& cloud, std::span<const LeafJob> jobs,
                    const ExtentConfig& config, Method method) {
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
  std::vector<std::optional<LeafMeasurement>> done(jobs.size());
  std::vector<std::string> errors(jobs.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!jobs[k].mask) {
      errors[k] = jobs[k].error;
      continue;
    }
    try {
      const PointCloud leaf = io::extract_leaf_points(cloud, *jobs[k].mask);
      done[k] = measure_leaf(leaf, config, method, jobs[k].leaf_id);
    } catch (const Error& e) {
      errors[k] = e.what();
    }
  }

  ScanResult out;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (done[k]) {
      out.measurements.push_back(std::move(*done[k]));
    } else {
      out.skipped.push_back({jobs[k].leaf_id, errors[k]});
    }
  }
  return out;
}

}  // namespace

ScanResult measure_masks(const PointCloud& cloud, std::span<const io::LeafMask> masks,
                         const ExtentConfig& config, Method method) {
  config.validate();
  std::vector<LeafJob> jobs;
  jobs.reserve(masks.size());
  for (const auto& m : masks) jobs.push_back({m.leaf_id(), &m, {}});
  return run_jobs(cloud, jobs, config, method);
}

ScanResult measure_scan(const io::ScanManifest& manifest, const ExtentConfig& config,
                        Method method) {
  config.validate();
  const PointCloud cloud = io::read_ply(manifest.cloud);

  std::vector<std::optional<io::LeafMask>> masks(manifest.masks.size());
  std::vector<LeafJob> jobs(manifest.masks.size());
  for (std::size_t k = 0; k < manifest.masks.size(); ++k) {
    const auto& entry = manifest.masks[k];
    jobs[k].leaf_id = entry.leaf_id;
    const std::string bytes = io::read_file(entry.path);
    try {
      masks[k].emplace(io::parse_mask(bytes, entry.leaf_id));
      jobs[k].mask = &*masks[k];
    } catch (const Error& e) {
      jobs[k].error = e.what();
    }
  }
  return run_jobs(cloud, jobs, config, method);
}

}  // namespace leafmetric::measure
