#include "leafmetric/calibration.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "leafmetric/error.hpp"
#include "leafmetric/rng.hpp"

namespace leafmetric::eval {
namespace {

double face_edge(const std::vector<Vec3>& pts, const Vec3& axis, double rms,
                 EdgeEstimator estimator) {
  if (estimator == EdgeEstimator::extent) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : pts) {
      const double c = axis.dot(p);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    return hi - lo;
  }
  double mean = 0.0;
  for (const auto& p : pts) mean += axis.dot(p);
  mean /= static_cast<double>(pts.size());
  double var = 0.0;
  for (const auto& p : pts) {
    const double d = axis.dot(p) - mean;
    var += d * d;
  }
  var /= static_cast<double>(pts.size());
  return std::sqrt(12.0 * std::max(0.0, var - rms * rms));
}

}  // namespace

CalibrationResult calibrate_cube(const PointCloud& cloud, double true_edge,
                                 const CalibrationConfig& config) {
  if (!(true_edge > 0.0)) throw std::invalid_argument("true edge must be > 0");
  config.ransac.validate();
  const std::vector<std::size_t> valid = cloud.valid_indices();
  const std::size_t total = valid.size();
  if (total < 9) throw InsufficientPointsError("cube scan has fewer than 9 valid points");

  // Sequential RANSAC: peel off one face at a time.
  std::vector<std::size_t> remaining = valid;
  std::array<geometry::PlaneModel, 3> planes;
  for (int k = 0; k < 3; ++k) {
    std::vector<Vec3> sub;
    sub.reserve(remaining.size());
    for (std::size_t i : remaining) sub.push_back(cloud[i]);
    geometry::RansacConfig rc = config.ransac;
    rc.seed = mix_seed(config.ransac.seed, static_cast<std::uint64_t>(k));
    rc.min_inliers = std::max(rc.min_inliers, static_cast<std::size_t>(std::ceil(
                                                  config.min_face_fraction * static_cast<double>(total))));
    try {
      if (sub.size() < 3) throw InsufficientPointsError("no points left");
      planes[k] = geometry::fit_plane_ransac(PointCloud(std::move(sub)), rc);
    } catch (const Error& e) {
      throw DegenerateInputError("found " + std::to_string(k) +
                                 " fittable faces; 3 are required (" + e.what() + ")");
    }
    std::vector<char> taken(remaining.size(), 0);
    for (std::size_t j : planes[k].inliers) taken[j] = 1;
    std::vector<std::size_t> next;
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      if (!taken[j]) next.push_back(remaining[j]);
    }
    remaining = std::move(next);
  }

  const double max_dot = std::sin(config.max_orthogonality_error_deg * std::numbers::pi / 180.0);
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      if (std::abs(planes[a].normal.dot(planes[b].normal)) > max_dot) {
        throw DegenerateInputError("fitted planes are not mutually orthogonal; not a cube scan");
      }
    }
  }

  // Nearest-face assignment with exact ties going to every tied face,
  // alternated with refits until the membership settles. The sequential
  // fits absorb a strip of each neighbouring face; this undoes that.
  const double thr = config.ransac.distance_threshold;
  std::array<std::vector<std::size_t>, 3> members;
  std::size_t covered = 0;
  for (int round = 0; round < 20; ++round) {
    std::array<std::vector<std::size_t>, 3> next;
    covered = 0;
    for (std::size_t i : valid) {
      double d[3];
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 3; ++k) {
        d[k] = geometry::point_plane_distance(cloud[i], planes[k]);
        best = std::min(best, d[k]);
      }
      if (best > thr) continue;
      ++covered;
      for (int k = 0; k < 3; ++k) {
        if (d[k] == best) next[k].push_back(i);
      }
    }
    if (next == members) break;
    members = std::move(next);
    for (int k = 0; k < 3; ++k) {
      if (members[k].size() < 3) {
        throw DegenerateInputError("a face lost its points during reassignment; not a cube scan");
      }
      planes[k] = geometry::fit_plane_least_squares(cloud, members[k]);
    }
  }
  if (static_cast<double>(covered) < config.min_coverage * static_cast<double>(total)) {
    throw DegenerateInputError("three planes explain only " + std::to_string(covered) + " of " +
                               std::to_string(total) + " points; not a cube scan");
  }

  CalibrationResult res;
  res.true_edge = true_edge;
  std::array<std::vector<Vec3>, 3> face_pts;
  double ss_all = 0.0;
  std::size_t n_all = 0;
  for (int k = 0; k < 3; ++k) {
    const geometry::PlaneModel& refit = planes[k];
    res.faces[k] = {refit.normal, refit.offset, members[k].size(), refit.rms_distance};
    ss_all += refit.rms_distance * refit.rms_distance * static_cast<double>(members[k].size());
    n_all += members[k].size();
    for (std::size_t i : members[k]) {
      face_pts[k].push_back(cloud[i]);
    }
  }
  res.rmse = std::sqrt(ss_all / static_cast<double>(n_all));

  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) {
      if (j == k) continue;
      res.edge_samples.push_back(
          face_edge(face_pts[k], res.faces[j].normal, res.faces[k].rms, config.estimator));
    }
  }
  double sum = 0.0;
  for (double e : res.edge_samples) sum += e;
  res.edge_estimate = sum / static_cast<double>(res.edge_samples.size());
  res.error_percentage = 100.0 * std::abs(res.edge_estimate - true_edge) / true_edge;

  // Cube centre: the shared corner of the three faces, stepped half an edge
  // back along each normal turned away from the camera at the origin.
  Eigen::Matrix3d N;
  Vec3 d;
  Vec3 inward = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    N.row(k) = res.faces[k].normal.transpose();
    d(k) = res.faces[k].offset;
    Vec3 c = Vec3::Zero();
    for (const auto& p : face_pts[k]) c += p;
    const Vec3& n = res.faces[k].normal;
    inward += n.dot(c) > 0.0 ? n : Vec3(-n);
  }
  const Vec3 corner = N.colPivHouseholderQr().solve(d);
  res.camera_distance = (corner + 0.5 * res.edge_estimate * inward).norm();
  return res;
}

std::string calibration_table(const CalibrationResult& r) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-20s %-22s %-10s %-10s\n", "Camera to cube(mm)",
                "Error Percentage (%)", "RMSE (mm)", "Edge (mm)");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-20.0f %-22.2f %-10.2f %-10.3f\n", r.camera_distance,
                r.error_percentage, r.rmse, r.edge_estimate);
  out += buf;
  for (std::size_t k = 0; k < r.faces.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "face %zu: %zu points, rms %.3f mm\n", k, r.faces[k].points,
                  r.faces[k].rms);
    out += buf;
  }
  return out;
}

std::string calibration_json(const CalibrationResult& r) {
  nlohmann::json faces = nlohmann::json::array();
  for (const auto& f : r.faces) {
    faces.push_back({{"normal", {f.normal.x(), f.normal.y(), f.normal.z()}},
                     {"offset_mm", f.offset},
                     {"points", f.points},
                     {"rms_mm", f.rms}});
  }
  nlohmann::json doc = {{"camera_distance_mm", r.camera_distance},
                        {"true_edge_mm", r.true_edge},
                        {"edge_estimate_mm", r.edge_estimate},
                        {"edge_samples_mm", r.edge_samples},
                        {"error_percentage", r.error_percentage},
                        {"rmse_mm", r.rmse},
                        {"faces", faces}};
  return doc.dump(2) + "\n";
}

}  // namespace leafmetric::eval
