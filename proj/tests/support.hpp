#pragma once

// Shared test-side generators and oracles. Nothing here calls the code
// under test except where a helper says so.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Geometry>

#include "leafmetric/point_cloud.hpp"
#include "leafmetric/rng.hpp"

namespace lmtest {

using leafmetric::Rng;
using leafmetric::Vec2;
using leafmetric::Vec3;

inline Eigen::Matrix3d random_rotation(Rng& rng) {
  // Uniform unit quaternion (Shoemake).
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t1 = 2.0 * M_PI * u2, t2 = 2.0 * M_PI * u3;
  Eigen::Quaterniond q(b * std::cos(t2), a * std::sin(t1), a * std::cos(t1), b * std::sin(t2));
  return q.normalized().toRotationMatrix();
}

inline Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (v.norm() < 1e-6);
  return v.normalized();
}

/// Two unit vectors spanning the plane orthogonal to n.
inline std::pair<Vec3, Vec3> span_of(const Vec3& n) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 a = n.cross(helper).normalized();
  return {a, n.cross(a)};
}

/// Angle between two lines (sign-insensitive), degrees.
inline double line_angle_deg(const Vec3& a, const Vec3& b) {
  const double c = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
  return std::acos(c) * 180.0 / M_PI;
}

/// Oracle: principal extents of a 2D set by brute-force direction sweep.
/// Returns (major, minor) as max-min along the max-variance direction found
/// on a grid of `steps` angles in [0, pi), then refined by golden section.
inline std::pair<double, double> sweep_extents(const std::vector<Vec2>& pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  auto var_at = [&](double t) {
    const Vec2 d(std::cos(t), std::sin(t));
    double s = 0.0;
    for (const auto& p : pts) {
      const double c = d.dot(p - mean);
      s += c * c;
    }
    return s;
  };
  const int steps = 3600;
  int best = 0;
  for (int i = 1; i < steps; ++i) {
    if (var_at(M_PI * i / steps) > var_at(M_PI * best / steps)) best = i;
  }
  double lo = M_PI * (best - 1) / steps, hi = M_PI * (best + 1) / steps;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    if (var_at(x1) > var_at(x2)) hi = x2;
    else lo = x1;
  }
  const double t = 0.5 * (lo + hi);
  const Vec2 d(std::cos(t), std::sin(t)), e(-std::sin(t), std::cos(t));
  double a0 = 1e300, a1 = -1e300, b0 = 1e300, b1 = -1e300;
  for (const auto& p : pts) {
    a0 = std::min(a0, d.dot(p));
    a1 = std::max(a1, d.dot(p));
    b0 = std::min(b0, e.dot(p));
    b1 = std::max(b1, e.dot(p));
  }
  return {a1 - a0, b1 - b0};
}

inline bool same_value(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::memcmp(&a, &b, sizeof a) == 0;
}

/// Random cloud with ~5% NaN coordinates; float32 clouds hold only
/// float-representable values.
inline leafmetric::PointCloud random_cloud(Rng& rng, bool colors, bool grid,
                                           leafmetric::ScalarType precision) {
  const std::size_t w = 1 + rng.index(12), h = 1 + rng.index(12);
  const std::size_t n = grid ? w * h : 1 + rng.index(150);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) {
    for (int k = 0; k < 3; ++k) {
      double v = rng.uniform(-1e4, 1e4) * std::pow(10.0, -static_cast<double>(rng.index(6)));
      if (rng.index(20) == 0) v = std::numeric_limits<double>::quiet_NaN();
      if (precision == leafmetric::ScalarType::float32) v = static_cast<float>(v);
      p[k] = v;
    }
  }
  std::optional<std::vector<leafmetric::Color>> cols;
  if (colors) {
    cols.emplace(n);
    for (auto& c : *cols) {
      c = {static_cast<std::uint8_t>(rng.index(256)), static_cast<std::uint8_t>(rng.index(256)),
           static_cast<std::uint8_t>(rng.index(256))};
    }
  }
  std::optional<leafmetric::GridSize> g;
  if (grid) g = leafmetric::GridSize{w, h};
  return leafmetric::PointCloud(std::move(pts), std::move(cols), g, precision);
}

inline bool same_cloud(const leafmetric::PointCloud& a, const leafmetric::PointCloud& b) {
  if (a.size() != b.size() || a.colors() != b.colors() || a.grid() != b.grid() ||
      a.precision() != b.precision()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      if (!same_value(a[i][k], b[i][k])) return false;
    }
    if (a.is_valid(i) != b.is_valid(i)) return false;
  }
  return true;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto p = std::filesystem::temp_directory_path() /
           ("leafmetric_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace lmtest
