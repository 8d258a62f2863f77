#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "leafmetric/error.hpp"
#include "leafmetric/plane_geometry.hpp"
#include "support.hpp"

using namespace leafmetric;
using namespace leafmetric::geometry;
using lmtest::line_angle_deg;
using lmtest::random_unit;
using lmtest::span_of;

namespace {

RansacConfig cfg(double thr, std::uint64_t seed = 1, bool refine = false, std::size_t min_inliers = 3) {
  RansacConfig c;
  c.distance_threshold = thr;
  c.seed = seed;
  c.refine = refine;
  c.min_inliers = min_inliers;
  return c;
}

// Points on n.p = d plus outliers at least `gap` away from the plane.
std::vector<Vec3> plane_with_outliers(Rng& rng, const Vec3& n, double d, std::size_t in,
                                      std::size_t out, double gap, double noise = 0.0) {
  const auto [a, b] = span_of(n);
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < in; ++i) {
    pts.push_back(d * n + rng.uniform(-50, 50) * a + rng.uniform(-50, 50) * b +
                  noise * rng.normal() * n);
  }
  for (std::size_t i = 0; i < out; ++i) {
    const double s = rng.uniform() < 0.5 ? -1.0 : 1.0;
    pts.push_back(d * n + rng.uniform(-50, 50) * a + rng.uniform(-50, 50) * b +
                  s * rng.uniform(gap, 4 * gap) * n);
  }
  return pts;
}

double ss_to(const std::vector<Vec3>& pts, const Vec3& n) {
  double mean = 0.0;
  for (const auto& p : pts) mean += n.dot(p);
  mean /= static_cast<double>(pts.size());
  double ss = 0.0;
  for (const auto& p : pts) ss += (n.dot(p) - mean) * (n.dot(p) - mean);
  return ss;
}

// Oracle: best sum of squared distances over normals on a 1-degree sphere grid
// (offset optimal for each normal).
double brute_force_ss(const std::vector<Vec3>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t <= 90; ++t) {
    for (int p = 0; p < 360; ++p) {
      const double th = t * M_PI / 180.0, ph = p * M_PI / 180.0;
      const Vec3 n(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
      best = std::min(best, ss_to(pts, n));
    }
  }
  return best;
}

}  // namespace

TEST(FitPlaneRansac, ExactSquare) {
  const PointCloud c({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)});
  const PlaneModel m = fit_plane_ransac(c, cfg(0.1));
  EXPECT_EQ(m.normal, Vec3(0, 0, 1));
  EXPECT_EQ(m.offset, 0.0);
  EXPECT_EQ(m.inliers.size(), 4u);
  EXPECT_EQ(m.rms_distance, 0.0);
}

TEST(FitPlaneRansac, PlaneWithOutliers) {
  Rng rng(5);
  const Vec3 n = Vec3(1, 1, 1).normalized();
  const auto pts = plane_with_outliers(rng, n, 100.0 / std::sqrt(3.0), 200, 20, 10.0);
  const PlaneModel m = fit_plane_ransac(PointCloud(pts), cfg(1.0));
  EXPECT_LT((m.normal - n).norm(), 1e-6);
  EXPECT_EQ(m.inliers.size(), 200u);
  for (std::size_t i = 0; i < m.inliers.size(); ++i) EXPECT_EQ(m.inliers[i], i);
}

TEST(FitPlaneRansac, RefineDoesNotIncreaseRmsOnCommonInliers) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 n = random_unit(rng);
    const auto pts = plane_with_outliers(rng, n, 30.0, 20, 4, 8.0, 0.4);
    const PointCloud c(pts);
    const PlaneModel plain = fit_plane_ransac(c, cfg(1.5, trial));
    const PlaneModel refined = fit_plane_ransac(c, cfg(1.5, trial, true));
    std::vector<std::size_t> common;
    std::set_intersection(plain.inliers.begin(), plain.inliers.end(), refined.inliers.begin(),
                          refined.inliers.end(), std::back_inserter(common));
    auto rms_on = [&](const PlaneModel& m) {
      double s = 0;
      for (std::size_t i : common) s += std::pow(point_plane_distance(c[i], m), 2);
      return std::sqrt(s / static_cast<double>(common.size()));
    };
    // Refit is least squares on the winning set, which equals the common
    // set whenever refinement did not change membership.
    if (common.size() == plain.inliers.size() && common.size() == refined.inliers.size()) {
      EXPECT_LE(rms_on(refined), rms_on(plain) + 1e-12);
    }
    std::vector<Vec3> in;
    for (std::size_t i : refined.inliers) in.push_back(c[i]);
    const double ls = ss_to(in, refined.normal);
    EXPECT_LE(ls, brute_force_ss(in) * (1 + 1e-6));
  }
}

TEST(FitPlaneRansac, ModelInvariants) {
  Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const Vec3 n = random_unit(rng);
    const auto pts = plane_with_outliers(rng, n, rng.uniform(-100, 100), 150, 60, 5.0, 0.5);
    const double thr = 2.0;
    const PointCloud c(pts);
    for (bool refine : {false, true}) {
      const PlaneModel m = fit_plane_ransac(c, cfg(thr, trial, refine));
      EXPECT_NEAR(m.normal.norm(), 1.0, 1e-9);
      int big = 0;
      for (int k = 1; k < 3; ++k) {
        if (std::abs(m.normal[k]) > std::abs(m.normal[big])) big = k;
      }
      EXPECT_GT(m.normal[big], 0.0);
      double ss = 0;
      for (std::size_t i : m.inliers) {
        const double d = point_plane_distance(c[i], m);
        EXPECT_LE(d, thr);
        ss += d * d;
      }
      EXPECT_NEAR(m.rms_distance, std::sqrt(ss / m.inliers.size()), 1e-9);
      // Inlier set is exactly the points within the threshold.
      std::size_t within = 0;
      for (std::size_t i = 0; i < c.size(); ++i) within += point_plane_distance(c[i], m) <= thr;
      EXPECT_EQ(within, m.inliers.size());
      EXPECT_LT(line_angle_deg(m.normal, n), 2.0);
    }
  }
}

TEST(FitPlaneRansac, SerialAndParallelAgreeBitForBit) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto pts = plane_with_outliers(rng, random_unit(rng), 10.0, 120, 80, 3.0, 0.7);
    std::vector<Vec3> with_nan = pts;
    with_nan[3] = Vec3(NAN, 0, 0);
    const PointCloud c(with_nan);
    for (bool refine : {false, true}) {
      const RansacConfig rc = cfg(1.0, trial, refine);
      const PlaneModel a = fit_plane_ransac(c, rc);
      const PlaneModel b = fit_plane_ransac_serial(c, rc);
      EXPECT_EQ(a.normal, b.normal);
      EXPECT_EQ(a.offset, b.offset);
      EXPECT_EQ(a.inliers, b.inliers);
      EXPECT_EQ(a.rms_distance, b.rms_distance);
      EXPECT_EQ(std::count(a.inliers.begin(), a.inliers.end(), 3u), 0);
    }
  }
}

// Two disjoint exact planes of equal size: the winner is the first
// iteration of the schedule whose sample lies entirely on one of them.
TEST(FitPlaneRansac, TieGoesToEarliestIteration) {
  Rng rng(9);
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) pts.emplace_back(rng.uniform(-50, 50), rng.uniform(-50, 50), 0.0);
  for (int i = 0; i < 10; ++i) pts.emplace_back(rng.uniform(-50, 50), rng.uniform(-50, 50), 500.0);
  const PointCloud c(pts);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RansacConfig rc = cfg(1e-6, seed);
    const auto schedule = ransac_sample_schedule(c.size(), rc.iterations, seed);
    double expected_offset = -1;
    for (const auto& t : schedule) {
      const bool a = t[0] < 10 && t[1] < 10 && t[2] < 10;
      const bool b = t[0] >= 10 && t[1] >= 10 && t[2] >= 10;
      if (a || b) {
        expected_offset = a ? 0.0 : 500.0;
        break;
      }
    }
    ASSERT_GE(expected_offset, 0.0);
    const PlaneModel m = fit_plane_ransac(c, rc);
    EXPECT_EQ(m.inliers.size(), 10u);
    EXPECT_NEAR(m.offset, expected_offset, 1e-9) << "seed " << seed;
  }
}

TEST(FitPlaneRansac, Errors) {
  EXPECT_THROW(fit_plane_ransac(PointCloud({Vec3(0, 0, 0), Vec3(1, 0, 0)}), cfg(1)),
               InsufficientPointsError);
  std::vector<Vec3> line;
  for (int i = 0; i < 20; ++i) line.emplace_back(i, 2 * i, 3 * i);
  EXPECT_THROW(fit_plane_ransac(PointCloud(line), cfg(1)), DegenerateInputError);
  const PointCloud sq({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)});
  EXPECT_THROW(fit_plane_ransac(sq, cfg(1, 0, false, 12)), FitError);
  RansacConfig bad = cfg(1);
  bad.iterations = 0;
  EXPECT_THROW(fit_plane_ransac(sq, bad), std::invalid_argument);
  bad = cfg(0);
  EXPECT_THROW(fit_plane_ransac(sq, bad), std::invalid_argument);
}

TEST(SampleSchedule, DistinctDeterministicInRange) {
  for (std::size_t n : {3u, 4u, 17u, 1000u}) {
    const auto a = ransac_sample_schedule(n, 500, 42);
    EXPECT_EQ(a, ransac_sample_schedule(n, 500, 42));
    EXPECT_NE(a, ransac_sample_schedule(n, 500, 43));
    for (const auto& t : a) {
      EXPECT_LT(t[0], n);
      EXPECT_LT(t[1], n);
      EXPECT_LT(t[2], n);
      EXPECT_NE(t[0], t[1]);
      EXPECT_NE(t[0], t[2]);
      EXPECT_NE(t[1], t[2]);
    }
  }
}

TEST(LeastSquares, RecoversNoisyPlaneAndRejectsLines) {
  Rng rng(10);
  const Vec3 n = random_unit(rng);
  const auto pts = plane_with_outliers(rng, n, 12.0, 500, 0, 0.0, 0.05);
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  const PlaneModel m = fit_plane_least_squares(PointCloud(pts), idx);
  EXPECT_LT(line_angle_deg(m.normal, n), 0.1);
  std::vector<Vec3> line{Vec3(0, 0, 0), Vec3(1, 1, 1), Vec3(2, 2, 2), Vec3(5, 5, 5)};
  std::vector<std::size_t> li{0, 1, 2, 3};
  EXPECT_THROW(fit_plane_least_squares(PointCloud(line), li), DegenerateInputError);
}

TEST(PlaneBasis, AxisSelectionRule) {
  PlaneModel z;
  z.normal = Vec3(0, 0, 1);
  const PlaneBasis b = plane_basis(z, PointCloud({Vec3(1, 2, 7), Vec3(3, 4, -1)}));
  EXPECT_EQ(b.u, Vec3(1, 0, 0));
  EXPECT_EQ(b.v, Vec3(0, 1, 0));
  EXPECT_EQ(b.origin, Vec3(2, 3, 0));
}

TEST(PlaneBasis, OrthonormalRightHanded) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    PlaneModel m;
    m.normal = random_unit(rng);
    m.offset = rng.uniform(-100, 100);
    const PlaneBasis b = plane_basis(m, PointCloud({Vec3(1, 2, 3), Vec3(-4, 5, 6)}));
    EXPECT_NEAR(b.u.norm(), 1.0, 1e-9);
    EXPECT_NEAR(b.v.norm(), 1.0, 1e-9);
    EXPECT_NEAR(b.u.dot(b.v), 0.0, 1e-9);
    EXPECT_NEAR(b.u.dot(m.normal), 0.0, 1e-9);
    EXPECT_NEAR(b.v.dot(m.normal), 0.0, 1e-9);
    EXPECT_NEAR((b.normal() - m.normal).norm(), 0.0, 1e-9);
    EXPECT_NEAR(m.normal.dot(b.origin), m.offset, 1e-9);
  }
}

TEST(ProjectToPlane, Examples) {
  PlaneBasis b;
  b.origin = Vec3(1, 2, 3);
  b.u = Vec3(0, 1, 0);
  b.v = Vec3(0, 0, 1);
  const auto uv = project_to_plane(PointCloud({b.origin, b.origin + 3 * b.u + 4 * b.v}), b);
  EXPECT_EQ(uv[0], Vec2(0, 0));
  EXPECT_EQ(uv[1], Vec2(3, 4));
}

// Projection is an isometry on points lying in the plane.
TEST(ProjectToPlane, IsometryInPlane) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    PlaneModel m;
    m.normal = random_unit(rng);
    m.offset = rng.uniform(-50, 50);
    const auto [a, c] = span_of(m.normal);
    std::vector<Vec3> pts;
    for (int i = 0; i < 30; ++i) {
      pts.push_back(m.offset * m.normal + rng.uniform(-40, 40) * a + rng.uniform(-40, 40) * c);
    }
    const PointCloud cloud(pts);
    const auto uv = project_to_plane(cloud, plane_basis(m, cloud));
    for (int i = 0; i < 30; ++i) {
      for (int j = i + 1; j < 30; ++j) {
        EXPECT_NEAR((uv[i] - uv[j]).norm(), (pts[i] - pts[j]).norm(), 1e-9);
      }
    }
  }
}

TEST(PointPlaneDistance, Examples) {
  PlaneModel z;
  EXPECT_EQ(point_plane_distance(Vec3(5, -1, 0), z), 0.0);
  EXPECT_EQ(point_plane_distance(Vec3(5, 5, 3), z), 3.0);
  EXPECT_EQ(point_plane_distance(Vec3(5, 5, -3), z), 3.0);
}
