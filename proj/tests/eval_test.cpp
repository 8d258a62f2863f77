#include <gtest/gtest.h>

#include <regex>

#include <json.hpp>

#include "leafmetric/calibration.hpp"
#include "leafmetric/error.hpp"
#include "leafmetric/eval.hpp"
#include "leafmetric/measurement_io.hpp"
#include "leafmetric/synth_data.hpp"
#include "support.hpp"

using namespace leafmetric;
using namespace leafmetric::eval;
using measure::LeafMeasurement;
using measure::Method;

namespace {

const std::vector<double> kPred{1, 2, 3}, kTruth{1, 2, 4};

GroundTruthTable truth_table(const std::vector<std::pair<std::string, std::pair<double, double>>>& rows) {
  std::vector<TruthRow> out;
  for (const auto& [id, lw] : rows) out.push_back({id, lw.first, lw.second, TruthSource::manual});
  return GroundTruthTable(out);
}

// Oracle for Pearson r^2 computed the textbook way.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; syy += y[i] * y[i]; sxy += x[i] * y[i];
  }
  const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  return r * r;
}

}  // namespace

TEST(Metrics, HandComputed) {
  EXPECT_NEAR(rmse(kPred, kTruth), 0.5773502691896258, 1e-12);
  EXPECT_NEAR(r_squared(kPred, kTruth), 1.0 - 1.0 / (42.0 / 9.0), 1e-12);
  EXPECT_NEAR(r_squared(kPred, kTruth), 0.7857142857142857, 1e-12);
  EXPECT_EQ(rmse(kTruth, kTruth), 0.0);
  EXPECT_EQ(r_squared(kTruth, kTruth), 1.0);
  EXPECT_EQ(error_percentage(kTruth, kTruth), 0.0);
  // |errors| mean 3 on truth mean 60.
  const std::vector<double> t{50, 60, 70}, p{53, 57, 73};
  EXPECT_EQ(error_percentage(p, t), 5.0);
  EXPECT_THROW(r_squared(std::vector<double>{1, 2, 3}, std::vector<double>{5, 5, 5}), DegenerateInputError);
  EXPECT_THROW(rmse(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(Metrics, PearsonMatchesOracle) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x, y;
    for (int k = 0; k < 24; ++k) {
      x.push_back(rng.uniform(20, 90));
      y.push_back(0.9 * x.back() + 5 + rng.normal() * 4);
    }
    EXPECT_NEAR(pearson_r_squared(y, x), pearson_oracle(y, x), 1e-9);
    // Coefficient of determination never exceeds the Pearson value.
    EXPECT_LE(r_squared(y, x), pearson_r_squared(y, x) + 1e-12);
  }
}

TEST(Metrics, PermutationInvariant) {
  Rng rng(4);
  std::vector<double> p, t;
  for (int k = 0; k < 30; ++k) {
    t.push_back(rng.uniform(20, 90));
    p.push_back(t.back() + rng.normal());
  }
  const double a = rmse(p, t), b = r_squared(p, t), c = error_percentage(p, t);
  for (int s = 0; s < 20; ++s) {
    for (std::size_t i = p.size() - 1; i > 0; --i) {
      const std::size_t j = rng.index(i + 1);
      std::swap(p[i], p[j]);
      std::swap(t[i], t[j]);
    }
    EXPECT_NEAR(rmse(p, t), a, 1e-12);
    EXPECT_NEAR(r_squared(p, t), b, 1e-12);
    EXPECT_NEAR(error_percentage(p, t), c, 1e-12);
  }
}

TEST(Evaluate, PerfectMeasurements) {
  const auto truth = truth_table({{"a", {60, 30}}, {"b", {70, 40}}, {"c", {50, 25}}});
  std::vector<LeafMeasurement> m{{"a", 60, 30}, {"b", 70, 40}, {"c", 50, 25}};
  const EvalReport r = evaluate(m, truth);
  EXPECT_EQ(r.length.rmse, 0.0);
  EXPECT_EQ(r.length.r_squared, 1.0);
  EXPECT_EQ(r.width.error_percentage, 0.0);
  EXPECT_EQ(r.length.n, 3u);
}

TEST(Evaluate, JoinOnLeafId) {
  const auto truth = truth_table({{"a", {60, 30}}, {"b", {70, 40}}, {"z", {50, 25}}});
  std::vector<LeafMeasurement> m{{"b", 71, 40}, {"q", 1, 1}, {"a", 60, 31}};
  const EvalReport r = evaluate(m, truth);
  EXPECT_EQ(r.length.n, 2u);
  EXPECT_EQ(r.unmatched_measurements, std::vector<std::string>{"q"});
  EXPECT_EQ(r.unmatched_truth, std::vector<std::string>{"z"});
  EXPECT_EQ(r.length.residuals[0].leaf_id, "b");
  EXPECT_EQ(r.length.residuals[0].value, 1.0);
  std::vector<LeafMeasurement> disjoint{{"x", 1, 1}, {"y", 2, 2}};
  EXPECT_THROW(evaluate(disjoint, truth), JoinError);
  std::vector<LeafMeasurement> dup{{"a", 1, 1}, {"a", 2, 2}};
  EXPECT_THROW(evaluate(dup, truth), std::invalid_argument);
}

TEST(Evaluate, CleanSyntheticBatch) {
  Rng rng(5);
  std::vector<TruthRow> rows;
  std::vector<LeafMeasurement> ms;
  for (int i = 0; i < 24; ++i) {
    synth::LeafSpec s;
    s.length = rng.uniform(40, 90);
    s.width = rng.uniform(20, std::min(50.0, s.length));
    s.seed = i;
    const auto leaf = synth::generate_leaf(s);
    measure::ExtentConfig ec;
    ms.push_back(measure::measure_leaf(leaf.cloud, ec, Method::selected, "l" + std::to_string(i)));
    rows.push_back({"l" + std::to_string(i), s.length, s.width, TruthSource::synthetic});
  }
  const EvalReport r = evaluate(ms, GroundTruthTable(rows));
  EXPECT_LT(r.length.rmse, 2 * 0.5);
  EXPECT_LT(r.width.rmse, 2 * 0.5);
}

TEST(EvaluateByMethod, FourRowsInFirstSeenOrder) {
  const auto truth = truth_table({{"a", {60, 30}}, {"b", {70, 40}}});
  std::vector<LeafMeasurement> m;
  for (Method k : {Method::plain, Method::refined, Method::combined, Method::selected}) {
    m.push_back({"a", 61, 30, k});
    m.push_back({"b", 70, 41, k});
  }
  const auto reps = evaluate_by_method(m, truth);
  ASSERT_EQ(reps.size(), 4u);
  EXPECT_EQ(reps[0].method, "plain");
  EXPECT_EQ(reps[3].method, "selected");
  const std::string table = report_table(reps, "Results");
  for (const char* row : {"RANSAC - plain", "RANSAC - refined", "RANSAC - combined", "RANSAC - selected",
                          "Length", "Width", "RMSE(mm)", "R^2", "Error Percentage(%)"}) {
    EXPECT_NE(table.find(row), std::string::npos) << row;
  }
  EXPECT_NE(table.find("coefficient of determination"), std::string::npos);
  const auto doc = nlohmann::json::parse(report_json(reps));
  ASSERT_EQ(doc.size(), 4u);
  EXPECT_EQ(doc[0]["r_squared_kind"], std::string(to_string(RSquaredKind::determination)));
}

TEST(GroundTruthCsv, RoundTripAndErrors) {
  const auto t = truth_table({{"a", {60.25, 30}}, {"b", {70, 40.125}}});
  const auto back = parse_ground_truth_csv(ground_truth_to_csv(t));
  ASSERT_EQ(back.rows().size(), 2u);
  EXPECT_EQ(back.rows()[0].length, 60.25);
  EXPECT_EQ(back.rows()[1].width, 40.125);
  EXPECT_EQ(back.find("b")->source, TruthSource::manual);
  EXPECT_EQ(back.find("c"), nullptr);
  EXPECT_THROW(parse_ground_truth_csv(""), ParseError);
  EXPECT_THROW(parse_ground_truth_csv("leaf_id,length_mm,width_mm,source\na,1,2\n"), ParseError);
  EXPECT_THROW(parse_ground_truth_csv("leaf_id,length_mm,width_mm,source\na,x,2,manual\n"), ParseError);
  EXPECT_THROW(parse_ground_truth_csv("leaf_id,length_mm,width_mm,source\na,1,2,guess\n"), ParseError);
  EXPECT_THROW(parse_ground_truth_csv("leaf_id,length_mm,width_mm,source\na,1,2,manual\na,1,2,manual\n"),
               ParseError);
}

TEST(MeasurementIo, CsvAndJsonRoundTrip) {
  Rng rng(6);
  std::vector<LeafMeasurement> rows;
  for (int i = 0; i < 50; ++i) {
    rows.push_back({"leaf_" + std::to_string(i), rng.uniform(0, 100), rng.uniform(0, 50),
                    static_cast<Method>(rng.index(4)), rng.uniform(), rng.uniform(0, 2)});
  }
  for (const std::string& text : {io::measurements_to_csv(rows), io::measurements_to_json(rows)}) {
    const auto back = io::parse_measurements(text);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EXPECT_EQ(back[i].leaf_id, rows[i].leaf_id);
      EXPECT_EQ(back[i].length, rows[i].length);
      EXPECT_EQ(back[i].width, rows[i].width);
      EXPECT_EQ(back[i].method, rows[i].method);
      EXPECT_EQ(back[i].inlier_fraction, rows[i].inlier_fraction);
      EXPECT_EQ(back[i].plane_rms, rows[i].plane_rms);
    }
  }
  EXPECT_EQ(io::measurements_to_csv({}).rfind("leaf_id,method,length_mm,width_mm,inlier_fraction,plane_rms\n", 0), 0u);
}

TEST(ScatterSvg, OnePointAndIdentity) {
  const std::vector<double> one{5.0};
  const std::string svg = scatter_svg(one, one, "one <point>");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  std::size_t circles = 0;
  for (std::size_t p = svg.find("<circle"); p != std::string::npos; p = svg.find("<circle", p + 1)) ++circles;
  EXPECT_EQ(circles, 1u);
  EXPECT_NE(svg.find("one &lt;point&gt;"), std::string::npos);

  const std::vector<double> t{40, 55, 70, 90};
  const std::string same = scatter_svg(t, t, "same");
  const std::regex line_re("<line id=\"(identity|fit)\" x1=\"([-0-9.]+)\" y1=\"([-0-9.]+)\" x2=\"([-0-9.]+)\" y2=\"([-0-9.]+)\"");
  std::map<std::string, std::array<double, 4>> lines;
  for (auto it = std::sregex_iterator(same.begin(), same.end(), line_re); it != std::sregex_iterator(); ++it) {
    lines[(*it)[1]] = {std::stod((*it)[2]), std::stod((*it)[3]), std::stod((*it)[4]), std::stod((*it)[5])};
  }
  ASSERT_EQ(lines.size(), 2u) << same;
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(lines["identity"][k], lines["fit"][k], 1e-6);
  EXPECT_EQ(same, scatter_svg(t, t, "same"));
}

namespace {

PointCloud sphere_scan(double radius, double distance) {
  // Camera-facing hemisphere, sampled on an angular grid.
  std::vector<Vec3> pts;
  const Vec3 centre(0, 0, distance);
  for (double th = 0; th < M_PI / 2; th += 0.01) {
    for (double ph = 0; ph < 2 * M_PI; ph += 0.01 / std::max(std::sin(th), 0.01)) {
      pts.push_back(centre + radius * Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), -std::cos(th)));
    }
  }
  return PointCloud(pts);
}

}  // namespace

TEST(CalibrateCube, SphereIsRejected) {
  EXPECT_THROW(calibrate_cube(sphere_scan(30, 400), 50.0), DegenerateInputError);
}

TEST(CalibrateCube, ExactCubeWithExtentEstimator) {
  const auto cube = synth::generate_cube_face_scan({});
  CalibrationConfig cc;
  cc.estimator = EdgeEstimator::extent;
  const auto res = calibrate_cube(cube.cloud, 50.0, cc);
  EXPECT_NEAR(res.edge_estimate, 50.0, 1e-9);
  EXPECT_LT(res.error_percentage, 0.005);
  EXPECT_EQ(res.edge_samples.size(), 6u);
  EXPECT_NE(calibration_table(res).find("0.00"), std::string::npos);
}

// Calibration does not depend on where the cube sits relative to the
// sensor, only on the sampled geometry.
TEST(CalibrateCube, RigidMotionInvariant) {
  synth::CubeSpec spec;
  spec.noise_sigma = 0.3;
  spec.seed = 2;
  const auto cube = synth::generate_cube_face_scan(spec);
  const auto base = calibrate_cube(cube.cloud, 50.0);
  Rng rng(9);
  const Eigen::Matrix3d R = lmtest::random_rotation(rng);
  std::vector<Vec3> moved;
  for (const auto& p : cube.cloud.points()) moved.push_back(R * p + Vec3(3, -7, 11));
  const auto res = calibrate_cube(PointCloud(moved), 50.0);
  EXPECT_NEAR(res.edge_estimate, base.edge_estimate, 1e-6);
}

TEST(CalibrateCube, InputChecks) {
  EXPECT_THROW(calibrate_cube(PointCloud({Vec3::Zero()}), 50.0), InsufficientPointsError);
  EXPECT_THROW(calibrate_cube(synth::generate_cube_face_scan({}).cloud, 0.0), std::invalid_argument);
  std::vector<Vec3> flat;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) flat.emplace_back(i, j, 400);
  EXPECT_THROW(calibrate_cube(PointCloud(flat), 50.0), DegenerateInputError);
}
