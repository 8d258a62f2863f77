#include "leafmetric/cli.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "leafmetric/calibration.hpp"
#include "leafmetric/cloud_io.hpp"
#include "leafmetric/error.hpp"
#include "leafmetric/eval.hpp"
#include "leafmetric/leaf_measure.hpp"
#include "leafmetric/manifest.hpp"
#include "leafmetric/measurement_io.hpp"
#include "leafmetric/synth_data.hpp"

namespace leafmetric::cli {
namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string out_dir = ".";
  std::string method = "selected";
  int iterations = 1000;
  double threshold_mm = 2.0;
  std::optional<std::uint64_t> seed;
  double trim = 0.0;
  std::vector<std::string> formats;
  int threads = 0;
  // subcommand inputs
  std::string manifest;
  std::string measurements;
  std::string truth;
  std::string spec;
  std::string cube;
  double true_edge = 50.0;
  std::string edge_estimator = "moment";
  std::string r2 = "determination";
};

// Files produced by a subcommand, written only once the whole run succeeded.
class OutputSet {
 public:
  void add(fs::path rel, std::string bytes) { files_.emplace_back(std::move(rel), std::move(bytes)); }

  // Everything goes to temporaries first; renames happen only after every
  // temporary is complete, so a failure leaves no partial outputs behind.
  void commit(const fs::path& dir) const {
    std::vector<std::pair<fs::path, fs::path>> staged;
    try {
      for (const auto& [rel, bytes] : files_) {
        const fs::path target = dir / rel;
        fs::create_directories(target.parent_path());
        fs::path tmp = target;
        tmp += ".tmp";
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        staged.emplace_back(tmp, target);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        os.close();
        if (!os) throw Error("cannot write '" + tmp.string() + "'");
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& s : staged) fs::remove(s.first, ec);
      throw;
    }
    for (const auto& [tmp, target] : staged) fs::rename(tmp, target);
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

std::set<std::string> formats_or(const RunConfig& cfg, std::set<std::string> fallback,
                                 const std::set<std::string>& supported, std::string_view cmd) {
  if (cfg.formats.empty()) return fallback;
  std::set<std::string> out(cfg.formats.begin(), cfg.formats.end());
  for (const auto& f : out) {
    if (!supported.count(f)) {
      throw std::invalid_argument(std::string(cmd) + ": format '" + f + "' is not supported");
    }
  }
  return out;
}

std::uint64_t resolve_seed(const RunConfig& cfg) {
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("LEAFMETRIC_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::strlen(env)) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument(std::string("LEAFMETRIC_SEED is not an unsigned integer: '") + env + "'");
  }
  return 0;
}

measure::ExtentConfig extent_config(const RunConfig& cfg) {
  measure::ExtentConfig ec;
  ec.trim_percentile = cfg.trim;
  ec.ransac.iterations = cfg.iterations;
  ec.ransac.distance_threshold = cfg.threshold_mm;
  ec.ransac.seed = resolve_seed(cfg);
  ec.validate();
  return ec;
}

std::vector<measure::Method> methods(const RunConfig& cfg) {
  if (cfg.method == "all") {
    return {measure::Method::plain, measure::Method::refined, measure::Method::combined,
            measure::Method::selected};
  }
  return {measure::parse_method(cfg.method)};
}

std::string measurement_table(std::span<const measure::LeafMeasurement> rows) {
  std::string out;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-16s %-9s %11s %10s %8s %9s\n", "leaf_id", "method",
                "length(mm)", "width(mm)", "inliers", "rms(mm)");
  out += buf;
  for (const auto& m : rows) {
    std::snprintf(buf, sizeof(buf), "%-16s %-9s %11.2f %10.2f %8.3f %9.3f\n", m.leaf_id.c_str(),
                  std::string(measure::to_string(m.method)).c_str(), m.length, m.width,
                  m.inlier_fraction, m.plane_rms);
    out += buf;
  }
  return out;
}

int cmd_measure(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto fmts = formats_or(cfg, {"csv", "json"}, {"csv", "json", "table"}, "measure");
  const measure::ExtentConfig ec = extent_config(cfg);
  const io::ScanManifest manifest = io::load_manifest(cfg.manifest);

  // Load once, measure per method.
  const PointCloud cloud = io::read_ply(manifest.cloud);
  std::vector<io::LeafMask> masks;
  std::vector<measure::SkipRecord> skipped;
  for (const auto& entry : manifest.masks) {
    const std::string bytes = io::read_file(entry.path);  // unreadable file aborts the run
    try {
      masks.push_back(io::parse_mask(bytes, entry.leaf_id));
    } catch (const Error& e) {
      skipped.push_back({entry.leaf_id, e.what()});
    }
  }

  std::vector<measure::LeafMeasurement> rows;
  std::set<std::string> skipped_ids;
  for (const auto& s : skipped) skipped_ids.insert(s.leaf_id);
  for (measure::Method method : methods(cfg)) {
    measure::ScanResult r = measure::measure_masks(cloud, masks, ec, method);
    rows.insert(rows.end(), r.measurements.begin(), r.measurements.end());
    for (auto& s : r.skipped) {
      if (skipped_ids.insert(s.leaf_id).second) skipped.push_back(std::move(s));
    }
  }
  // Keep the skip sidecar in manifest order.
  std::vector<measure::SkipRecord> ordered;
  for (const auto& entry : manifest.masks) {
    for (const auto& s : skipped) {
      if (s.leaf_id == entry.leaf_id) {
        ordered.push_back(s);
        break;
      }
    }
  }

  OutputSet files;
  if (fmts.count("csv")) files.add("measurements.csv", io::measurements_to_csv(rows));
  if (fmts.count("json")) files.add("measurements.json", io::measurements_to_json(rows));
  files.add("skipped.json", io::skips_to_json(ordered));
  files.commit(cfg.out_dir);

  for (const auto& s : ordered) err << "skipped " << s.leaf_id << ": " << s.error << '\n';
  if (fmts.count("table")) out << measurement_table(rows);
  if (rows.empty()) {
    err << "measure: every leaf was skipped\n";
    return kEmptyResult;
  }
  return kOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto fmts = formats_or(cfg, {"table", "json"}, {"csv", "json", "svg", "table"}, "eval");
  eval::RSquaredKind kind;
  if (cfg.r2 == "determination") kind = eval::RSquaredKind::determination;
  else if (cfg.r2 == "pearson") kind = eval::RSquaredKind::pearson;
  else throw std::invalid_argument("--r2 must be 'determination' or 'pearson'");

  const auto rows = io::parse_measurements(io::read_file(cfg.measurements));
  const auto truth = eval::parse_ground_truth_csv(io::read_file(cfg.truth));
  const auto reports = eval::evaluate_by_method(rows, truth, kind);

  OutputSet files;
  const std::string table = eval::report_table(reports, "Plane fitting results");
  if (fmts.count("table")) files.add("report.txt", table);
  if (fmts.count("json")) files.add("report.json", eval::report_json(reports));
  if (fmts.count("csv")) {
    std::string csv = "leaf_id,method,length_residual_mm,width_residual_mm\n";
    for (const auto& r : reports) {
      for (std::size_t i = 0; i < r.length.residuals.size(); ++i) {
        csv += r.length.residuals[i].leaf_id + "," + r.method + "," +
               io::format_number(r.length.residuals[i].value) + "," +
               io::format_number(r.width.residuals[i].value) + "\n";
      }
    }
    files.add("residuals.csv", std::move(csv));
  }
  if (fmts.count("svg")) {
    for (const auto& r : reports) {
      files.add(r.method + "_length.svg",
                eval::scatter_svg(r.length.predicted, r.length.truth, "Length (" + r.method + ")"));
      files.add(r.method + "_width.svg",
                eval::scatter_svg(r.width.predicted, r.width.truth, "Width (" + r.method + ")"));
    }
  }
  files.commit(cfg.out_dir);
  if (fmts.count("table")) out << table;
  return kOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  std::string text = io::read_file(cfg.spec);
  if (cfg.seed || std::getenv("LEAFMETRIC_SEED")) {
    // A command-line seed replaces the synthesis file's top-level seed.
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("synth spec: ") + e.what());
    }
    const std::uint64_t seed = resolve_seed(cfg);
    if (doc.is_object() && doc.contains("cube") && doc["cube"].is_object()) doc["cube"]["seed"] = seed;
    else if (doc.is_object()) doc["seed"] = seed;
    text = doc.dump();
  }
  const synth::SynthRequest req = synth::parse_synth_spec(text);

  OutputSet files;
  if (req.cube) {
    const synth::SyntheticCube cube = synth::generate_cube_face_scan(*req.cube);
    files.add("cube.ply", io::write_ply(cube.cloud, io::PlyFormat::binary_little_endian));
    const nlohmann::json truth = {{"edge_mm", cube.truth_edge},
                                  {"camera_distance_mm", req.cube->camera_distance},
                                  {"noise_sigma_mm", req.cube->noise_sigma},
                                  {"point_spacing_mm", cube.point_spacing},
                                  {"seed", req.cube->seed}};
    files.add("cube_truth.json", truth.dump(2) + "\n");
    files.commit(cfg.out_dir);
    out << "wrote cube scan with " << cube.cloud.valid_count() << " points\n";
    return kOk;
  }

  const synth::ScanSpec& spec = *req.scan;
  const synth::SyntheticScan scan = synth::generate_scan(spec);
  files.add("scan.ply", io::write_ply(scan.cloud, io::PlyFormat::binary_little_endian));
  io::ScanManifest manifest;
  manifest.cloud = "scan.ply";
  manifest.scan_id = spec.scan_id;
  manifest.date = spec.date;
  std::vector<eval::TruthRow> truth_rows;
  nlohmann::json truth_json = nlohmann::json::array();
  for (std::size_t i = 0; i < scan.masks.size(); ++i) {
    const std::string& id = scan.masks[i].leaf_id();
    const fs::path rel = fs::path("masks") / (id + ".pgm");
    files.add(rel, io::write_mask_pgm(scan.masks[i]));
    manifest.masks.push_back({id, rel});
    truth_rows.push_back({id, scan.truth[i].length, scan.truth[i].width, eval::TruthSource::synthetic});
    truth_json.push_back({{"leaf_id", id},
                          {"length_mm", scan.truth[i].length},
                          {"width_mm", scan.truth[i].width}});
  }
  files.add("manifest.json", io::manifest_to_json(manifest));
  files.add("truth.csv", eval::ground_truth_to_csv(eval::GroundTruthTable(std::move(truth_rows))));
  files.add("truth.json", truth_json.dump(2) + "\n");
  files.commit(cfg.out_dir);
  out << "wrote scan with " << scan.masks.size() << " leaves\n";
  return kOk;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto fmts = formats_or(cfg, {"table"}, {"json", "table"}, "calibrate");
  eval::CalibrationConfig cc;
  cc.ransac.iterations = cfg.iterations;
  cc.ransac.distance_threshold = cfg.threshold_mm;
  cc.ransac.seed = resolve_seed(cfg);
  if (cfg.edge_estimator == "moment") cc.estimator = eval::EdgeEstimator::moment;
  else if (cfg.edge_estimator == "extent") cc.estimator = eval::EdgeEstimator::extent;
  else throw std::invalid_argument("--edge-estimator must be 'moment' or 'extent'");
  if (!(cfg.true_edge > 0.0)) throw std::invalid_argument("true edge must be > 0");

  const PointCloud cloud = io::read_ply(cfg.cube);
  eval::CalibrationResult res;
  try {
    res = eval::calibrate_cube(cloud, cfg.true_edge, cc);
  } catch (const InsufficientPointsError& e) {
    throw DegenerateInputError(e.what());
  }
  OutputSet files;
  if (fmts.count("json")) files.add("calibration.json", eval::calibration_json(res));
  files.commit(cfg.out_dir);
  if (fmts.count("table")) out << eval::calibration_table(res);
  return kOk;
}

void add_common(CLI::App* sub, RunConfig& cfg, bool ransac) {
  sub->add_option("--out-dir", cfg.out_dir, "Directory for output files")->capture_default_str();
  sub->add_option("--format", cfg.formats,
                  "Output formats, any of csv, json, svg, table (repeat or comma-separate)")
      ->delimiter(',')
      ->check(CLI::IsMember({"csv", "json", "svg", "table"}));
  sub->add_option("--seed", cfg.seed, "RNG seed (falls back to LEAFMETRIC_SEED, then 0)");
  sub->add_option("--threads", cfg.threads, "Worker threads; 0 uses the OpenMP default")
      ->check(CLI::NonNegativeNumber);
  if (!ransac) return;
  sub->add_option("--iterations", cfg.iterations, "RANSAC iterations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--threshold-mm", cfg.threshold_mm, "RANSAC inlier distance threshold (mm)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Leaf length and width from organized point clouds and leaf masks", "leafmetric"};
  app.require_subcommand(1, 1);

  auto* measure = app.add_subcommand("measure", "Measure every leaf listed in a scan manifest");
  measure->add_option("manifest", cfg.manifest, "Scan manifest (JSON)")->required();
  add_common(measure, cfg, true);
  measure
      ->add_option("--method", cfg.method,
                   "plain, refined, combined, selected, or all (every method in turn)")
      ->capture_default_str()
      ->check(CLI::IsMember({"plain", "refined", "combined", "selected", "all"}));
  measure->add_option("--trim", cfg.trim, "Fraction trimmed from each end of the extents, [0, 0.5)")
      ->capture_default_str();

  auto* ev = app.add_subcommand("eval", "Score measurements against ground truth");
  ev->add_option("measurements", cfg.measurements, "Measurements (CSV or JSON)")->required();
  ev->add_option("truth", cfg.truth, "Ground truth CSV")->required();
  add_common(ev, cfg, false);
  ev->add_option("--r2", cfg.r2, "determination (default) or pearson")
      ->capture_default_str()
      ->check(CLI::IsMember({"determination", "pearson"}));

  auto* syn = app.add_subcommand("synth", "Generate a synthetic scan or cube from a JSON spec");
  syn->add_option("spec", cfg.spec, "Synthesis spec (JSON)")->required();
  add_common(syn, cfg, false);

  auto* cal = app.add_subcommand("calibrate", "Estimate the edge of a scanned cube");
  cal->add_option("cube", cfg.cube, "Cube point cloud (PLY)")->required();
  cal->add_option("true_edge,--true-edge-mm", cfg.true_edge, "True cube edge (mm)")
      ->capture_default_str();
  add_common(cal, cfg, true);
  cal->add_option("--edge-estimator", cfg.edge_estimator,
                  "moment (second moment of each face) or extent (min-max)")
      ->capture_default_str()
      ->check(CLI::IsMember({"moment", "extent"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "leafmetric: " << e.what() << '\n';
    return kInputError;
  }

#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif

  try {
    if (*measure) return cmd_measure(cfg, out, err);
    if (*ev) return cmd_eval(cfg, out, err);
    if (*syn) return cmd_synth(cfg, out, err);
    return cmd_calibrate(cfg, out, err);
  } catch (const JoinError& e) {
    err << "leafmetric: " << e.what() << '\n';
    return kEmptyResult;
  } catch (const DegenerateInputError& e) {
    err << "leafmetric: " << e.what() << '\n';
    return kEmptyResult;
  } catch (const std::exception& e) {
    err << "leafmetric: " << e.what() << '\n';
    return kInputError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"leafmetric"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace leafmetric::cli
