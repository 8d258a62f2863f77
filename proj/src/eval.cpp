#include "leafmetric/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "leafmetric/error.hpp"
#include "leafmetric/measurement_io.hpp"

namespace leafmetric::eval {
namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth, std::size_t min_n,
                const char* what) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(pred.size()) + " vs " +
                                std::to_string(truth.size()) + ")");
  }
  if (pred.size() < min_n) {
    throw std::invalid_argument(std::string(what) + ": needs at least " + std::to_string(min_n) +
                                " values");
  }
}

double ss_residual(std::span<const double> pred, std::span<const double> truth) {
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    ss += d * d;
  }
  return ss;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double parse_field(std::string_view tok, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("ground truth line " + std::to_string(line) + ": '" + std::string(tok) +
                     "' is not a number");
  }
  return v;
}

DimensionReport score(std::vector<double> pred, std::vector<double> truth,
                      const std::vector<std::string>& ids, RSquaredKind kind) {
  DimensionReport d;
  d.n = pred.size();
  d.rmse = rmse(pred, truth);
  d.r_squared = kind == RSquaredKind::determination ? r_squared(pred, truth)
                                                     : pearson_r_squared(pred, truth);
  d.error_percentage = error_percentage(pred, truth);
  for (std::size_t i = 0; i < pred.size(); ++i) d.residuals.push_back({ids[i], pred[i] - truth[i]});
  d.predicted = std::move(pred);
  d.truth = std::move(truth);
  return d;
}

std::string method_label(std::string_view method) { return "RANSAC - " + std::string(method); }

nlohmann::json dimension_json(const DimensionReport& d) {
  nlohmann::json residuals = nlohmann::json::array();
  for (const auto& r : d.residuals) residuals.push_back({{"leaf_id", r.leaf_id}, {"residual_mm", r.value}});
  return {{"n", d.n},
          {"rmse_mm", d.rmse},
          {"r_squared", d.r_squared},
          {"error_percentage", d.error_percentage},
          {"residuals", residuals}};
}

}  // namespace

std::string_view to_string(TruthSource s) {
  switch (s) {
    case TruthSource::manual: return "manual";
    case TruthSource::software: return "software";
    case TruthSource::synthetic: return "synthetic";
  }
  return "?";
}

std::string_view to_string(RSquaredKind k) {
  return k == RSquaredKind::determination ? "coefficient_of_determination" : "pearson_squared";
}

GroundTruthTable::GroundTruthTable(std::vector<TruthRow> rows) : rows_(std::move(rows)) {
  std::set<std::string_view> seen;
  for (const auto& r : rows_) {
    if (!seen.insert(r.leaf_id).second) {
      throw std::invalid_argument("ground truth: duplicate leaf_id '" + r.leaf_id + "'");
    }
    if (!(r.length > 0.0) || !(r.width > 0.0)) {
      throw std::invalid_argument("ground truth: non-positive size for '" + r.leaf_id + "'");
    }
  }
}

const TruthRow* GroundTruthTable::find(std::string_view leaf_id) const {
  for (const auto& r : rows_) {
    if (r.leaf_id == leaf_id) return &r;
  }
  return nullptr;
}

GroundTruthTable parse_ground_truth_csv(std::string_view text) {
  std::vector<TruthRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header) {
      if (line != "leaf_id,length_mm,width_mm,source") {
        throw ParseError("ground truth line " + std::to_string(line_no) +
                         ": expected header 'leaf_id,length_mm,width_mm,source'");
      }
      header = true;
      continue;
    }
    const auto f = io::split_csv_line(line);
    if (f.size() != 4) {
      throw ParseError("ground truth line " + std::to_string(line_no) + ": expected 4 fields");
    }
    TruthRow r;
    r.leaf_id = std::string(f[0]);
    r.length = parse_field(f[1], line_no);
    r.width = parse_field(f[2], line_no);
    if (f[3] == "manual") r.source = TruthSource::manual;
    else if (f[3] == "software") r.source = TruthSource::software;
    else if (f[3] == "synthetic") r.source = TruthSource::synthetic;
    else {
      throw ParseError("ground truth line " + std::to_string(line_no) + ": unknown source '" +
                       std::string(f[3]) + "'");
    }
    rows.push_back(std::move(r));
  }
  if (!header) throw ParseError("ground truth: empty file");
  try {
    return GroundTruthTable(std::move(rows));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

std::string ground_truth_to_csv(const GroundTruthTable& table) {
  std::string out = "leaf_id,length_mm,width_mm,source\n";
  for (const auto& r : table.rows()) {
    out += r.leaf_id + "," + io::format_number(r.length) + "," + io::format_number(r.width) + "," +
           std::string(to_string(r.source)) + "\n";
  }
  return out;
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 1, "rmse");
  return std::sqrt(ss_residual(pred, truth) / static_cast<double>(pred.size()));
}

double r_squared(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 2, "r_squared");
  const double m = mean(truth);
  double ss_tot = 0.0;
  for (double t : truth) ss_tot += (t - m) * (t - m);
  if (ss_tot == 0.0) throw DegenerateInputError("r_squared: ground truth is constant");
  return 1.0 - ss_residual(pred, truth) / ss_tot;
}

double pearson_r_squared(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 2, "pearson_r_squared");
  const double mp = mean(pred);
  const double mt = mean(truth);
  double spp = 0.0, stt = 0.0, spt = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    spp += (pred[i] - mp) * (pred[i] - mp);
    stt += (truth[i] - mt) * (truth[i] - mt);
    spt += (pred[i] - mp) * (truth[i] - mt);
  }
  if (stt == 0.0 || spp == 0.0) {
    throw DegenerateInputError("pearson_r_squared: constant input");
  }
  return (spt * spt) / (spp * stt);
}

double error_percentage(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 1, "error_percentage");
  double abs_err = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) abs_err += std::abs(pred[i] - truth[i]);
  const double mt = mean(truth);
  if (!(mt > 0.0)) throw DegenerateInputError("error_percentage: mean truth is not positive");
  return 100.0 * (abs_err / static_cast<double>(pred.size())) / mt;
}

EvalReport evaluate(std::span<const measure::LeafMeasurement> measurements,
                    const GroundTruthTable& truth, RSquaredKind r2_kind) {
  EvalReport rep;
  rep.r2_kind = r2_kind;
  if (!measurements.empty()) rep.method = std::string(measure::to_string(measurements[0].method));

  std::vector<double> pl, tl, pw, tw;
  std::vector<std::string> ids;
  std::set<std::string_view> measured;
  for (const auto& m : measurements) {
    if (!measured.insert(m.leaf_id).second) {
      throw std::invalid_argument("evaluate: leaf_id '" + m.leaf_id + "' measured twice");
    }
    const TruthRow* t = truth.find(m.leaf_id);
    if (!t) {
      rep.unmatched_measurements.push_back(m.leaf_id);
      continue;
    }
    ids.push_back(m.leaf_id);
    pl.push_back(m.length);
    tl.push_back(t->length);
    pw.push_back(m.width);
    tw.push_back(t->width);
  }
  for (const auto& r : truth.rows()) {
    if (!measured.count(r.leaf_id)) rep.unmatched_truth.push_back(r.leaf_id);
  }
  if (ids.size() < 2) {
    throw JoinError("only " + std::to_string(ids.size()) +
                    " leaf ids match the ground truth; at least 2 are required");
  }
  rep.length = score(std::move(pl), std::move(tl), ids, r2_kind);
  rep.width = score(std::move(pw), std::move(tw), ids, r2_kind);
  return rep;
}

std::vector<EvalReport> evaluate_by_method(std::span<const measure::LeafMeasurement> measurements,
                                           const GroundTruthTable& truth, RSquaredKind r2_kind) {
  std::vector<measure::Method> order;
  for (const auto& m : measurements) {
    if (std::find(order.begin(), order.end(), m.method) == order.end()) order.push_back(m.method);
  }
  std::vector<EvalReport> out;
  for (measure::Method method : order) {
    std::vector<measure::LeafMeasurement> subset;
    for (const auto& m : measurements) {
      if (m.method == method) subset.push_back(m);
    }
    out.push_back(evaluate(subset, truth, r2_kind));
  }
  if (out.empty()) throw JoinError("no measurements to evaluate");
  return out;
}

std::string report_table(std::span<const EvalReport> reports, std::string_view title) {
  std::string out;
  out += title;
  out += '\n';
  if (!reports.empty()) {
    out += "R^2: ";
    out += reports[0].r2_kind == RSquaredKind::determination ? "coefficient of determination"
                                                             : "squared Pearson correlation";
    out += '\n';
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-20s %-9s %20s %9s %7s\n", "Method", "Dimension",
                "Error Percentage(%)", "RMSE(mm)", "R^2");
  out += buf;
  out += std::string(69, '-') + "\n";
  for (const auto& r : reports) {
    const std::string label = method_label(r.method);
    std::snprintf(buf, sizeof(buf), "%-20s %-9s %20.2f %9.2f %7.3f\n", label.c_str(), "Length",
                  r.length.error_percentage, r.length.rmse, r.length.r_squared);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-20s %-9s %20.2f %9.2f %7.3f\n", "", "Width",
                  r.width.error_percentage, r.width.rmse, r.width.r_squared);
    out += buf;
  }
  return out;
}

std::string report_json(std::span<const EvalReport> reports) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : reports) {
    doc.push_back({{"method", r.method},
                   {"r_squared_kind", std::string(to_string(r.r2_kind))},
                   {"length", dimension_json(r.length)},
                   {"width", dimension_json(r.width)},
                   {"unmatched_measurements", r.unmatched_measurements},
                   {"unmatched_truth", r.unmatched_truth}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace leafmetric::eval
