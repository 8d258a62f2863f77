#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leafmetric/leaf_measure.hpp"

namespace leafmetric::eval {

enum class TruthSource { manual, software, synthetic };

std::string_view to_string(TruthSource s);

struct TruthRow {
  std::string leaf_id;
  double length = 0.0;  // mm
  double width = 0.0;   // mm
  TruthSource source = TruthSource::software;
};

/// Reference leaf sizes keyed by leaf_id.
class GroundTruthTable {
 public:
  GroundTruthTable() = default;
  /// Throws std::invalid_argument on duplicate ids or non-positive sizes.
  explicit GroundTruthTable(std::vector<TruthRow> rows);

  const std::vector<TruthRow>& rows() const { return rows_; }
  const TruthRow* find(std::string_view leaf_id) const;

 private:
  std::vector<TruthRow> rows_;
};

/// CSV with header `leaf_id,length_mm,width_mm,source`. Throws ParseError.
GroundTruthTable parse_ground_truth_csv(std::string_view text);
std::string ground_truth_to_csv(const GroundTruthTable& table);

/// sqrt(mean((pred - truth)^2)). Throws std::invalid_argument on empty or
/// mismatched input.
double rmse(std::span<const double> pred, std::span<const double> truth);

/// Coefficient of determination 1 - SS_res / SS_tot, SS_tot about the mean
/// of `truth`. Needs >= 2 values; constant truth throws DegenerateInputError.
double r_squared(std::span<const double> pred, std::span<const double> truth);

/// Squared Pearson correlation of (pred, truth); the R^2 of a fitted line.
double pearson_r_squared(std::span<const double> pred, std::span<const double> truth);

/// 100 * mean|pred - truth| / mean(truth).
double error_percentage(std::span<const double> pred, std::span<const double> truth);

enum class RSquaredKind { determination, pearson };
std::string_view to_string(RSquaredKind k);

struct Residual {
  std::string leaf_id;
  double value = 0.0;  // predicted - truth, mm
};

struct DimensionReport {
  double rmse = 0.0;
  double r_squared = 0.0;
  double error_percentage = 0.0;
  std::vector<double> predicted;
  std::vector<double> truth;
  std::vector<Residual> residuals;
  std::size_t n = 0;
};

struct EvalReport {
  std::string method;
  RSquaredKind r2_kind = RSquaredKind::determination;
  DimensionReport length;
  DimensionReport width;
  /// Measured leaf ids absent from the ground truth, and vice versa.
  std::vector<std::string> unmatched_measurements;
  std::vector<std::string> unmatched_truth;
};

/// Joins on leaf_id and scores both dimensions. Measurements are expected
/// to share one method. Throws JoinError below 2 matches.
EvalReport evaluate(std::span<const measure::LeafMeasurement> measurements,
                    const GroundTruthTable& truth,
                    RSquaredKind r2_kind = RSquaredKind::determination);

/// One report per method, in order of first appearance.
std::vector<EvalReport> evaluate_by_method(std::span<const measure::LeafMeasurement> measurements,
                                           const GroundTruthTable& truth,
                                           RSquaredKind r2_kind = RSquaredKind::determination);

/// Aligned text table: one Length and one Width row per method with
/// Error Percentage(%), RMSE(mm) and R^2 columns.
std::string report_table(std::span<const EvalReport> reports, std::string_view title);

std::string report_json(std::span<const EvalReport> reports);

/// Standalone SVG scatter of predicted vs truth with the identity line, the
/// least-squares fit line and an RMSE / R^2 label. Output depends only on
/// the inputs.
std::string scatter_svg(std::span<const double> pred, std::span<const double> truth,
                        std::string_view title);

}  // namespace leafmetric::eval
