#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leafmetric/leaf_measure.hpp"

namespace leafmetric::io {

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

/// Header: leaf_id,method,length_mm,width_mm,inlier_fraction,plane_rms
std::string measurements_to_csv(std::span<const measure::LeafMeasurement> rows);
std::string measurements_to_json(std::span<const measure::LeafMeasurement> rows);
std::string skips_to_json(std::span<const measure::SkipRecord> skips);

/// Accepts either the CSV or the JSON layout (JSON when the first
/// non-space character is '['). Throws ParseError.
std::vector<measure::LeafMeasurement> parse_measurements(std::string_view text);

/// Splits one CSV line on commas; quoting is not supported.
std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace leafmetric::io
