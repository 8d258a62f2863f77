#include "leafmetric/measurement_io.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "leafmetric/error.hpp"

namespace leafmetric::io {
namespace {

using nlohmann::json;
using measure::LeafMeasurement;

constexpr std::string_view kHeader = "leaf_id,method,length_mm,width_mm,inlier_fraction,plane_rms";

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError("measurements line " + std::to_string(line) + ": '" + std::string(tok) +
                     "' is not a number");
  }
  return v;
}

std::vector<LeafMeasurement> parse_csv(std::string_view text) {
  std::vector<LeafMeasurement> out;
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
      if (line != kHeader) {
        throw ParseError("measurements line 1: expected header '" + std::string(kHeader) + "'");
      }
      header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 6) {
      throw ParseError("measurements line " + std::to_string(line_no) + ": expected 6 fields");
    }
    LeafMeasurement m;
    m.leaf_id = std::string(f[0]);
    try {
      m.method = measure::parse_method(f[1]);
    } catch (const std::invalid_argument& e) {
      throw ParseError("measurements line " + std::to_string(line_no) + ": " + e.what());
    }
    m.length = parse_double(f[2], line_no);
    m.width = parse_double(f[3], line_no);
    m.inlier_fraction = parse_double(f[4], line_no);
    m.plane_rms = parse_double(f[5], line_no);
    out.push_back(std::move(m));
  }
  if (!header) throw ParseError("measurements: empty file");
  return out;
}

std::vector<LeafMeasurement> parse_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
    if (!doc.is_array()) throw ParseError("measurements JSON must be an array");
    std::vector<LeafMeasurement> out;
    for (const auto& row : doc) {
      LeafMeasurement m;
      m.leaf_id = row.at("leaf_id").get<std::string>();
      m.method = measure::parse_method(row.at("method").get<std::string>());
      m.length = row.at("length_mm").get<double>();
      m.width = row.at("width_mm").get<double>();
      m.inlier_fraction = row.at("inlier_fraction").get<double>();
      m.plane_rms = row.at("plane_rms").get<double>();
      out.push_back(std::move(m));
    }
    return out;
  } catch (const json::exception& e) {
    throw ParseError(std::string("measurements JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("measurements JSON: ") + e.what());
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string measurements_to_csv(std::span<const LeafMeasurement> rows) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& m : rows) {
    if (m.leaf_id.find_first_of(",\n\r") != std::string::npos) {
      throw std::invalid_argument("leaf_id '" + m.leaf_id + "' cannot be written to CSV");
    }
    out += m.leaf_id;
    out += ',';
    out += measure::to_string(m.method);
    for (double v : {m.length, m.width, m.inlier_fraction, m.plane_rms}) {
      out += ',';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

std::string measurements_to_json(std::span<const LeafMeasurement> rows) {
  json doc = json::array();
  for (const auto& m : rows) {
    doc.push_back({{"leaf_id", m.leaf_id},
                   {"method", std::string(measure::to_string(m.method))},
                   {"length_mm", m.length},
                   {"width_mm", m.width},
                   {"inlier_fraction", m.inlier_fraction},
                   {"plane_rms", m.plane_rms}});
  }
  return doc.dump(2) + "\n";
}

std::string skips_to_json(std::span<const measure::SkipRecord> skips) {
  json doc = json::array();
  for (const auto& s : skips) doc.push_back({{"leaf_id", s.leaf_id}, {"error", s.error}});
  return doc.dump(2) + "\n";
}

std::vector<LeafMeasurement> parse_measurements(std::string_view text) {
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '[') return parse_json(text);
  return parse_csv(text);
}

}  // namespace leafmetric::io
