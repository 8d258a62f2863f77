#include "leafmetric/manifest.hpp"

#include <regex>

#include <json.hpp>

#include "leafmetric/cloud_io.hpp"
#include "leafmetric/error.hpp"

namespace leafmetric::io {
namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

const std::string& require_string(const json& obj, const char* key, const char* where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(std::string("manifest: ") + where + " needs string field '" + key + "'");
  }
  return it->get_ref<const std::string&>();
}

}  // namespace

ScanManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("manifest: top level must be an object");

  ScanManifest m;
  m.cloud = resolve(base_dir, require_string(doc, "cloud", "top level"));
  m.scan_id = require_string(doc, "scan_id", "top level");
  m.date = require_string(doc, "date", "top level");
  static const std::regex iso_date(R"(^\d{4}-\d{2}-\d{2}([T ][0-9:.]+(Z|[+-]\d{2}:?\d{2})?)?$)");
  if (!std::regex_match(m.date, iso_date)) {
    throw ParseError("manifest: date '" + m.date + "' is not ISO-8601");
  }

  auto masks = doc.find("masks");
  if (masks == doc.end() || !masks->is_array()) {
    throw ParseError("manifest: 'masks' must be an array");
  }
  for (std::size_t i = 0; i < masks->size(); ++i) {
    const json& entry = (*masks)[i];
    if (!entry.is_object()) {
      throw ParseError("manifest: masks[" + std::to_string(i) + "] must be an object");
    }
    const std::string where = "masks[" + std::to_string(i) + "]";
    MaskEntry e;
    e.leaf_id = require_string(entry, "leaf_id", where.c_str());
    e.path = resolve(base_dir, require_string(entry, "path", where.c_str()));
    m.masks.push_back(std::move(e));
  }
  return m;
}

ScanManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_manifest(text, path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string manifest_to_json(const ScanManifest& manifest) {
  json doc;
  doc["cloud"] = manifest.cloud.generic_string();
  doc["scan_id"] = manifest.scan_id;
  doc["date"] = manifest.date;
  doc["masks"] = json::array();
  for (const auto& m : manifest.masks) {
    doc["masks"].push_back({{"leaf_id", m.leaf_id}, {"path", m.path.generic_string()}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace leafmetric::io
