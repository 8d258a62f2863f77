#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace leafmetric::io {

struct MaskEntry {
  std::string leaf_id;
  std::filesystem::path path;
};

/// One scan: an organized cloud plus one mask file per leaf instance.
///
/// JSON layout:
///   {"cloud": "scan.ply", "scan_id": "...", "date": "2024-03-01",
///    "masks": [{"leaf_id": "L01", "path": "masks/L01.pgm"}, ...]}
struct ScanManifest {
  std::filesystem::path cloud;
  std::vector<MaskEntry> masks;
  std::string scan_id;
  std::string date;
};

/// Relative paths are resolved against `base_dir`. Throws ParseError.
ScanManifest parse_manifest(std::string_view json_text,
                            const std::filesystem::path& base_dir = {});

ScanManifest load_manifest(const std::filesystem::path& path);

/// Paths are written as given (callers pass relative paths for portable
/// manifests).
std::string manifest_to_json(const ScanManifest& manifest);

}  // namespace leafmetric::io
