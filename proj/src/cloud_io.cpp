#include "leafmetric/cloud_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "leafmetric/error.hpp"

namespace leafmetric::io {
namespace {

enum class PlyType { int8, uint8, int16, uint16, int32, uint32, float32, float64 };

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::float32;
  bool is_list = false;
  PlyType count_type = PlyType::uint8;
};

struct PlyElement {
  std::string name;
  std::uint64_t count = 0;
  std::vector<PlyProperty> properties;

  bool fixed_size() const {
    return std::none_of(properties.begin(), properties.end(),
                        [](const PlyProperty& p) { return p.is_list; });
  }
};

struct PlyHeader {
  PlyFormat format = PlyFormat::ascii;
  std::vector<PlyElement> elements;
  std::optional<std::uint64_t> grid_width;
  std::optional<std::uint64_t> grid_height;
  std::size_t body_offset = 0;
  std::size_t line_count = 0;
};

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::int8:
    case PlyType::uint8: return 1;
    case PlyType::int16:
    case PlyType::uint16: return 2;
    case PlyType::int32:
    case PlyType::uint32:
    case PlyType::float32: return 4;
    case PlyType::float64: return 8;
  }
  return 0;
}

const char* type_name(PlyType t) {
  switch (t) {
    case PlyType::int8: return "char";
    case PlyType::uint8: return "uchar";
    case PlyType::int16: return "short";
    case PlyType::uint16: return "ushort";
    case PlyType::int32: return "int";
    case PlyType::uint32: return "uint";
    case PlyType::float32: return "float";
    case PlyType::float64: return "double";
  }
  return "?";
}

std::optional<PlyType> parse_type(std::string_view s) {
  if (s == "char" || s == "int8") return PlyType::int8;
  if (s == "uchar" || s == "uint8") return PlyType::uint8;
  if (s == "short" || s == "int16") return PlyType::int16;
  if (s == "ushort" || s == "uint16") return PlyType::uint16;
  if (s == "int" || s == "int32") return PlyType::int32;
  if (s == "uint" || s == "uint32") return PlyType::uint32;
  if (s == "float" || s == "float32") return PlyType::float32;
  if (s == "double" || s == "float64") return PlyType::float64;
  return std::nullopt;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void header_error(std::size_t line, const std::string& what) {
  throw ParseError("PLY header line " + std::to_string(line) + ": " + what);
}

std::uint64_t parse_count(std::string_view tok, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    header_error(line, "expected a non-negative integer, got '" + std::string(tok) + "'");
  }
  return v;
}

void read_grid_key(const std::vector<std::string_view>& tok, std::size_t line,
                   PlyHeader& h) {
  if (tok.size() != 3) return;
  if (tok[1] == "width") h.grid_width = parse_count(tok[2], line);
  if (tok[1] == "height") h.grid_height = parse_count(tok[2], line);
}

PlyHeader parse_header(std::string_view bytes) {
  PlyHeader h;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_format = false;
  bool done = false;

  while (!done) {
    if (pos >= bytes.size()) {
      header_error(line_no + 1, "unexpected end of stream before end_header");
    }
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) {
      header_error(line_no + 1, "unterminated line before end_header");
    }
    std::string_view line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line_no == 1) {
      if (line != "ply") header_error(1, "missing 'ply' magic");
      continue;
    }
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string_view key = tok[0];

    if (key == "format") {
      if (tok.size() != 3) header_error(line_no, "malformed format line");
      if (tok[1] == "ascii") {
        h.format = PlyFormat::ascii;
      } else if (tok[1] == "binary_little_endian") {
        h.format = PlyFormat::binary_little_endian;
      } else if (tok[1] == "binary_big_endian") {
        header_error(line_no, "unsupported format binary_big_endian");
      } else {
        header_error(line_no, "unknown format '" + std::string(tok[1]) + "'");
      }
      if (tok[2] != "1.0") {
        header_error(line_no, "unsupported version '" + std::string(tok[2]) + "'");
      }
      have_format = true;
    } else if (key == "comment") {
      read_grid_key(tok, line_no, h);
    } else if (key == "obj_info") {
      read_grid_key(tok, line_no, h);
    } else if (key == "element") {
      if (tok.size() != 3) header_error(line_no, "malformed element line");
      PlyElement e;
      e.name = std::string(tok[1]);
      e.count = parse_count(tok[2], line_no);
      h.elements.push_back(std::move(e));
    } else if (key == "property") {
      if (h.elements.empty()) header_error(line_no, "property before any element");
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = parse_type(tok[2]);
        auto it = parse_type(tok[3]);
        if (!ct || !it) header_error(line_no, "unknown list property type");
        if (*ct == PlyType::float32 || *ct == PlyType::float64) {
          header_error(line_no, "list count type must be an integer type");
        }
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        auto t = parse_type(tok[1]);
        if (!t) header_error(line_no, "unknown property type '" + std::string(tok[1]) + "'");
        p.type = *t;
        p.name = std::string(tok[2]);
      } else {
        header_error(line_no, "malformed property line");
      }
      h.elements.back().properties.push_back(std::move(p));
    } else if (key == "end_header") {
      done = true;
    } else {
      header_error(line_no, "unexpected keyword '" + std::string(key) + "'");
    }
  }

  if (!have_format) header_error(line_no, "missing format line");
  h.body_offset = pos;
  h.line_count = line_no;
  return h;
}

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void store_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
    std::reverse(buf, buf + sizeof(T));
  }
  out.append(buf, sizeof(T));
}

double decode_binary(PlyType t, const char* p) {
  switch (t) {
    case PlyType::int8: return load_le<std::int8_t>(p);
    case PlyType::uint8: return load_le<std::uint8_t>(p);
    case PlyType::int16: return load_le<std::int16_t>(p);
    case PlyType::uint16: return load_le<std::uint16_t>(p);
    case PlyType::int32: return load_le<std::int32_t>(p);
    case PlyType::uint32: return load_le<std::uint32_t>(p);
    case PlyType::float32: return static_cast<double>(load_le<float>(p));
    case PlyType::float64: return load_le<double>(p);
  }
  return 0.0;
}

bool decode_ascii(PlyType t, std::string_view tok, double& out) {
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  if (t == PlyType::float32) {
    float f = 0;
    auto [ptr, ec] = std::from_chars(b, e, f);
    if (ec != std::errc() || ptr != e) return false;
    out = static_cast<double>(f);
    return true;
  }
  if (t == PlyType::float64) {
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e;
  }
  long long v = 0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) return false;
  out = static_cast<double>(v);
  return true;
}

// Per-vertex slots filled while reading one record.
enum class Slot { none, x, y, z, red, green, blue };

struct VertexLayout {
  std::size_t element_index = 0;
  std::vector<Slot> slots;
  bool has_color = false;
  ScalarType precision = ScalarType::float32;
};

VertexLayout vertex_layout(const PlyHeader& h) {
  VertexLayout lay;
  auto it = std::find_if(h.elements.begin(), h.elements.end(),
                         [](const PlyElement& e) { return e.name == "vertex"; });
  if (it == h.elements.end()) header_error(h.line_count, "no vertex element");
  lay.element_index = static_cast<std::size_t>(it - h.elements.begin());

  int seen[7] = {};
  for (const auto& p : it->properties) {
    Slot s = Slot::none;
    if (p.name == "x") s = Slot::x;
    else if (p.name == "y") s = Slot::y;
    else if (p.name == "z") s = Slot::z;
    else if (p.name == "red") s = Slot::red;
    else if (p.name == "green") s = Slot::green;
    else if (p.name == "blue") s = Slot::blue;

    if (s == Slot::x || s == Slot::y || s == Slot::z) {
      if (p.is_list || (p.type != PlyType::float32 && p.type != PlyType::float64)) {
        throw ParseError("PLY property type mismatch: '" + p.name +
                         "' must be float or double, got " +
                         (p.is_list ? std::string("list") : type_name(p.type)));
      }
      if (p.type == PlyType::float64) lay.precision = ScalarType::float64;
    } else if (s != Slot::none) {
      if (p.is_list || p.type != PlyType::uint8) {
        throw ParseError("PLY property type mismatch: '" + p.name +
                         "' must be uchar, got " +
                         (p.is_list ? std::string("list") : type_name(p.type)));
      }
    }
    if (s != Slot::none && seen[static_cast<int>(s)]++) {
      throw ParseError("PLY vertex property '" + p.name + "' declared twice");
    }
    lay.slots.push_back(s);
  }
  if (!seen[1] || !seen[2] || !seen[3]) {
    throw ParseError("PLY vertex element lacks x, y and z properties");
  }
  const int colors = seen[4] + seen[5] + seen[6];
  if (colors != 0 && colors != 3) {
    throw ParseError("PLY vertex element declares an incomplete red/green/blue set");
  }
  lay.has_color = colors == 3;
  return lay;
}

struct VertexSink {
  std::vector<Vec3> points;
  std::vector<Color> colors;

  void put(Slot s, double v, Vec3& p, Color& c) const {
    switch (s) {
      case Slot::x: p.x() = v; break;
      case Slot::y: p.y() = v; break;
      case Slot::z: p.z() = v; break;
      case Slot::red: c[0] = static_cast<std::uint8_t>(v); break;
      case Slot::green: c[1] = static_cast<std::uint8_t>(v); break;
      case Slot::blue: c[2] = static_cast<std::uint8_t>(v); break;
      case Slot::none: break;
    }
  }
};

void read_binary(std::string_view bytes, const PlyHeader& h, const VertexLayout& lay,
                 VertexSink& sink) {
  std::size_t pos = h.body_offset;
  const std::size_t available = bytes.size() - h.body_offset;

  // Up-front size check when every element up to the vertices is fixed-size.
  bool fixed = true;
  std::uint64_t expected = 0;
  for (std::size_t e = 0; e <= lay.element_index && fixed; ++e) {
    const auto& el = h.elements[e];
    if (!el.fixed_size()) {
      fixed = false;
      break;
    }
    std::uint64_t stride = 0;
    for (const auto& p : el.properties) stride += type_size(p.type);
    if (stride != 0 && el.count > (std::numeric_limits<std::uint64_t>::max() - expected) / stride) {
      throw ParseError("PLY truncated body: element '" + el.name + "' size overflows");
    }
    expected += el.count * stride;
  }
  if (fixed && expected > available) {
    throw ParseError("PLY truncated body: expected " + std::to_string(expected) +
                     " bytes after header (byte offset " + std::to_string(h.body_offset) +
                     "), got " + std::to_string(available));
  }

  auto need = [&](std::size_t n) {
    if (bytes.size() - pos < n) {
      throw ParseError("PLY truncated body at byte offset " + std::to_string(pos) +
                       ": expected " + std::to_string(n) + " more bytes, got " +
                       std::to_string(bytes.size() - pos));
    }
  };

  for (std::size_t e = 0; e <= lay.element_index; ++e) {
    const auto& el = h.elements[e];
    const bool is_vertex = e == lay.element_index;
    if (is_vertex) {
      // Every vertex needs at least 12 bytes of coordinates.
      const std::size_t cap = std::min<std::uint64_t>(el.count, (bytes.size() - pos) / 12 + 1);
      sink.points.reserve(cap);
      if (lay.has_color) sink.colors.reserve(cap);
    }
    for (std::uint64_t i = 0; i < el.count; ++i) {
      Vec3 p = Vec3::Zero();
      Color c{0, 0, 0};
      for (std::size_t k = 0; k < el.properties.size(); ++k) {
        const auto& prop = el.properties[k];
        if (prop.is_list) {
          const std::size_t cs = type_size(prop.count_type);
          need(cs);
          const double n = decode_binary(prop.count_type, bytes.data() + pos);
          if (n < 0) {
            throw ParseError("PLY negative list count at byte offset " + std::to_string(pos));
          }
          pos += cs;
          const std::uint64_t len = static_cast<std::uint64_t>(n) * type_size(prop.type);
          need(len);
          pos += len;
          continue;
        }
        const std::size_t sz = type_size(prop.type);
        need(sz);
        if (is_vertex) sink.put(lay.slots[k], decode_binary(prop.type, bytes.data() + pos), p, c);
        pos += sz;
      }
      if (is_vertex) {
        sink.points.push_back(p);
        if (lay.has_color) sink.colors.push_back(c);
      }
    }
  }
}

void read_ascii(std::string_view bytes, const PlyHeader& h, const VertexLayout& lay,
                VertexSink& sink) {
  std::size_t pos = h.body_offset;
  std::size_t line_no = h.line_count;

  auto next_line = [&]() -> std::optional<std::string_view> {
    while (pos < bytes.size()) {
      std::size_t eol = bytes.find('\n', pos);
      if (eol == std::string_view::npos) eol = bytes.size();
      std::string_view line = bytes.substr(pos, eol - pos);
      pos = eol + 1;
      ++line_no;
      if (!split_ws(line).empty()) return line;
    }
    return std::nullopt;
  };

  for (std::size_t e = 0; e <= lay.element_index; ++e) {
    const auto& el = h.elements[e];
    const bool is_vertex = e == lay.element_index;
    for (std::uint64_t i = 0; i < el.count; ++i) {
      auto line = next_line();
      if (!line) {
        throw ParseError("PLY truncated body: expected " + std::to_string(el.count) + " '" +
                         el.name + "' lines, got " + std::to_string(i) + " (line " +
                         std::to_string(line_no) + ")");
      }
      const auto tok = split_ws(*line);
      std::size_t t = 0;
      Vec3 p = Vec3::Zero();
      Color c{0, 0, 0};
      auto bad = [&](const std::string& what) {
        throw ParseError("PLY line " + std::to_string(line_no) + ": " + what);
      };
      for (std::size_t k = 0; k < el.properties.size(); ++k) {
        const auto& prop = el.properties[k];
        if (t >= tok.size()) bad("too few values for element '" + el.name + "'");
        double v = 0;
        if (prop.is_list) {
          if (!decode_ascii(prop.count_type, tok[t], v) || v < 0) bad("bad list count");
          t += 1 + static_cast<std::size_t>(v);
          if (t > tok.size()) bad("too few list values");
          continue;
        }
        if (!decode_ascii(prop.type, tok[t], v)) {
          bad("cannot parse '" + std::string(tok[t]) + "' as " + type_name(prop.type));
        }
        if (lay.slots.size() > k && is_vertex && prop.type == PlyType::uint8 && (v < 0 || v > 255)) {
          bad("uchar value out of range");
        }
        if (is_vertex) sink.put(lay.slots[k], v, p, c);
        ++t;
      }
      if (t != tok.size()) bad("too many values for element '" + el.name + "'");
      if (is_vertex) {
        sink.points.push_back(p);
        if (lay.has_color) sink.colors.push_back(c);
      }
    }
  }
}

template <typename T>
void append_number(std::string& out, T v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

PointCloud parse_ply(std::string_view bytes) {
  const PlyHeader h = parse_header(bytes);
  const VertexLayout lay = vertex_layout(h);

  std::optional<GridSize> grid;
  if (h.grid_width || h.grid_height) {
    if (!h.grid_width || !h.grid_height) {
      throw ParseError("PLY header declares only one of width/height");
    }
    const auto& vertex = h.elements[lay.element_index];
    if (*h.grid_width * *h.grid_height != vertex.count) {
      throw ParseError("PLY grid " + std::to_string(*h.grid_width) + "x" +
                       std::to_string(*h.grid_height) + " does not match " +
                       std::to_string(vertex.count) + " vertices");
    }
    grid = GridSize{static_cast<std::size_t>(*h.grid_width),
                    static_cast<std::size_t>(*h.grid_height)};
  }

  VertexSink sink;
  if (h.format == PlyFormat::ascii) {
    read_ascii(bytes, h, lay, sink);
  } else {
    read_binary(bytes, h, lay, sink);
  }

  std::optional<std::vector<Color>> colors;
  if (lay.has_color) colors = std::move(sink.colors);
  return PointCloud(std::move(sink.points), std::move(colors), grid, lay.precision);
}

std::string write_ply(const PointCloud& cloud, PlyFormat format) {
  if (cloud.empty()) throw std::invalid_argument("write_ply: cloud is empty");
  const bool f32 = cloud.precision() == ScalarType::float32;
  const char* scalar = f32 ? "float" : "double";

  std::string out = "ply\n";
  out += format == PlyFormat::ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  if (cloud.grid()) {
    out += "obj_info width " + std::to_string(cloud.grid()->width) + "\n";
    out += "obj_info height " + std::to_string(cloud.grid()->height) + "\n";
  }
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  for (const char* axis : {"x", "y", "z"}) {
    out += std::string("property ") + scalar + " " + axis + "\n";
  }
  if (cloud.has_colors()) {
    out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  }
  out += "end_header\n";

  const auto& pts = cloud.points();
  const auto* colors = cloud.has_colors() ? &*cloud.colors() : nullptr;
  if (format == PlyFormat::ascii) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        if (a) out += ' ';
        if (f32) append_number(out, static_cast<float>(pts[i][a]));
        else append_number(out, pts[i][a]);
      }
      if (colors) {
        for (int k = 0; k < 3; ++k) {
          out += ' ';
          out += std::to_string((*colors)[i][k]);
        }
      }
      out += '\n';
    }
  } else {
    out.reserve(out.size() + pts.size() * (f32 ? 12 : 24) + (colors ? pts.size() * 3 : 0));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        if (f32) store_le(out, static_cast<float>(pts[i][a]));
        else store_le(out, pts[i][a]);
      }
      if (colors) {
        for (int k = 0; k < 3; ++k) out += static_cast<char>((*colors)[i][k]);
      }
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

PointCloud read_ply(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return parse_ply(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Masks

LeafMask::LeafMask(std::size_t width, std::size_t height, std::vector<Pixel> pixels,
                   std::string leaf_id)
    : width_(width), height_(height), pixels_(std::move(pixels)), leaf_id_(std::move(leaf_id)) {
  if (pixels_.empty()) throw EmptyMaskError("mask '" + leaf_id_ + "' has no leaf pixels");
  for (const auto& px : pixels_) {
    if (px.row >= height_ || px.col >= width_) {
      throw std::invalid_argument("mask '" + leaf_id_ + "': pixel (" + std::to_string(px.row) +
                                  ", " + std::to_string(px.col) + ") outside " +
                                  std::to_string(width_) + "x" + std::to_string(height_));
    }
  }
  std::sort(pixels_.begin(), pixels_.end());
  pixels_.erase(std::unique(pixels_.begin(), pixels_.end()), pixels_.end());
}

namespace {

// Reads the whitespace/comment separated header fields of a PGM.
struct PgmCursor {
  std::string_view bytes;
  std::size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      const char ch = bytes[pos];
      if (ch == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::uint64_t integer(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos;
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), v);
    if (ec != std::errc()) {
      throw ParseError("PGM byte offset " + std::to_string(start) + ": expected " + what);
    }
    pos = static_cast<std::size_t>(ptr - bytes.data());
    return v;
  }
};

}  // namespace

LeafMask parse_mask(std::string_view bytes, std::string leaf_id) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw ParseError("PGM byte offset 0: expected magic 'P2' or 'P5'");
  }
  const bool binary = bytes[1] == '5';
  PgmCursor cur{bytes, 2};
  if (cur.pos < bytes.size() && bytes[cur.pos] != ' ' && bytes[cur.pos] != '\t' &&
      bytes[cur.pos] != '\r' && bytes[cur.pos] != '\n' && bytes[cur.pos] != '#') {
    throw ParseError("PGM byte offset 2: expected whitespace after magic");
  }
  const std::uint64_t width = cur.integer("width");
  const std::uint64_t height = cur.integer("height");
  const std::uint64_t maxval = cur.integer("maxval");
  if (width == 0 || height == 0) throw ParseError("PGM has zero width or height");
  if (maxval == 0 || maxval > 255) {
    throw ParseError("PGM maxval " + std::to_string(maxval) + " outside 1..255");
  }
  if (width > (std::uint64_t{1} << 31) || height > (std::uint64_t{1} << 31)) {
    throw ParseError("PGM dimensions too large");
  }
  const std::uint64_t count = width * height;

  std::vector<Pixel> pixels;
  if (binary) {
    if (cur.pos >= bytes.size()) {
      throw ParseError("PGM truncated: no data after header");
    }
    ++cur.pos;  // single whitespace byte before the raster
    const std::size_t available = bytes.size() - cur.pos;
    if (available < count) {
      throw ParseError("PGM truncated raster at byte offset " + std::to_string(cur.pos) +
                       ": expected " + std::to_string(count) + " bytes, got " +
                       std::to_string(available));
    }
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto v = static_cast<unsigned char>(bytes[cur.pos + i]);
      if (v > maxval) {
        throw ParseError("PGM byte offset " + std::to_string(cur.pos + i) +
                         ": value exceeds maxval");
      }
      if (v > 0) pixels.push_back({static_cast<std::size_t>(i / width), static_cast<std::size_t>(i % width)});
    }
  } else {
    for (std::uint64_t i = 0; i < count; ++i) {
      cur.skip_space_and_comments();
      if (cur.pos >= bytes.size()) {
        throw ParseError("PGM truncated raster: expected " + std::to_string(count) +
                         " values, got " + std::to_string(i));
      }
      const std::uint64_t v = cur.integer("pixel value");
      if (v > maxval) {
        throw ParseError("PGM byte offset " + std::to_string(cur.pos) + ": value exceeds maxval");
      }
      if (v > 0) pixels.push_back({static_cast<std::size_t>(i / width), static_cast<std::size_t>(i % width)});
    }
  }
  return LeafMask(width, height, std::move(pixels), std::move(leaf_id));
}

std::string write_mask_pgm(const LeafMask& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " +
                    std::to_string(mask.height()) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + mask.width() * mask.height(), '\0');
  for (const auto& px : mask.pixels()) {
    out[header + px.row * mask.width() + px.col] = static_cast<char>(255);
  }
  return out;
}

std::string write_mask_pgm_ascii(const LeafMask& mask) {
  std::vector<unsigned char> raster(mask.width() * mask.height(), 0);
  for (const auto& px : mask.pixels()) raster[px.row * mask.width() + px.col] = 1;
  std::string out = "P2\n" + std::to_string(mask.width()) + " " +
                    std::to_string(mask.height()) + "\n1\n";
  for (std::size_t r = 0; r < mask.height(); ++r) {
    for (std::size_t c = 0; c < mask.width(); ++c) {
      if (c) out += ' ';
      out += raster[r * mask.width() + c] ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

PointCloud extract_leaf_points(const PointCloud& cloud, const LeafMask& mask) {
  if (!cloud.grid()) {
    throw GridError("cloud has no organized grid; cannot map mask '" + mask.leaf_id() + "'");
  }
  const GridSize g = *cloud.grid();
  if (g.width != mask.width() || g.height != mask.height()) {
    throw GridError("mask '" + mask.leaf_id() + "' is " + std::to_string(mask.width()) + "x" +
                    std::to_string(mask.height()) + " but cloud grid is " +
                    std::to_string(g.width) + "x" + std::to_string(g.height));
  }
  std::vector<Vec3> pts;
  std::vector<Color> cols;
  pts.reserve(mask.pixels().size());
  for (const auto& px : mask.pixels()) {
    const std::size_t idx = px.row * g.width + px.col;
    if (!cloud.is_valid(idx)) continue;
    pts.push_back(cloud[idx]);
    if (cloud.has_colors()) cols.push_back((*cloud.colors())[idx]);
  }
  if (pts.size() < 3) {
    throw InsufficientPointsError("mask '" + mask.leaf_id() + "' covers " +
                                  std::to_string(pts.size()) +
                                  " valid points; at least 3 are required");
  }
  std::optional<std::vector<Color>> colors;
  if (cloud.has_colors()) colors = std::move(cols);
  return PointCloud(std::move(pts), std::move(colors), std::nullopt, cloud.precision());
}

}  // namespace leafmetric::io
