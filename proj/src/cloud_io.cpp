#include "cloud_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "binary_io.hpp"
#include "error.hpp"

namespace scoopflow {

namespace {

using detail::append_le;
using detail::read_le;

constexpr std::string_view kSfbMagic = "SFB1";

// ---------------------------------------------------------------- SFB

PointCloud parse_sfb(std::string_view bytes) {
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12) throw ParseError(bytes.size(), "SFB header truncated");
  if (bytes.substr(0, 4) != kSfbMagic) throw ParseError(0, "bad SFB magic");
  const auto n = read_le<std::uint32_t>(data + 4);
  const auto c = read_le<std::uint32_t>(data + 8);
  if (c != 3 && c != 6) throw ParseError(8, "SFB channel count must be 3 or 6, got " + std::to_string(c));
  if (n == 0) throw ParseError(4, "SFB point count is zero");
  const std::size_t payload = std::size_t{n} * c * 4;
  if (bytes.size() - 12 < payload) throw ParseError(bytes.size(), "SFB payload truncated");
  if (bytes.size() - 12 > payload) throw ParseError(12 + payload, "trailing bytes after SFB payload");

  std::vector<Vec3> pts(n);
  std::optional<FlowField> flow;
  if (c == 6) flow.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = 12 + (i * c + ch) * 4;
      const double v = read_le<float>(data + off);
      if (!std::isfinite(v)) throw ParseError(off, "non-finite value in SFB payload");
      if (ch < 3) pts[i][ch] = v;
      else (*flow)[i][ch - 3] = v;
    }
  }
  return PointCloud(std::move(pts), std::move(flow));
}

std::string serialize_sfb(const std::vector<Vec3>& pts, const FlowField* flow) {
  const std::uint32_t c = flow ? 6 : 3;
  std::string out(kSfbMagic);
  out.reserve(12 + pts.size() * c * 4);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(pts.size()));
  append_le<std::uint32_t>(out, c);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int d = 0; d < 3; ++d) append_le<float>(out, static_cast<float>(pts[i][d]));
    if (flow) {
      for (int d = 0; d < 3; ++d) append_le<float>(out, static_cast<float>((*flow)[i][d]));
    }
  }
  return out;
}

// ---------------------------------------------------------------- PLY

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<Scalar> scalar_from_name(std::string_view name) {
  if (name == "char" || name == "int8") return Scalar::Int8;
  if (name == "uchar" || name == "uint8") return Scalar::UInt8;
  if (name == "short" || name == "int16") return Scalar::Int16;
  if (name == "ushort" || name == "uint16") return Scalar::UInt16;
  if (name == "int" || name == "int32") return Scalar::Int32;
  if (name == "uint" || name == "uint32") return Scalar::UInt32;
  if (name == "float" || name == "float32") return Scalar::Float32;
  if (name == "double" || name == "float64") return Scalar::Float64;
  return std::nullopt;
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::Int8: case Scalar::UInt8: return 1;
    case Scalar::Int16: case Scalar::UInt16: return 2;
    case Scalar::Int32: case Scalar::UInt32: case Scalar::Float32: return 4;
    case Scalar::Float64: return 8;
  }
  return 0;
}

double read_scalar(Scalar s, const unsigned char* p) {
  switch (s) {
    case Scalar::Int8: return static_cast<std::int8_t>(p[0]);
    case Scalar::UInt8: return p[0];
    case Scalar::Int16: return read_le<std::int16_t>(p);
    case Scalar::UInt16: return read_le<std::uint16_t>(p);
    case Scalar::Int32: return read_le<std::int32_t>(p);
    case Scalar::UInt32: return read_le<std::uint32_t>(p);
    case Scalar::Float32: return read_le<float>(p);
    case Scalar::Float64: return read_le<double>(p);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  Scalar type;
};

struct PlyHeader {
  bool ascii = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> props;
  std::size_t body_offset = 0;
};

// Slot of each needed channel in the vertex property list: x y z fx fy fz.
using ChannelSlots = std::array<std::optional<std::size_t>, 6>;

PlyHeader parse_ply_header(std::string_view bytes) {
  PlyHeader header;
  std::size_t pos = 0;
  bool have_format = false, in_vertex = false, seen_vertex = false;
  std::size_t line_no = 0;
  while (true) {
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) throw ParseError(pos, "PLY header not terminated by end_header");
    std::string_view line = bytes.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t line_start = pos;
    pos = eol + 1;

    std::istringstream ls{std::string(line)};
    std::string word;
    ls >> word;
    if (line_no++ == 0) {
      if (word != "ply") throw ParseError(0, "missing 'ply' magic");
      continue;
    }
    if (word.empty() || word == "comment" || word == "obj_info") continue;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") header.ascii = true;
      else if (fmt == "binary_little_endian") header.ascii = false;
      else throw ParseError(line_start, "unsupported PLY format '" + fmt + "'");
      have_format = true;
    } else if (word == "element") {
      std::string name;
      long long count = -1;
      ls >> name >> count;
      if (!ls || count < 0) throw ParseError(line_start, "malformed element line");
      if (name == "vertex") {
        if (seen_vertex) throw ParseError(line_start, "duplicate vertex element");
        header.vertex_count = static_cast<std::size_t>(count);
        in_vertex = seen_vertex = true;
      } else {
        // Elements after the vertex block are never read; ones before it
        // would need their layout skipped.
        if (!seen_vertex && count > 0) {
          throw ParseError(line_start, "element '" + name + "' precedes vertex element");
        }
        in_vertex = false;
      }
    } else if (word == "property") {
      if (!in_vertex) continue;
      std::string type, name;
      ls >> type;
      if (type == "list") throw ParseError(line_start, "list properties are not supported on vertices");
      ls >> name;
      const auto scalar = scalar_from_name(type);
      if (!scalar || name.empty()) throw ParseError(line_start, "malformed property line");
      header.props.push_back({name, *scalar});
    } else {
      throw ParseError(line_start, "unexpected header keyword '" + word + "'");
    }
  }
  if (!have_format) throw ParseError(0, "PLY header lacks a format line");
  if (!seen_vertex || header.vertex_count == 0) throw ParseError(0, "PLY has no vertices");
  header.body_offset = pos;
  return header;
}

ChannelSlots find_channels(const PlyHeader& header) {
  static constexpr std::array<std::string_view, 6> names = {"x", "y", "z", "flow_x", "flow_y", "flow_z"};
  ChannelSlots slots;
  for (std::size_t p = 0; p < header.props.size(); ++p) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (header.props[p].name == names[c]) slots[c] = p;
    }
  }
  for (int c = 0; c < 3; ++c) {
    if (!slots[c]) throw ParseError(0, "PLY vertex lacks property '" + std::string(names[c]) + "'");
  }
  const bool any_flow = slots[3] || slots[4] || slots[5];
  const bool all_flow = slots[3] && slots[4] && slots[5];
  if (any_flow && !all_flow) throw ParseError(0, "PLY has a partial flow_x/flow_y/flow_z set");
  return slots;
}

PointCloud assemble(const PlyHeader& header, const ChannelSlots& slots,
                    const std::vector<double>& values) {
  const std::size_t n = header.vertex_count, np = header.props.size();
  const bool with_flow = slots[3].has_value();
  std::vector<Vec3> pts(n);
  std::optional<FlowField> flow;
  if (with_flow) flow.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) {
      pts[i][d] = values[i * np + *slots[d]];
      if (with_flow) (*flow)[i][d] = values[i * np + *slots[3 + d]];
    }
  }
  return PointCloud(std::move(pts), std::move(flow));
}

PointCloud parse_ply(std::string_view bytes) {
  const PlyHeader header = parse_ply_header(bytes);
  const ChannelSlots slots = find_channels(header);
  const std::size_t n = header.vertex_count, np = header.props.size();
  std::vector<double> values(n * np);

  if (header.ascii) {
    std::size_t pos = header.body_offset;
    const auto is_space = [](char ch) { return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r'; };
    for (std::size_t k = 0; k < values.size(); ++k) {
      while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
      if (pos >= bytes.size()) throw ParseError(pos, "PLY vertex data truncated");
      std::size_t end = pos;
      while (end < bytes.size() && !is_space(bytes[end])) ++end;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(bytes.data() + pos, bytes.data() + end, v);
      if (ec != std::errc() || ptr != bytes.data() + end) {
        throw ParseError(pos, "bad numeric token '" + std::string(bytes.substr(pos, end - pos)) + "'");
      }
      if (!std::isfinite(v)) throw ParseError(pos, "non-finite value in PLY vertex data");
      values[k] = v;
      pos = end;
    }
  } else {
    std::size_t stride = 0;
    for (const auto& p : header.props) stride += scalar_size(p.type);
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    std::size_t pos = header.body_offset;
    if (bytes.size() < pos + stride * n) throw ParseError(bytes.size(), "PLY vertex data truncated");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = 0; p < np; ++p) {
        const double v = read_scalar(header.props[p].type, data + pos);
        if (!std::isfinite(v)) throw ParseError(pos, "non-finite value in PLY vertex data");
        values[i * np + p] = v;
        pos += scalar_size(header.props[p].type);
      }
    }
  }
  return assemble(header, slots, values);
}

std::string serialize_ply(const PointCloud& cloud, bool ascii) {
  const bool with_flow = cloud.has_flow();
  // ASCII output uses doubles so text round-trips exactly.
  const char* type = ascii ? "double" : "float";
  std::string out = "ply\nformat ";
  out += ascii ? "ascii 1.0\n" : "binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  for (const char* name : {"x", "y", "z"}) out += std::string("property ") + type + " " + name + "\n";
  if (with_flow) {
    for (const char* name : {"flow_x", "flow_y", "flow_z"}) out += std::string("property ") + type + " " + name + "\n";
  }
  out += "end_header\n";

  char buf[32];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::array<double, 6> row{};
    for (int d = 0; d < 3; ++d) row[d] = cloud[i][d];
    if (with_flow) {
      for (int d = 0; d < 3; ++d) row[3 + d] = cloud.flow()[i][d];
    }
    const int cols = with_flow ? 6 : 3;
    for (int c = 0; c < cols; ++c) {
      if (ascii) {
        std::snprintf(buf, sizeof buf, "%.17g", row[c]);
        out += buf;
        out += c + 1 == cols ? '\n' : ' ';
      } else {
        append_le<float>(out, static_cast<float>(row[c]));
      }
    }
  }
  return out;
}

}  // namespace

CloudFormat format_from_path(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "sfb" || ext == "SFB") return CloudFormat::Sfb;
  if (ext == "ply" || ext == "PLY") return CloudFormat::PlyBinary;
  return CloudFormat::Auto;
}

PointCloud parse_cloud(std::string_view bytes, CloudFormat format) {
  switch (format) {
    case CloudFormat::Sfb:
      return parse_sfb(bytes);
    case CloudFormat::PlyAscii:
    case CloudFormat::PlyBinary:
      return parse_ply(bytes);
    case CloudFormat::Auto:
      if (bytes.substr(0, 4) == kSfbMagic) return parse_sfb(bytes);
      if (bytes.substr(0, 3) == "ply") return parse_ply(bytes);
      throw ParseError(0, "unrecognized cloud file magic");
  }
  throw ParseError(0, "unknown cloud format");
}

PointCloud load_cloud(const std::string& path, CloudFormat format) {
  const std::string bytes = detail::read_file(path);
  try {
    return parse_cloud(bytes, format);
  } catch (const ParseError& e) {
    throw ParseError(e.offset(), path + ": " + e.detail());
  }
}

std::string serialize_cloud(const PointCloud& cloud, CloudFormat format) {
  switch (format) {
    case CloudFormat::Sfb:
    case CloudFormat::Auto:
      return serialize_sfb(cloud.points(), cloud.has_flow() ? &cloud.flow() : nullptr);
    case CloudFormat::PlyAscii:
      return serialize_ply(cloud, true);
    case CloudFormat::PlyBinary:
      return serialize_ply(cloud, false);
  }
  return {};
}

void save_cloud(const std::string& path, const PointCloud& cloud, CloudFormat format) {
  if (format == CloudFormat::Auto) format = format_from_path(path);
  detail::write_file_atomic(path, serialize_cloud(cloud, format));
}

FlowField load_flow(const std::string& path) {
  const PointCloud raw = load_cloud(path, CloudFormat::Sfb);
  if (raw.has_flow()) fail(ErrorCode::ShapeMismatch, path + ": flow file must have 3 channels");
  return raw.points();
}

void save_flow(const std::string& path, const FlowField& flow) {
  if (flow.empty()) fail(ErrorCode::InvalidInput, "refusing to write an empty flow file");
  detail::write_file_atomic(path, serialize_sfb(flow, nullptr));
}

}  // namespace scoopflow
