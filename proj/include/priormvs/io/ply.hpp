#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "priormvs/error.hpp"
#include "priormvs/fusion.hpp"
#include "priormvs/io/text.hpp"

namespace priormvs::io {

/// Binary little-endian PLY with float x, y, z and, when present, uchar colors.
inline std::string write_ply(const PointCloud& cloud) {
  cloud.validate();
  const bool color = cloud.has_colors();
  std::string out = "ply\nformat binary_little_endian 1.0\nelement vertex " +
                    std::to_string(cloud.size()) +
                    "\nproperty float x\nproperty float y\nproperty float z\n";
  if (color) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "end_header\n";
  const std::size_t stride = color ? 15 : 12;
  const std::size_t header = out.size();
  out.resize(header + stride * cloud.size());
  char* data = out.data() + header;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const float v = static_cast<float>(cloud.points[i][c]);
      std::memcpy(data, &v, 4);
      if constexpr (std::endian::native == std::endian::big) std::reverse(data, data + 4);
      data += 4;
    }
    if (color) {
      std::memcpy(data, cloud.colors[i].data(), 3);
      data += 3;
    }
  }
  return out;
}

namespace detail {

enum class PlyFormat { kAscii, kBinaryLittle, kBinaryBig };

struct PlyProperty {
  std::string name;
  int size = 0;  // bytes
  bool is_float = false;
  bool is_signed = false;
};

inline PlyProperty ply_type(std::string_view type, std::string_view name, std::size_t line) {
  PlyProperty p{std::string(name)};
  if (type == "char" || type == "int8") p = {p.name, 1, false, true};
  else if (type == "uchar" || type == "uint8") p = {p.name, 1, false, false};
  else if (type == "short" || type == "int16") p = {p.name, 2, false, true};
  else if (type == "ushort" || type == "uint16") p = {p.name, 2, false, false};
  else if (type == "int" || type == "int32") p = {p.name, 4, false, true};
  else if (type == "uint" || type == "uint32") p = {p.name, 4, false, false};
  else if (type == "float" || type == "float32") p = {p.name, 4, true, true};
  else if (type == "double" || type == "float64") p = {p.name, 8, true, true};
  else throw ParseError("unsupported PLY property type '" + std::string(type) + "'", line);
  return p;
}

inline double decode(const char* data, const PlyProperty& p, bool big_endian) {
  unsigned char b[8];
  std::memcpy(b, data, p.size);
  if (big_endian) std::reverse(b, b + p.size);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + p.size);
  if (p.is_float) {
    if (p.size == 4) {
      float f;
      std::memcpy(&f, b, 4);
      return f;
    }
    double d;
    std::memcpy(&d, b, 8);
    return d;
  }
  std::uint64_t u = 0;
  for (int i = p.size - 1; i >= 0; --i) u = (u << 8) | b[i];
  if (p.is_signed && (u >> (p.size * 8 - 1)) & 1u) {
    return static_cast<double>(static_cast<std::int64_t>(u) - (std::int64_t{1} << (p.size * 8)));
  }
  return static_cast<double>(u);
}

}  // namespace detail

/// Reads the vertex element of an ASCII or binary PLY: x, y, z and, when all
/// three are present, red, green, blue. Vertex must be the first element.
inline PointCloud read_ply(std::string_view bytes) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  const auto next_line = [&]() -> std::string_view {
    if (pos >= bytes.size()) throw ParseError("truncated PLY header", line_no + 1);
    const std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) throw ParseError("truncated PLY header", line_no + 1);
    std::string_view line = bytes.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    return line;
  };

  if (split_tokens(next_line()) != std::vector<std::string_view>{"ply"})
    throw ParseError("not a PLY file", 1);
  detail::PlyFormat format = detail::PlyFormat::kAscii;
  bool have_format = false;
  std::int64_t vertex_count = -1;
  bool in_vertex = false;
  bool vertex_done = false;
  std::vector<detail::PlyProperty> props;
  while (true) {
    const auto tokens = split_tokens(next_line());
    if (tokens.empty() || tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "format") {
      if (tokens.size() != 3) throw ParseError("malformed format line", line_no);
      if (tokens[1] == "ascii") format = detail::PlyFormat::kAscii;
      else if (tokens[1] == "binary_little_endian") format = detail::PlyFormat::kBinaryLittle;
      else if (tokens[1] == "binary_big_endian") format = detail::PlyFormat::kBinaryBig;
      else throw ParseError("unknown PLY format", line_no);
      have_format = true;
    } else if (tokens[0] == "element") {
      if (tokens.size() != 3) throw ParseError("malformed element line", line_no);
      if (in_vertex) vertex_done = true;
      in_vertex = false;
      if (tokens[1] == "vertex") {
        if (vertex_count >= 0) throw ParseError("duplicate vertex element", line_no);
        const auto n = parse_int(tokens[2]);
        if (!n || *n < 0) throw ParseError("invalid vertex count", line_no);
        vertex_count = *n;
        in_vertex = true;
      } else if (vertex_count < 0) {
        throw ParseError("vertex must be the first PLY element", line_no);
      }
    } else if (tokens[0] == "property") {
      if (in_vertex) {
        if (tokens.size() != 3) throw ParseError("list properties are not supported on vertices", line_no);
        props.push_back(detail::ply_type(tokens[1], tokens[2], line_no));
      }
    } else {
      throw ParseError("unknown PLY header keyword '" + std::string(tokens[0]) + "'", line_no);
    }
  }
  (void)vertex_done;
  if (!have_format) throw ParseError("missing PLY format line");
  if (vertex_count < 0) throw ParseError("missing vertex element");

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    const auto& n = props[i].name;
    if (n == "x") ix = int(i);
    else if (n == "y") iy = int(i);
    else if (n == "z") iz = int(i);
    else if (n == "red") ir = int(i);
    else if (n == "green") ig = int(i);
    else if (n == "blue") ib = int(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("PLY vertex lacks x, y or z");
  const bool color = ir >= 0 && ig >= 0 && ib >= 0;

  PointCloud cloud;
  std::vector<double> values(props.size());
  const auto store = [&]() {
    Eigen::Vector3d p(values[ix], values[iy], values[iz]);
    if (!p.allFinite()) throw ParseError("non-finite PLY coordinate");
    cloud.points.push_back(p);
    if (color) {
      const auto c = [](double v) {
        return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      };
      cloud.colors.push_back({c(values[ir]), c(values[ig]), c(values[ib])});
    }
  };

  if (format == detail::PlyFormat::kAscii) {
    if (static_cast<std::uint64_t>(vertex_count) > bytes.size() - pos)
      throw ParseError("truncated PLY payload");
    for (std::int64_t v = 0; v < vertex_count; ++v) {
      std::vector<std::string_view> tokens;
      while (tokens.empty()) {
        if (pos >= bytes.size()) throw ParseError("truncated PLY payload");
        std::size_t end = bytes.find('\n', pos);
        if (end == std::string_view::npos) end = bytes.size();
        tokens = split_tokens(bytes.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
      }
      if (tokens.size() != props.size()) throw ParseError("wrong number of vertex values", line_no);
      for (std::size_t i = 0; i < props.size(); ++i) values[i] = require_double(tokens[i], line_no);
      store();
    }
    return cloud;
  }

  std::size_t stride = 0;
  for (const auto& p : props) stride += p.size;
  if (stride == 0 || (bytes.size() - pos) / stride < static_cast<std::uint64_t>(vertex_count))
    throw ParseError("truncated PLY payload");
  const bool big = format == detail::PlyFormat::kBinaryBig;
  cloud.points.reserve(static_cast<std::size_t>(vertex_count));
  for (std::int64_t v = 0; v < vertex_count; ++v) {
    const char* data = bytes.data() + pos;
    for (std::size_t i = 0; i < props.size(); ++i) {
      values[i] = detail::decode(data, props[i], big);
      data += props[i].size;
    }
    pos += stride;
    store();
  }
  return cloud;
}

}  // namespace priormvs::io
