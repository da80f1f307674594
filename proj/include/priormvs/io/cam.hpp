#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "priormvs/error.hpp"
#include "priormvs/geometry.hpp"
#include "priormvs/io/text.hpp"

namespace priormvs::io {

/// Depth count assumed when a cam file gives only depth_min and depth_interval.
inline constexpr int kDefaultDepthNum = 192;

/// Rotations further than this from orthonormal are rejected; closer ones are
/// snapped to the nearest rotation (cam files usually carry ~6 digits).
inline constexpr double kRotationRepairTolerance = 1e-3;

namespace detail {

inline Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace detail

/// Parses an MVSNet-style cam file:
///
///   extrinsic
///   4 rows x 4 numbers (world-to-camera)
///
///   intrinsic
///   3 rows x 3 numbers
///
///   depth_min depth_interval [depth_num [depth_max]]
///
/// Without depth_max it is depth_min + depth_interval * (depth_num - 1), and
/// depth_num defaults to 192. Blank lines are optional.
inline CameraView parse_cam(std::string_view text, ImageSize size = {}) {
  const auto lines = tokenized_lines(text);
  std::size_t at = 0;
  const auto next = [&](const char* what) -> const TextLine& {
    if (at >= lines.size())
      throw ParseError(std::string("unexpected end of input, expected ") + what,
                       lines.empty() ? 1 : lines.back().number + 1);
    return lines[at++];
  };
  const auto keyword = [&](const char* word) {
    const TextLine& line = next(word);
    if (line.tokens.size() != 1 || line.tokens[0] != word)
      throw ParseError(std::string("expected '") + word + "'", line.number);
  };
  const auto row = [&](std::size_t count, const char* what) -> const TextLine& {
    const TextLine& line = next(what);
    if (line.tokens.size() != count)
      throw ParseError(std::string("expected ") + std::to_string(count) + " numbers in " + what +
                           " row, found " + std::to_string(line.tokens.size()),
                       line.number);
    return line;
  };

  keyword("extrinsic");
  Eigen::Matrix4d extrinsics;
  for (int r = 0; r < 4; ++r) {
    const TextLine& line = row(4, "extrinsic");
    for (int c = 0; c < 4; ++c) extrinsics(r, c) = require_double(line.tokens[c], line.number);
  }
  const std::size_t extrinsic_line = lines[0].number;

  keyword("intrinsic");
  const std::size_t intrinsic_line = lines[at - 1].number;
  Eigen::Matrix3d intrinsics;
  for (int r = 0; r < 3; ++r) {
    const TextLine& line = row(3, "intrinsic");
    for (int c = 0; c < 3; ++c) intrinsics(r, c) = require_double(line.tokens[c], line.number);
  }

  const TextLine& depth_line = next("depth range line");
  const std::size_t n = depth_line.tokens.size();
  if (n < 2 || n > 4)
    throw ParseError("expected 2 to 4 numbers in depth range line, found " + std::to_string(n),
                     depth_line.number);
  const double depth_min = require_double(depth_line.tokens[0], depth_line.number);
  const double interval = require_double(depth_line.tokens[1], depth_line.number);
  if (!(depth_min > 0.0)) throw ParseError("depth_min must be positive", depth_line.number);
  double depth_max = 0.0;
  if (n == 4) {
    depth_max = require_double(depth_line.tokens[3], depth_line.number);
  } else {
    double depth_num = kDefaultDepthNum;
    if (n == 3) depth_num = require_double(depth_line.tokens[2], depth_line.number);
    depth_max = depth_min + interval * (depth_num - 1.0);
  }
  if (!(depth_max > depth_min))
    throw ParseError("depth_max must exceed depth_min", depth_line.number);
  if (at != lines.size())
    throw ParseError("unexpected content after depth range line", lines[at].number);

  const Eigen::Matrix3d r = extrinsics.topLeftCorner<3, 3>();
  if (!(r.transpose() * r).isIdentity(CameraView::kRotationTolerance) || r.determinant() <= 0.0) {
    if (!(r.transpose() * r).isIdentity(kRotationRepairTolerance) || r.determinant() <= 0.0)
      throw ParseError("extrinsic rotation is not orthonormal", extrinsic_line);
    extrinsics.topLeftCorner<3, 3>() = detail::nearest_rotation(r);
  }
  if (extrinsics(3, 0) != 0.0 || extrinsics(3, 1) != 0.0 || extrinsics(3, 2) != 0.0 ||
      extrinsics(3, 3) != 1.0)
    throw ParseError("extrinsic last row must be 0 0 0 1", extrinsic_line);

  try {
    return CameraView::create(intrinsics, extrinsics, depth_min, depth_max, size);
  } catch (const ArgumentError& e) {
    throw ParseError(e.what(), intrinsic_line);
  }
}

/// Writes a cam file that parses back to the same camera bit for bit.
inline std::string write_cam(const CameraView& cam) {
  std::string out = "extrinsic\n";
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      out += format_double(cam.extrinsics()(r, c));
      out += c == 3 ? '\n' : ' ';
    }
  }
  out += "\nintrinsic\n";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out += format_double(cam.intrinsics()(r, c));
      out += c == 2 ? '\n' : ' ';
    }
  }
  const double interval = (cam.depth_max() - cam.depth_min()) / (kDefaultDepthNum - 1);
  out += '\n' + format_double(cam.depth_min()) + ' ' + format_double(interval) + ' ' +
         std::to_string(kDefaultDepthNum) + ' ' + format_double(cam.depth_max()) + '\n';
  return out;
}

}  // namespace priormvs::io
