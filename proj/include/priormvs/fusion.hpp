#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "priormvs/error.hpp"
#include "priormvs/geometry.hpp"
#include "priormvs/raster.hpp"

namespace priormvs {

struct FusionConfig {
  double conf_threshold = 0.5;
  double reproj_px_threshold = 1.0;
  double relative_depth_threshold = 0.01;
  /// Views agreeing on a pixel, the pixel's own view included.
  int min_consistent_views = 3;

  void validate() const {
    if (!(conf_threshold > 0.0) || !(reproj_px_threshold > 0.0) || !(relative_depth_threshold > 0.0))
      throw ArgumentError("fusion thresholds must be positive");
    if (min_consistent_views < 1) throw ArgumentError("min_consistent_views must be >= 1");
  }
};

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  /// Empty, or one RGB triple per point.
  std::vector<std::array<std::uint8_t, 3>> colors;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool has_colors() const noexcept { return !colors.empty(); }

  void validate() const {
    if (!colors.empty() && colors.size() != points.size())
      throw ArgumentError("point cloud colors must be empty or match the point count");
    for (const auto& p : points)
      if (!p.allFinite()) throw ArgumentError("point cloud contains a non-finite coordinate");
  }
};

struct DepthView {
  const DepthMap& depth;
  const CameraView& camera;
};

struct ConsistencyResult {
  /// Number of agreeing views per pixel, counting the pixel's own view; 0 where invalid.
  Raster<int> counts;
  /// Mean over agreeing views of the depth transferred back into the reference.
  Raster<double> mean_depth;
};

/// Forward-backward reprojection check of every valid reference pixel against
/// each other view's depth map.
inline ConsistencyResult geometric_consistency(const DepthMap& ref_depth, const CameraView& ref_cam,
                                               std::span<const DepthView> others,
                                               const FusionConfig& cfg) {
  const ImageSize size = ref_depth.size();
  ConsistencyResult result{Raster<int>(size, 0), Raster<double>(size, 0.0)};
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      if (!ref_depth.is_valid(x, y)) continue;
      const double d = ref_depth.values(x, y);
      int count = 1;
      double sum = d;
      for (const auto& other : others) {
        const auto fwd = try_reproject(Pixel{double(x), double(y)}, d, ref_cam, other.camera);
        if (!fwd) continue;
        const auto other_depth = sample_depth(other.depth, fwd->pixel.u, fwd->pixel.v);
        if (!other_depth) continue;
        const auto back = try_reproject(fwd->pixel, *other_depth, other.camera, ref_cam);
        if (!back) continue;
        const double err = std::hypot(back->pixel.u - x, back->pixel.v - y);
        const double rel = std::abs(back->depth - d) / d;
        if (err < cfg.reproj_px_threshold && rel < cfg.relative_depth_threshold) {
          ++count;
          sum += back->depth;
        }
      }
      result.counts(x, y) = count;
      result.mean_depth(x, y) = sum / count;
    }
  return result;
}

struct FusionView {
  ColorImage image;
  DepthMap depth;
  ConfidenceMap confidence;
  CameraView camera;
};

struct FusionResult {
  PointCloud cloud;
  std::vector<std::size_t> points_per_view;
  std::vector<std::string> diagnostics;
};

inline std::array<std::uint8_t, 3> to_rgb8(const Rgb& c) {
  const auto q = [](float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 255.f)));
  };
  return {q(c.r), q(c.g), q(c.b)};
}

/// Keeps confident, geometrically consistent pixels of every view and places
/// each on its own viewing ray at the mean of the agreeing depths. Output
/// order is view id, then row-major pixel order.
inline FusionResult fuse(std::span<const FusionView> views, const FusionConfig& cfg) {
  cfg.validate();
  if (views.size() < static_cast<std::size_t>(cfg.min_consistent_views))
    throw ArgumentError("fusion needs at least min_consistent_views views");
  FusionResult result;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const FusionView& ref = views[i];
    if (ref.depth.size() != ref.confidence.size() || ref.depth.size() != ref.image.size())
      throw ArgumentError("view " + std::to_string(i) + ": image, depth and confidence differ in size");
    DepthMap filtered = ref.depth;
    for (int y = 0; y < filtered.height(); ++y)
      for (int x = 0; x < filtered.width(); ++x)
        if (!(ref.confidence(x, y) > cfg.conf_threshold)) filtered.invalidate(x, y);

    std::vector<DepthView> others;
    for (std::size_t j = 0; j < views.size(); ++j)
      if (j != i) others.push_back({views[j].depth, views[j].camera});
    const ConsistencyResult consistency =
        geometric_consistency(filtered, ref.camera, others, cfg);

    std::size_t kept = 0;
    for (int y = 0; y < filtered.height(); ++y)
      for (int x = 0; x < filtered.width(); ++x) {
        if (consistency.counts(x, y) < cfg.min_consistent_views) continue;
        result.cloud.points.push_back(
            unproject(Pixel{double(x), double(y)}, consistency.mean_depth(x, y), ref.camera));
        result.cloud.colors.push_back(to_rgb8(ref.image(x, y)));
        ++kept;
      }
    result.points_per_view.push_back(kept);
  }
  if (result.cloud.empty()) result.diagnostics.push_back("warning: fused point cloud is empty");
  return result;
}

}  // namespace priormvs
