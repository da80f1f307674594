#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "priormvs/correction.hpp"
#include "priormvs/error.hpp"
#include "priormvs/geometry.hpp"
#include "priormvs/prior.hpp"
#include "priormvs/raster.hpp"

namespace priormvs {

/// Settings of the coarse-to-fine plane sweep. Index 0 is the coarsest scale.
struct CascadeConfig {
  std::vector<int> hypotheses_per_scale{48, 32, 8};
  /// Hypothesis spacing in units of the base interval, which is chosen so the
  /// coarsest scale spans the full depth range.
  std::vector<double> interval_ratio_per_scale{4.0, 2.0, 1.0};
  int window_radius = 1;
  /// Sources entering each matching cost, those agreeing best with the
  /// reference; 0 uses every source.
  int best_views = 3;
  /// Applies prior-guided correction after the scale; ignored without a prior.
  std::vector<bool> correction_enabled_per_scale{true, true, false};
  /// Softmin temperature on per-pixel min-max normalized costs.
  double temperature = 0.01;
  FitOptions fit;

  std::size_t num_scales() const noexcept { return hypotheses_per_scale.size(); }

  void validate() const {
    const std::size_t s = num_scales();
    if (s == 0) throw ArgumentError("cascade needs at least one scale");
    if (interval_ratio_per_scale.size() != s || correction_enabled_per_scale.size() != s)
      throw ArgumentError("cascade per-scale lists must have equal length");
    for (int h : hypotheses_per_scale)
      if (h < 2) throw ArgumentError("each scale needs at least 2 hypotheses");
    for (double r : interval_ratio_per_scale)
      if (!(r > 0.0)) throw ArgumentError("interval ratios must be positive");
    if (best_views < 0) throw ArgumentError("best_views must be non-negative");
    if (window_radius < 0) throw ArgumentError("window radius must be non-negative");
    if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  }

  /// Spacing unit shared by all scales.
  double base_interval(double depth_min, double depth_max) const {
    return (depth_max - depth_min) / (hypotheses_per_scale.front() * interval_ratio_per_scale.front());
  }
};

/// Per-pixel sorted depth candidates, H x W x D.
class HypothesisVolume {
 public:
  HypothesisVolume() = default;
  HypothesisVolume(ImageSize size, int count)
      : size_(size), count_(count),
        depths_(static_cast<std::size_t>(size.width) * size.height * count, 0.f) {
    if (count < 1) throw ArgumentError("hypothesis volume needs at least one depth per pixel");
  }

  /// Same candidates at every pixel.
  static HypothesisVolume uniform(ImageSize size, std::span<const double> depths) {
    HypothesisVolume v(size, static_cast<int>(depths.size()));
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x)
        for (int i = 0; i < v.count_; ++i) v.at(x, y, i) = static_cast<float>(depths[i]);
    return v;
  }

  ImageSize size() const noexcept { return size_; }
  int count() const noexcept { return count_; }
  float& at(int x, int y, int i) { return depths_[offset(x, y) + i]; }
  float at(int x, int y, int i) const { return depths_[offset(x, y) + i]; }
  std::span<const float> pixel(int x, int y) const {
    return {depths_.data() + offset(x, y), static_cast<std::size_t>(count_)};
  }

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * size_.width + x) * count_;
  }

  ImageSize size_{};
  int count_ = 0;
  std::vector<float> depths_;
};

/// Matching costs aligned with a HypothesisVolume; +inf marks unusable entries.
class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(ImageSize size, int count)
      : size_(size), count_(count),
        costs_(static_cast<std::size_t>(size.width) * size.height * count,
               std::numeric_limits<float>::infinity()) {}

  ImageSize size() const noexcept { return size_; }
  int count() const noexcept { return count_; }
  float& at(int x, int y, int i) { return costs_[offset(x, y) + i]; }
  float at(int x, int y, int i) const { return costs_[offset(x, y) + i]; }
  std::span<const float> pixel(int x, int y) const {
    return {costs_.data() + offset(x, y), static_cast<std::size_t>(count_)};
  }

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * size_.width + x) * count_;
  }

  ImageSize size_{};
  int count_ = 0;
  std::vector<float> costs_;
};

struct GrayView {
  GrayImage image;
  CameraView camera;
};

namespace detail {

// Patches with a standard deviation below this are treated as textureless.
inline constexpr double kFlatPatchStd = 1e-3;

// Zero-mean, unit-variance normalization in place; flat patches become all zero.
inline void normalize_patch(std::span<double> patch) {
  double mean = 0.0;
  for (double v : patch) mean += v;
  mean /= static_cast<double>(patch.size());
  double var = 0.0;
  for (double v : patch) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(patch.size()));
  if (sd < kFlatPatchStd) {
    std::fill(patch.begin(), patch.end(), 0.0);
    return;
  }
  for (double& v : patch) v = (v - mean) / sd;
}

}  // namespace detail

/// Across-view variance of normalized grayscale patches. Patch samples in the
/// reference are clamped to the image; a source whose warped patch leaves its
/// image is excluded for that hypothesis. With `best_views` > 0 only that many
/// sources, those closest to the reference patch, enter the variance.
inline CostVolume build_cost_volume(const GrayImage& ref_image, const CameraView& ref_cam,
                                    std::span<const GrayView> sources,
                                    const HypothesisVolume& hypotheses, int window_radius = 1,
                                    int best_views = 0) {
  if (sources.empty()) throw ArgumentError("cost volume needs at least one source view");
  if (best_views < 0) throw ArgumentError("best_views must be non-negative");
  if (hypotheses.size() != ref_image.size())
    throw ArgumentError("hypotheses must match the reference resolution");
  const ImageSize size = ref_image.size();
  const int count = hypotheses.count();
  const int side = 2 * window_radius + 1;
  const std::size_t window = static_cast<std::size_t>(side) * side;

  std::vector<PlaneSweepMapping> mappings;
  mappings.reserve(sources.size());
  for (const auto& s : sources) mappings.emplace_back(ref_cam, s.camera);

  CostVolume cost(size, count);
  std::vector<Pixel> positions(window);
  std::vector<double> ref_patch(window);
  std::vector<double> sum(window);
  std::vector<double> sum_sq(window);
  std::vector<double> src_patches(window * sources.size());
  std::vector<std::pair<double, std::size_t>> ranked(sources.size());

  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      std::size_t k = 0;
      for (int dy = -window_radius; dy <= window_radius; ++dy)
        for (int dx = -window_radius; dx <= window_radius; ++dx, ++k) {
          const int px = std::clamp(x + dx, 0, size.width - 1);
          const int py = std::clamp(y + dy, 0, size.height - 1);
          positions[k] = Pixel{double(px), double(py)};
          ref_patch[k] = ref_image(px, py);
        }
      detail::normalize_patch(ref_patch);

      for (int i = 0; i < count; ++i) {
        const double depth = hypotheses.at(x, y, i);
        std::size_t usable = 0;
        for (std::size_t s = 0; s < sources.size(); ++s) {
          bool ok = true;
          double* patch = src_patches.data() + usable * window;
          for (std::size_t j = 0; j < window && ok; ++j) {
            const auto q = mappings[s](positions[j], depth);
            std::optional<float> value;
            if (q) value = sample_bilinear(sources[s].image, q->u, q->v);
            if (value)
              patch[j] = *value;
            else
              ok = false;
          }
          if (!ok) continue;
          detail::normalize_patch({patch, window});
          double ssd = 0.0;
          for (std::size_t j = 0; j < window; ++j) ssd += (patch[j] - ref_patch[j]) * (patch[j] - ref_patch[j]);
          ranked[usable] = {ssd, usable};
          ++usable;
        }
        if (usable == 0) continue;
        std::size_t keep = usable;
        if (best_views > 0 && static_cast<std::size_t>(best_views) < usable) {
          keep = static_cast<std::size_t>(best_views);
          std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.begin() + usable);
        }
        for (std::size_t j = 0; j < window; ++j) {
          sum[j] = ref_patch[j];
          sum_sq[j] = ref_patch[j] * ref_patch[j];
        }
        for (std::size_t r = 0; r < keep; ++r) {
          const double* patch = src_patches.data() + ranked[r].second * window;
          for (std::size_t j = 0; j < window; ++j) {
            sum[j] += patch[j];
            sum_sq[j] += patch[j] * patch[j];
          }
        }
        const double views = static_cast<double>(keep + 1);
        double total = 0.0;
        for (std::size_t j = 0; j < window; ++j) {
          const double mean = sum[j] / views;
          total += std::max(0.0, sum_sq[j] / views - mean * mean);
        }
        cost.at(x, y, i) = static_cast<float>(total / static_cast<double>(window));
      }
    }
  }
  return cost;
}

struct DepthEstimate {
  DepthMap depth;
  ConfidenceMap confidence;
};

/// Soft-argmin regression. Confidence is the softmin mass of the four
/// hypotheses nearest the regressed depth.
inline DepthEstimate regress_depth(const CostVolume& cost, const HypothesisVolume& hypotheses,
                                   double temperature = 0.01) {
  if (cost.size() != hypotheses.size() || cost.count() != hypotheses.count())
    throw ArgumentError("cost and hypothesis volumes differ in shape");
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  const ImageSize size = cost.size();
  const int count = cost.count();
  DepthEstimate out{DepthMap(size), ConfidenceMap(size, 0.f)};
  std::vector<double> weights(count);
  std::vector<int> order(count);

  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const auto c = cost.pixel(x, y);
      const auto d = hypotheses.pixel(x, y);
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (float v : c)
        if (std::isfinite(v)) {
          lo = std::min(lo, double(v));
          hi = std::max(hi, double(v));
        }
      if (!std::isfinite(lo)) continue;
      const double range = hi - lo;
      double total = 0.0;
      for (int i = 0; i < count; ++i) {
        if (!std::isfinite(c[i])) {
          weights[i] = 0.0;
          continue;
        }
        const double normalized = range > 0.0 ? (c[i] - lo) / range : 0.0;
        weights[i] = std::exp(-normalized / temperature);
        total += weights[i];
      }
      double depth = 0.0;
      for (int i = 0; i < count; ++i) {
        weights[i] /= total;
        depth += weights[i] * d[i];
      }

      for (int i = 0; i < count; ++i) order[i] = i;
      const int nearest = std::min(count, 4);
      std::partial_sort(order.begin(), order.begin() + nearest, order.end(), [&](int a, int b) {
        const double da = std::abs(d[a] - depth);
        const double db = std::abs(d[b] - depth);
        return da < db || (da == db && a < b);
      });
      double mass = 0.0;
      for (int i = 0; i < nearest; ++i) mass += weights[order[i]];

      out.depth.set(x, y, static_cast<float>(depth));
      out.confidence(x, y) = static_cast<float>(std::clamp(mass, 0.0, 1.0));
    }
  }
  return out;
}

/// Depths uniformly spaced in inverse depth over [d_min, d_max], ascending.
inline std::vector<double> inverse_depth_sweep(double d_min, double d_max, int count) {
  if (count < 2) throw ArgumentError("a sweep needs at least 2 hypotheses");
  std::vector<double> depths(count);
  const double inv_near = 1.0 / d_min;
  const double inv_far = 1.0 / d_max;
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    depths[i] = 1.0 / (inv_near + t * (inv_far - inv_near));
  }
  depths.front() = d_min;
  depths.back() = d_max;
  return depths;
}

/// Window of `count` depths with spacing `interval` centered on `center`,
/// shifted (or compressed when wider than the range) to stay in range.
inline void fill_window(std::span<float> out, double center, double interval, double d_min,
                        double d_max) {
  const int count = static_cast<int>(out.size());
  center = std::clamp(center, d_min, d_max);
  double width = interval * (count - 1);
  if (width > d_max - d_min) {
    width = d_max - d_min;
    interval = width / (count - 1);
  }
  double lo = center - 0.5 * width;
  if (lo < d_min) lo = d_min;
  if (lo + width > d_max) lo = d_max - width;
  for (int i = 0; i < count; ++i)
    out[i] = static_cast<float>(std::clamp(lo + i * interval, d_min, d_max));
  // Guarantee the center is bracketed despite float rounding.
  if (center < out.front()) out.front() = static_cast<float>(center);
  if (center > out.back()) out.back() = static_cast<float>(center);
}

/// Smallest and largest valid depth in the 3x3 neighborhood of coarse pixel
/// (cx, cy); (inf, -inf) when none is valid.
inline std::pair<double, double> neighborhood_range(const DepthMap& coarse, int cx, int cy) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int y = cy - 1; y <= cy + 1; ++y)
    for (int x = cx - 1; x <= cx + 1; ++x) {
      if (!coarse.values.contains(x, y) || !coarse.is_valid(x, y)) continue;
      lo = std::min(lo, static_cast<double>(coarse.values(x, y)));
      hi = std::max(hi, static_cast<double>(coarse.values(x, y)));
    }
  return {lo, hi};
}

/// Hypotheses of fine pixel (x, y) given the previous scale: one window around
/// the parent estimate, or, where the coarse neighborhood spans more depth than
/// a window covers, half the hypotheses around its nearest and half around its
/// farthest depth.
inline void refine_window(std::span<float> out, const DepthMap& previous, int x, int y,
                          double interval, double d_min, double d_max) {
  const int count = static_cast<int>(out.size());
  const int px = std::min(x / 2, previous.width() - 1);
  const int py = std::min(y / 2, previous.height() - 1);
  const double center =
      previous.is_valid(px, py) ? previous.values(px, py) : 0.5 * (d_min + d_max);
  const auto [lo, hi] = neighborhood_range(previous, px, py);
  if (count >= 4 && hi - lo > interval * (count - 1)) {
    const int half = count / 2;
    fill_window(out.first(half), lo, interval, d_min, d_max);
    fill_window(out.subspan(half), hi, interval, d_min, d_max);
    std::sort(out.begin(), out.end());
  } else {
    fill_window(out, center, interval, d_min, d_max);
  }
}

struct ScaleOutput {
  DepthMap depth;
  ConfidenceMap confidence;
  /// Present when prior-guided correction ran at this scale.
  std::optional<CorrectionResult> correction;
  CameraView camera;
  HypothesisVolume hypotheses;

  /// Depth handed to the next scale.
  const DepthMap& propagated() const { return correction ? correction->depth : depth; }
};

struct ColorView {
  ColorImage image;
  CameraView camera;
};

/// Test and inspection seam invoked after each scale's regression, before correction.
using ScaleHook = std::function<void(std::size_t scale, DepthMap&, ConfidenceMap&)>;

/// Coarse-to-fine inference. Scale 0 sweeps the full range at 1/2^(S-1)
/// resolution; each finer scale sweeps a window around the previous estimate.
inline std::vector<ScaleOutput> cascade_infer(const ColorView& reference,
                                              std::span<const ColorView> sources,
                                              const CascadeConfig& cfg,
                                              const std::optional<PriorMap>& prior = std::nullopt,
                                              double tau = 0.5, const ScaleHook& hook = {}) {
  cfg.validate();
  if (sources.empty()) throw ArgumentError("cascade needs at least one source view");
  const std::size_t scales = cfg.num_scales();

  // Pyramids, finest first.
  std::vector<GrayImage> ref_pyramid{to_gray(reference.image)};
  std::vector<std::vector<GrayImage>> src_pyramids;
  for (const auto& s : sources) src_pyramids.push_back({to_gray(s.image)});
  for (std::size_t level = 1; level < scales; ++level) {
    ref_pyramid.push_back(downsample2(ref_pyramid.back()));
    for (auto& p : src_pyramids) p.push_back(downsample2(p.back()));
  }
  const CameraView ref_full = reference.camera.with_size(reference.image.size());
  const double d_min = ref_full.depth_min();
  const double d_max = ref_full.depth_max();
  const double base = cfg.base_interval(d_min, d_max);

  std::vector<ScaleOutput> outputs;
  for (std::size_t k = 0; k < scales; ++k) {
    const std::size_t level = scales - 1 - k;
    const int factor = 1 << level;
    const GrayImage& ref_gray = ref_pyramid[level];
    const CameraView ref_cam = ref_full.downscaled(factor);
    std::vector<GrayView> views;
    for (std::size_t s = 0; s < sources.size(); ++s)
      views.push_back({src_pyramids[s][level],
                       sources[s].camera.with_size(sources[s].image.size()).downscaled(factor)});

    const int count = cfg.hypotheses_per_scale[k];
    HypothesisVolume hyps;
    if (k == 0) {
      hyps = HypothesisVolume::uniform(ref_gray.size(), inverse_depth_sweep(d_min, d_max, count));
    } else {
      const DepthMap& previous = outputs.back().propagated();
      const double interval = cfg.interval_ratio_per_scale[k] * base;
      hyps = HypothesisVolume(ref_gray.size(), count);
      std::vector<float> window(count);
      for (int y = 0; y < ref_gray.height(); ++y)
        for (int x = 0; x < ref_gray.width(); ++x) {
          refine_window(window, previous, x, y, interval, d_min, d_max);
          for (int i = 0; i < count; ++i) hyps.at(x, y, i) = window[i];
        }
    }

    const CostVolume cost = build_cost_volume(ref_gray, ref_cam, views, hyps, cfg.window_radius, cfg.best_views);
    DepthEstimate estimate = regress_depth(cost, hyps, cfg.temperature);
    if (hook) hook(k, estimate.depth, estimate.confidence);

    ScaleOutput out{std::move(estimate.depth), std::move(estimate.confidence), std::nullopt,
                    ref_cam, std::move(hyps)};
    if (prior && cfg.correction_enabled_per_scale[k]) {
      FitOptions fit = cfg.fit;
      fit.seed = cfg.fit.seed + k;
      out.correction = correct_depth(out.depth, out.confidence, prior->resampled(out.depth.size()),
                                     tau, fit);
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

}  // namespace priormvs
