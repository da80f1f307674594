#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "priormvs/error.hpp"
#include "priormvs/geometry.hpp"
#include "priormvs/prior.hpp"
#include "priormvs/random.hpp"
#include "priormvs/raster.hpp"

namespace priormvs {

/// Binarized confidence: 1 marks pixels whose prediction is trusted.
using ConfidenceMask = Mask;

/// Affine relation between prior and inverse depth: 1/depth = a * prior + b.
struct AffineMapping {
  double a = 0.0;
  double b = 0.0;
  std::size_t num_inliers = 0;
  double residual_rms = 0.0;

  /// Depth implied for a prior value, or nothing when a*prior + b <= 1e-12.
  std::optional<double> depth_for(double prior) const {
    const double inv = a * prior + b;
    if (!(inv > 1e-12)) return std::nullopt;
    return 1.0 / inv;
  }
};

struct FitOptions {
  std::size_t min_inliers = 100;
  /// Larger inlier sets are uniformly subsampled to this many pixels.
  std::size_t max_samples = 100000;
  std::uint64_t seed = 0;
  /// Minimum variance of the prior over the inliers.
  double min_prior_variance = 1e-12;
};

/// Strict threshold: a pixel is trusted only when confidence > tau.
inline ConfidenceMask confidence_mask(const ConfidenceMap& conf, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ArgumentError("tau must lie in [0, 1]");
  ConfidenceMask mask(conf.size(), 0);
  auto c = conf.data();
  auto m = mask.data();
  for (std::size_t i = 0; i < c.size(); ++i) m[i] = c[i] > tau ? 1 : 0;
  return mask;
}

/// Ordinary least squares of y = a * x + b. Sums run in index order so results
/// are reproducible bit for bit.
inline AffineMapping fit_affine(std::span<const double> x, std::span<const double> y,
                                std::size_t min_inliers = 2, double min_variance = 1e-12) {
  if (x.size() != y.size()) throw ArgumentError("fit inputs differ in length");
  const std::size_t n = x.size();
  if (n < std::max<std::size_t>(min_inliers, 2))
    throw DegenerateFit("only " + std::to_string(n) + " inliers, need " +
                        std::to_string(std::max<std::size_t>(min_inliers, 2)));
  double sum_x = 0.0;
  double sum_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_x += x[i];
    sum_y += y[i];
  }
  const double mean_x = sum_x / n;
  const double mean_y = sum_y / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mean_x;
    sxx += dx * dx;
    sxy += dx * (y[i] - mean_y);
  }
  if (!(sxx / n >= min_variance) || sxx == 0.0)
    throw DegenerateFit("prior has no spread over the inliers");
  AffineMapping m;
  m.a = sxy / sxx;
  m.b = mean_y - m.a * mean_x;
  m.num_inliers = n;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (m.a * x[i] + m.b);
    sq += r * r;
  }
  m.residual_rms = std::sqrt(sq / n);
  if (!std::isfinite(m.a) || !std::isfinite(m.b)) throw DegenerateFit("non-finite coefficients");
  return m;
}

/// Fits 1/depth against the prior over trusted pixels with a valid depth.
inline AffineMapping fit_mapping(const DepthMap& depth, const PriorMap& prior,
                                 const ConfidenceMask& mask, const FitOptions& options = {}) {
  if (depth.size() != prior.size() || depth.size() != mask.size())
    throw ArgumentError("depth, prior and mask must share a resolution");
  std::vector<std::size_t> inliers;
  const auto m = mask.data();
  const auto valid = depth.valid.data();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] && valid[i]) inliers.push_back(i);

  if (inliers.size() > options.max_samples) {
    // Partial Fisher-Yates, then restore index order for a fixed reduction order.
    RngStream rng(options.seed, 0x66697421);
    for (std::size_t i = 0; i < options.max_samples; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.index(inliers.size() - i));
      std::swap(inliers[i], inliers[j]);
    }
    inliers.resize(options.max_samples);
    std::sort(inliers.begin(), inliers.end());
  }

  std::vector<double> x;
  std::vector<double> y;
  x.reserve(inliers.size());
  y.reserve(inliers.size());
  const auto p = prior.values().data();
  const auto d = depth.values.data();
  for (std::size_t i : inliers) {
    x.push_back(p[i]);
    y.push_back(1.0 / static_cast<double>(d[i]));
  }
  return fit_affine(x, y, options.min_inliers, options.min_prior_variance);
}

/// Depth implied by the mapping on untrusted pixels. Trusted pixels are left
/// invalid in the output, as are pixels where a*prior + b <= 1e-12.
inline DepthMap refine_low_confidence(const PriorMap& prior, const ConfidenceMask& mask,
                                      const AffineMapping& mapping) {
  if (prior.size() != mask.size()) throw ArgumentError("prior and mask must share a resolution");
  DepthMap out(prior.size());
  for (int y = 0; y < prior.height(); ++y)
    for (int x = 0; x < prior.width(); ++x) {
      if (mask(x, y)) continue;
      if (auto d = mapping.depth_for(prior(x, y))) out.set(x, y, static_cast<float>(*d));
    }
  return out;
}

struct CorrectionResult {
  DepthMap depth;
  std::optional<AffineMapping> mapping;
  bool degenerate_fit = false;
  std::size_t refined_pixels = 0;
  std::string diagnostic;
};

/// Keeps trusted predictions and replaces the rest with the prior mapped through
/// the fitted relation. A degenerate fit returns the input unchanged and sets
/// `degenerate_fit`.
inline CorrectionResult correct_depth(const DepthMap& depth, const ConfidenceMap& conf,
                                      const PriorMap& prior, double tau,
                                      const FitOptions& options = {}) {
  if (depth.size() != conf.size()) throw ArgumentError("depth and confidence must share a resolution");
  const PriorMap aligned = prior.resampled(depth.size());
  const ConfidenceMask mask = confidence_mask(conf, tau);

  CorrectionResult result;
  try {
    result.mapping = fit_mapping(depth, aligned, mask, options);
  } catch (const DegenerateFit& e) {
    result.depth = depth;
    result.degenerate_fit = true;
    result.diagnostic = e.what();
    return result;
  }

  const DepthMap refined = refine_low_confidence(aligned, mask, *result.mapping);
  result.depth = depth;
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      if (mask(x, y)) continue;
      ++result.refined_pixels;
      if (refined.is_valid(x, y))
        result.depth.set(x, y, refined.values(x, y));
      else
        result.depth.invalidate(x, y);
    }
  return result;
}

struct SparsePoint {
  Pixel pixel;
  double depth = 0.0;
};

struct AlignmentResult {
  DepthMap depth;
  AffineMapping mapping;
};

/// Scale-shift alignment of the prior to sparse metric points in inverse-depth
/// space. Points outside the prior raster or with non-positive depth are ignored.
inline AlignmentResult align_prior_to_sparse(const PriorMap& prior,
                                             std::span<const SparsePoint> sparse) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& s : sparse) {
    if (!(s.depth > 0.0) || !std::isfinite(s.depth)) continue;
    auto p = sample_bilinear(prior.values(), s.pixel.u, s.pixel.v);
    if (!p) continue;
    x.push_back(*p);
    y.push_back(1.0 / s.depth);
  }
  AlignmentResult result;
  result.mapping = fit_affine(x, y, 2);
  result.depth = DepthMap(prior.size());
  for (int yy = 0; yy < prior.height(); ++yy)
    for (int xx = 0; xx < prior.width(); ++xx)
      if (auto d = result.mapping.depth_for(prior(xx, yy)))
        result.depth.set(xx, yy, static_cast<float>(*d));
  return result;
}

}  // namespace priormvs
