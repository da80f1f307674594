#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "priormvs/error.hpp"
#include "priormvs/random.hpp"
#include "priormvs/raster.hpp"

namespace priormvs {

/// Normalized inverse depth from a monocular depth model; every value in [0,1].
class PriorMap {
 public:
  /// Values further than this outside [0,1] are rejected; closer ones are clamped.
  static constexpr float kRangeTolerance = 1e-6f;

  PriorMap() = default;

  static PriorMap from_raster(Raster<float> values) {
    for (float& v : values.data()) {
      if (!std::isfinite(v)) throw ArgumentError("prior contains a non-finite value");
      if (v < -kRangeTolerance || v > 1.f + kRangeTolerance)
        throw ArgumentError("prior value " + std::to_string(v) + " outside [0, 1]");
      v = std::clamp(v, 0.f, 1.f);
    }
    PriorMap prior;
    prior.values_ = std::move(values);
    return prior;
  }

  /// Bilinear resampling to `size`; a no-op when the size already matches.
  PriorMap resampled(ImageSize size) const {
    if (size == values_.size()) return *this;
    PriorMap out;
    out.values_ = resample_bilinear(values_, size);
    return out;
  }

  const Raster<float>& values() const noexcept { return values_; }
  ImageSize size() const noexcept { return values_.size(); }
  int width() const noexcept { return values_.width(); }
  int height() const noexcept { return values_.height(); }
  float operator()(int x, int y) const noexcept { return values_(x, y); }

 private:
  Raster<float> values_;
};

/// Random offsets applied when mapping a prior to metric depth:
/// eta1 shifts the near bound, eta2 the far bound, eta3 the result.
struct PerturbationTriple {
  double eta1 = 0.0;
  double eta2 = 0.0;
  double eta3 = 0.0;
};

inline void check_depth_range(double d_min, double d_max) {
  if (!std::isfinite(d_min) || !std::isfinite(d_max) || !(d_min > 0.0) || !(d_min < d_max))
    throw ArgumentError("depth range must satisfy 0 < d_min < d_max");
}

/// eta1 ~ U[0, R/2], eta2 ~ U[-R/2, 0], eta3 ~ U[-eta1, -eta2] with R = d_max - d_min.
inline PerturbationTriple sample_perturbations(double d_min, double d_max, RngStream& rng) {
  check_depth_range(d_min, d_max);
  const double half = 0.5 * (d_max - d_min);
  PerturbationTriple p;
  p.eta1 = rng.uniform(0.0, half);
  p.eta2 = rng.uniform(-half, 0.0);
  p.eta3 = rng.uniform(-p.eta1, -p.eta2);
  return p;
}

inline bool satisfies_invariants(const PerturbationTriple& p, double d_min, double d_max) {
  const double half = 0.5 * (d_max - d_min);
  return p.eta1 >= 0.0 && p.eta1 <= half && p.eta2 <= 0.0 && p.eta2 >= -half &&
         p.eta3 >= -p.eta1 && p.eta3 <= -p.eta2;
}

/// Maps one normalized inverse-depth value to metric depth:
/// 1 / (p * (1/(d_min + eta1) - 1/(d_max + eta2)) + 1/(d_max + eta2)) + eta3.
inline double denormalize_value(double prior, double d_min, double d_max,
                                const PerturbationTriple& pert) {
  const double inv_near = 1.0 / (d_min + pert.eta1);
  const double inv_far = 1.0 / (d_max + pert.eta2);
  return 1.0 / (prior * (inv_near - inv_far) + inv_far) + pert.eta3;
}

namespace detail {

// Nearest float to v that still lies in [lo, hi] (for lo, hi representable ranges).
inline float float_within(double v, double lo, double hi) {
  v = std::clamp(v, lo, hi);
  float f = static_cast<float>(v);
  if (f > hi) f = std::nextafter(f, -std::numeric_limits<float>::infinity());
  if (f < lo) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return f;
}

}  // namespace detail

/// Whole-map denormalization. Every output pixel is valid and, after rounding
/// to float, still within [d_min, d_max].
inline DepthMap denormalize(const PriorMap& prior, double d_min, double d_max,
                            const PerturbationTriple& pert) {
  check_depth_range(d_min, d_max);
  if (!satisfies_invariants(pert, d_min, d_max))
    throw ArgumentError("perturbation triple violates its interval constraints");
  DepthMap out(prior.size());
  for (int y = 0; y < prior.height(); ++y)
    for (int x = 0; x < prior.width(); ++x)
      out.set(x, y, detail::float_within(denormalize_value(prior(x, y), d_min, d_max, pert), d_min, d_max));
  return out;
}

}  // namespace priormvs
