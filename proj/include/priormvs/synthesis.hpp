#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "priormvs/error.hpp"
#include "priormvs/geometry.hpp"
#include "priormvs/prior.hpp"
#include "priormvs/random.hpp"
#include "priormvs/raster.hpp"
#include "priormvs/scene.hpp"

namespace priormvs {

struct NeighborRanking {
  std::vector<std::size_t> ids;
  /// True when the ranking came from camera-center distances instead of a pair list.
  bool from_distance = false;
};

/// Neighbors of `ref` best first: the pair list when it has an entry for the
/// view, otherwise ascending camera-center distance (ties by id).
inline NeighborRanking ranked_neighbors(std::size_t ref, const Scene& scene) {
  if (ref >= scene.size()) throw ArgumentError("reference view id out of range");
  NeighborRanking ranking;
  if (scene.pairs && ref < scene.pairs->size() && !(*scene.pairs)[ref].empty()) {
    for (const auto& n : (*scene.pairs)[ref])
      if (n.id != ref && n.id < scene.size()) ranking.ids.push_back(n.id);
    return ranking;
  }
  ranking.from_distance = true;
  const Eigen::Vector3d c = scene.cameras[ref].center();
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < scene.size(); ++i)
    if (i != ref) dist.emplace_back((scene.cameras[i].center() - c).norm(), i);
  std::sort(dist.begin(), dist.end());
  for (const auto& [d, i] : dist) ranking.ids.push_back(i);
  return ranking;
}

/// Draws `n` distinct views uniformly without replacement from the top
/// `pool` neighbors of `ref`.
inline std::vector<std::size_t> sample_view_poses(std::size_t ref, const Scene& scene, std::size_t n,
                                                  RngStream& rng, std::size_t pool = 10) {
  NeighborRanking ranking = ranked_neighbors(ref, scene);
  std::vector<std::size_t> candidates = std::move(ranking.ids);
  if (candidates.size() > pool) candidates.resize(pool);
  if (candidates.size() < n)
    throw ArgumentError("view " + std::to_string(ref) + " has " +
                        std::to_string(candidates.size()) + " candidate neighbors, need " +
                        std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(n);
  return candidates;
}

/// Per-pixel state of a forward-warped raster.
enum class SplatState : std::uint8_t { kEmpty = 0, kSplatted = 1, kFilled = 2 };

struct ForwardWarp {
  ColorImage image;
  /// SplatState values.
  Mask mask;
  /// Destination-frame depth of the winning splat (0 where empty).
  Raster<float> depth;

  bool valid(int x, int y) const { return mask(x, y) == static_cast<std::uint8_t>(SplatState::kSplatted); }
  bool usable(int x, int y) const { return mask(x, y) != static_cast<std::uint8_t>(SplatState::kEmpty); }
};

inline constexpr int kHoleFillRadius = 2;

/// Splats every pixel with a valid depth into `dst_cam` at the nearest pixel,
/// keeping the closest surface, then fills holes within kHoleFillRadius pixels
/// from the nearest splatted neighbor.
inline ForwardWarp forward_warp(const ColorImage& image, const DepthMap& depth,
                                const CameraView& src_cam, const CameraView& dst_cam) {
  if (image.size() != depth.size()) throw ArgumentError("image and depth differ in resolution");
  const ImageSize size = dst_cam.size().width > 0 ? dst_cam.size() : image.size();
  ForwardWarp out{ColorImage(size), Mask(size, 0), Raster<float>(size, 0.f)};
  Raster<double> zbuf(size, std::numeric_limits<double>::infinity());

  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      if (!depth.is_valid(x, y)) continue;
      const auto p = try_project(unproject(Pixel{double(x), double(y)}, depth.values(x, y), src_cam),
                                 dst_cam);
      if (!p) continue;
      const double u = std::floor(p->pixel.u + 0.5);
      const double v = std::floor(p->pixel.v + 0.5);
      if (!(u >= 0 && v >= 0 && u < size.width && v < size.height)) continue;
      const int qx = static_cast<int>(u);
      const int qy = static_cast<int>(v);
      if (p->depth < zbuf(qx, qy)) {
        zbuf(qx, qy) = p->depth;
        out.image(qx, qy) = image(x, y);
        out.depth(qx, qy) = static_cast<float>(p->depth);
        out.mask(qx, qy) = static_cast<std::uint8_t>(SplatState::kSplatted);
      }
    }

  const Mask splatted = out.mask;
  constexpr int r = kHoleFillRadius;
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      if (splatted(x, y)) continue;
      int best = std::numeric_limits<int>::max();
      int bx = -1;
      int by = -1;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int d2 = dx * dx + dy * dy;
          if (d2 > r * r || d2 >= best) continue;
          const int nx = x + dx;
          const int ny = y + dy;
          if (!splatted.contains(nx, ny) || !splatted(nx, ny)) continue;
          best = d2;
          bx = nx;
          by = ny;
        }
      if (bx < 0) continue;
      out.image(x, y) = out.image(bx, by);
      out.depth(x, y) = out.depth(bx, by);
      out.mask(x, y) = static_cast<std::uint8_t>(SplatState::kFilled);
    }
  return out;
}

struct TrainingSample {
  ColorImage reference_image;
  CameraView reference_view;
  std::vector<ForwardWarp> source_images;
  std::vector<std::size_t> source_ids;
  std::vector<CameraView> source_views;
  /// Denormalized prior; supervision target and the exact correspondence field.
  DepthMap supervision_depth;
  PerturbationTriple perturbation;
};

/// Pseudo-labelled sample: perturbed denormalization of the prior, neighbor
/// pose sampling, and forward warping of the reference into each pose.
inline TrainingSample build_training_sample(const ColorImage& ref_image, const PriorMap& prior,
                                            std::size_t ref_index, const Scene& scene,
                                            std::size_t n, RngStream& rng, std::size_t pool = 10) {
  if (n < 1) throw ArgumentError("a training sample needs at least one source view");
  if (ref_index >= scene.size()) throw ArgumentError("reference view id out of range");
  TrainingSample sample;
  sample.reference_image = ref_image;
  sample.reference_view = scene.cameras[ref_index].with_size(ref_image.size());
  const double d_min = sample.reference_view.depth_min();
  const double d_max = sample.reference_view.depth_max();

  sample.perturbation = sample_perturbations(d_min, d_max, rng);
  sample.supervision_depth =
      denormalize(prior.resampled(ref_image.size()), d_min, d_max, sample.perturbation);
  sample.source_ids = sample_view_poses(ref_index, scene, n, rng, pool);
  for (std::size_t id : sample.source_ids) {
    const CameraView& cam = scene.cameras[id];
    const CameraView dst = cam.size().width > 0 ? cam : cam.with_size(ref_image.size());
    sample.source_views.push_back(dst);
    sample.source_images.push_back(
        forward_warp(ref_image, sample.supervision_depth, sample.reference_view, dst));
  }
  return sample;
}

struct LossConfig {
  /// Weight per scale, coarsest first.
  std::vector<double> scale_weights{1.0, 1.0, 1.0};

  std::size_t num_scales() const noexcept { return scale_weights.size(); }

  void validate() const {
    if (scale_weights.empty()) throw ArgumentError("loss needs at least one scale");
    bool any = false;
    for (double w : scale_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("loss weights must be finite and >= 0");
      any = any || w > 0.0;
    }
    if (!any) throw ArgumentError("loss weights must not all be zero");
  }
};

struct LossBreakdown {
  double total = 0.0;
  std::vector<double> per_scale;
};

/// Weighted sum over scales of the mean absolute depth error against the
/// nearest-neighbor-decimated target. Prediction k (0 = coarsest) has the
/// target resolution divided by 2^(S-1-k).
inline LossBreakdown multi_scale_loss(std::span<const DepthMap> predictions, const DepthMap& target,
                                      const LossConfig& cfg) {
  cfg.validate();
  const std::size_t scales = cfg.num_scales();
  if (predictions.size() != scales) throw ArgumentError("one prediction per loss scale expected");
  LossBreakdown loss;
  for (std::size_t k = 0; k < scales; ++k) {
    const int factor = 1 << (scales - 1 - k);
    const DepthMap scaled = decimate(target, factor);
    const DepthMap& pred = predictions[k];
    if (pred.size() != scaled.size())
      throw ArgumentError("prediction " + std::to_string(k) + " has the wrong resolution");
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < scaled.height(); ++y)
      for (int x = 0; x < scaled.width(); ++x) {
        if (!scaled.is_valid(x, y) || !pred.is_valid(x, y)) continue;
        sum += std::abs(static_cast<double>(pred.values(x, y)) - scaled.values(x, y));
        ++n;
      }
    if (n == 0) throw EmptyInput("no valid target pixels at loss scale " + std::to_string(k));
    loss.per_scale.push_back(sum / static_cast<double>(n));
    loss.total += cfg.scale_weights[k] * loss.per_scale.back();
  }
  return loss;
}

}  // namespace priormvs
