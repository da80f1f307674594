#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "priormvs/error.hpp"
#include "priormvs/fusion.hpp"
#include "priormvs/kdtree.hpp"
#include "priormvs/raster.hpp"

namespace priormvs {

struct CloudMetrics {
  double accuracy = 0.0;
  double completeness = 0.0;
  double overall = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  double threshold = 0.0;
  double max_dist = 0.0;
};

/// Distance from every point of `from` to its nearest neighbor in `to`.
inline std::vector<double> nearest_distances(const PointCloud& from, const PointCloud& to) {
  const KdTree tree(to.points);
  std::vector<double> out;
  out.reserve(from.size());
  for (const auto& p : from.points) out.push_back(std::sqrt(tree.nearest(p).squared_distance));
  return out;
}

namespace detail {

// Mean of distances <= max_dist and fraction of all distances < threshold,
// both accumulated in index order.
inline std::pair<double, double> directed_stats(const std::vector<double>& distances,
                                                double max_dist, double threshold,
                                                const char* direction) {
  double sum = 0.0;
  std::size_t kept = 0;
  std::size_t within = 0;
  for (double d : distances) {
    if (d <= max_dist) {
      sum += d;
      ++kept;
    }
    if (d < threshold) ++within;
  }
  if (kept == 0)
    throw EmptyInput(std::string("no point within max_dist for ") + direction);
  return {sum / static_cast<double>(kept),
          static_cast<double>(within) / static_cast<double>(distances.size())};
}

}  // namespace detail

/// Accuracy (reconstruction to ground truth), completeness (the reverse), their
/// mean, and precision/recall/F-score at `fscore_threshold`. Distances above
/// `max_dist` are left out of the means but count as misses for precision/recall.
inline CloudMetrics cloud_distance_metrics(const PointCloud& reconstructed,
                                           const PointCloud& ground_truth, double max_dist = 20.0,
                                           double fscore_threshold = 1.0) {
  if (reconstructed.empty() || ground_truth.empty())
    throw EmptyInput("cloud metrics need two non-empty clouds");
  if (!(max_dist > 0.0) || !(fscore_threshold > 0.0))
    throw ArgumentError("max_dist and fscore_threshold must be positive");
  CloudMetrics m;
  m.threshold = fscore_threshold;
  m.max_dist = max_dist;
  std::tie(m.accuracy, m.precision) = detail::directed_stats(
      nearest_distances(reconstructed, ground_truth), max_dist, fscore_threshold, "accuracy");
  std::tie(m.completeness, m.recall) = detail::directed_stats(
      nearest_distances(ground_truth, reconstructed), max_dist, fscore_threshold, "completeness");
  m.overall = (m.accuracy + m.completeness) / 2.0;
  const double pr = m.precision + m.recall;
  m.fscore = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  return m;
}

/// Fraction of pixels valid in both maps whose absolute error is below `threshold`.
inline double depth_error_ratio(const DepthMap& pred, const DepthMap& gt, double threshold) {
  if (pred.size() != gt.size()) throw ArgumentError("depth maps differ in resolution");
  std::size_t total = 0;
  std::size_t good = 0;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      if (!gt.is_valid(x, y) || !pred.is_valid(x, y)) continue;
      ++total;
      if (std::abs(static_cast<double>(pred.values(x, y)) - gt.values(x, y)) < threshold) ++good;
    }
  if (total == 0) throw EmptyInput("no pixel is valid in both depth maps");
  return static_cast<double>(good) / static_cast<double>(total);
}

/// Plain-text report, one `key=value` per line.
inline std::string to_key_value(const CloudMetrics& m) {
  std::ostringstream out;
  out.precision(17);
  out << "accuracy=" << m.accuracy << '\n'
      << "completeness=" << m.completeness << '\n'
      << "overall=" << m.overall << '\n'
      << "precision=" << m.precision << '\n'
      << "recall=" << m.recall << '\n'
      << "fscore=" << m.fscore << '\n'
      << "threshold=" << m.threshold << '\n'
      << "max_dist=" << m.max_dist << '\n';
  return out.str();
}

}  // namespace priormvs
