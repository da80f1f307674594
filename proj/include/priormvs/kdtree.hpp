#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace priormvs {

struct NearestNeighbor {
  std::size_t index = 0;
  double squared_distance = std::numeric_limits<double>::infinity();
};

/// Squared Euclidean distance with a fixed evaluation order, shared by the
/// tree and any brute-force reference so both agree bit for bit.
inline double squared_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Static 3D k-d tree for exact nearest-neighbor queries. Ties resolve to the
/// smallest point index.
class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 8;

  explicit KdTree(std::span<const Eigen::Vector3d> points)
      : points_(points.begin(), points.end()), order_(points.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) build(0, order_.size());
  }

  std::size_t size() const noexcept { return points_.size(); }

  NearestNeighbor nearest(const Eigen::Vector3d& query) const {
    NearestNeighbor best;
    if (!nodes_.empty()) search(0, query, best);
    return best;
  }

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Eigen::Vector3d lo = points_[order_[begin]];
    Eigen::Vector3d hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // coincident points stay in one leaf

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       const double ca = points_[a][axis];
                       const double cb = points_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void consider(std::size_t index, const Eigen::Vector3d& query, NearestNeighbor& best) const {
    const double d2 = squared_distance(points_[index], query);
    if (d2 < best.squared_distance || (d2 == best.squared_distance && index < best.index)) {
      best.squared_distance = d2;
      best.index = index;
    }
  }

  void search(std::size_t node_id, const Eigen::Vector3d& query, NearestNeighbor& best) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) consider(order_[i], query, best);
      return;
    }
    // Left holds coordinates <= split, right holds coordinates >= split.
    const double diff = node.split - query[node.axis];
    const bool go_left = diff >= 0.0;
    search(go_left ? node.left : node.right, query, best);
    // Equality still descends so smaller-index ties are found.
    if (!(diff * diff > best.squared_distance)) search(go_left ? node.right : node.left, query, best);
  }

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace priormvs
