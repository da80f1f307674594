#include <random>

#include <gtest/gtest.h>

#include "priormvs/metrics.hpp"

namespace priormvs {
namespace {

PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  return c;
}

// Quadratic-time reference written independently of the tree.
std::vector<double> brute_distances(const PointCloud& from, const PointCloud& to) {
  std::vector<double> out;
  for (const auto& p : from.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to.points) best = std::min(best, squared_distance(p, q));
    out.push_back(std::sqrt(best));
  }
  return out;
}

CloudMetrics brute_metrics(const PointCloud& rec, const PointCloud& gt, double max_dist, double thr) {
  const auto stats = [&](const std::vector<double>& d) {
    double sum = 0.0;
    std::size_t kept = 0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] <= max_dist) {
        sum += d[i];
        ++kept;
      }
      if (d[i] < thr) ++hit;
    }
    return std::pair{sum / double(kept), double(hit) / double(d.size())};
  };
  CloudMetrics m;
  std::tie(m.accuracy, m.precision) = stats(brute_distances(rec, gt));
  std::tie(m.completeness, m.recall) = stats(brute_distances(gt, rec));
  m.overall = (m.accuracy + m.completeness) / 2.0;
  m.fscore = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

TEST(CloudMetrics, HandExamples) {
  PointCloud a;
  a.points = {{0, 0, 0}, {1, 0, 0}};
  PointCloud b;
  b.points = {{0, 0, 0.5}};
  const auto m = cloud_distance_metrics(a, b, 20.0, 1.0);
  EXPECT_DOUBLE_EQ(m.accuracy, (0.5 + std::sqrt(1.25)) / 2.0);
  EXPECT_DOUBLE_EQ(m.completeness, 0.5);
  EXPECT_DOUBLE_EQ(m.overall, (m.accuracy + 0.5) / 2.0);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.fscore, 2.0 / 3.0);
}

TEST(CloudMetrics, IdenticalCloudsAreZero) {
  std::mt19937_64 rng(1);
  const PointCloud c = random_cloud(rng, 500, 10.0);
  const auto m = cloud_distance_metrics(c, c);
  EXPECT_EQ(m.accuracy, 0.0);
  EXPECT_EQ(m.completeness, 0.0);
  EXPECT_EQ(m.overall, 0.0);
  EXPECT_EQ(m.fscore, 1.0);
}

TEST(CloudMetrics, MaxDistExcludesOutliersFromMeansOnly) {
  PointCloud rec;
  rec.points = {{0, 0, 0}, {100, 0, 0}};
  PointCloud gt;
  gt.points = {{0, 0, 0.25}};
  const auto m = cloud_distance_metrics(rec, gt, 20.0, 1.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.25);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_THROW(cloud_distance_metrics(rec, gt, 0.1, 1.0), EmptyInput);
}

TEST(CloudMetrics, Errors) {
  PointCloud a;
  a.points = {{0, 0, 0}};
  EXPECT_THROW(cloud_distance_metrics(a, PointCloud{}), EmptyInput);
  EXPECT_THROW(cloud_distance_metrics(PointCloud{}, a), EmptyInput);
  EXPECT_THROW(cloud_distance_metrics(a, a, 0.0, 1.0), ArgumentError);
  EXPECT_THROW(cloud_distance_metrics(a, a, 1.0, -1.0), ArgumentError);
}

TEST(CloudMetrics, MatchBruteForceBitExactly) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(1, 1000);
  for (int t = 0; t < 100; ++t) {
    const PointCloud rec = random_cloud(rng, size(rng), 5.0);
    const PointCloud gt = random_cloud(rng, size(rng), 5.0);
    const auto m = cloud_distance_metrics(rec, gt, 3.0, 0.5);
    const auto o = brute_metrics(rec, gt, 3.0, 0.5);
    ASSERT_EQ(m.accuracy, o.accuracy) << t;
    ASSERT_EQ(m.completeness, o.completeness) << t;
    ASSERT_EQ(m.overall, o.overall) << t;
    ASSERT_EQ(m.precision, o.precision) << t;
    ASSERT_EQ(m.recall, o.recall) << t;
    ASSERT_EQ(m.fscore, o.fscore) << t;
  }
}

TEST(CloudMetrics, SwappingArgumentsSwapsDirections) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const PointCloud a = random_cloud(rng, 300, 4.0);
    const PointCloud b = random_cloud(rng, 200, 4.0);
    const auto ab = cloud_distance_metrics(a, b, 20.0, 0.7);
    const auto ba = cloud_distance_metrics(b, a, 20.0, 0.7);
    ASSERT_EQ(ab.accuracy, ba.completeness);
    ASSERT_EQ(ab.completeness, ba.accuracy);
    ASSERT_EQ(ab.precision, ba.recall);
    ASSERT_EQ(ab.recall, ba.precision);
    ASSERT_EQ(ab.overall, ba.overall);
    ASSERT_EQ(ab.fscore, ba.fscore);
  }
}

TEST(KdTree, MatchesBruteForceIncludingTies) {
  std::mt19937_64 rng(99);
  for (std::size_t n : {1u, 2u, 9u, 100u, 1000u, 10000u}) {
    // Integer grid coordinates produce many exact ties.
    std::uniform_int_distribution<int> g(-6, 6);
    std::vector<Eigen::Vector3d> pts;
    for (std::size_t i = 0; i < n; ++i) pts.emplace_back(g(rng), g(rng), g(rng));
    const KdTree tree(pts);
    ASSERT_EQ(tree.size(), n);
    std::uniform_real_distribution<double> u(-7.0, 7.0);
    for (int q = 0; q < 300; ++q) {
      const Eigen::Vector3d p = q % 2 ? Eigen::Vector3d(u(rng), u(rng), u(rng))
                                      : Eigen::Vector3d(g(rng) + 0.5, g(rng), g(rng));
      NearestNeighbor best;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = squared_distance(p, pts[i]);
        if (d < best.squared_distance) best = {i, d};
      }
      const auto got = tree.nearest(p);
      ASSERT_EQ(got.index, best.index) << n << " " << q;
      ASSERT_EQ(got.squared_distance, best.squared_distance);
    }
  }
}

TEST(KdTree, EmptyTree) {
  const KdTree tree(std::vector<Eigen::Vector3d>{});
  EXPECT_TRUE(std::isinf(tree.nearest(Eigen::Vector3d::Zero()).squared_distance));
}

TEST(DepthErrorRatio, Examples) {
  DepthMap gt({4, 1});
  DepthMap pred({4, 1});
  for (int x = 0; x < 4; ++x) gt.set(x, 0, 5.f);
  pred.set(0, 0, 5.f);
  pred.set(1, 0, 5.5f);
  pred.set(2, 0, 7.f);
  // pixel 3 invalid in the prediction and ignored
  EXPECT_DOUBLE_EQ(depth_error_ratio(pred, gt, 1.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(depth_error_ratio(pred, gt, 0.5), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(depth_error_ratio(pred, gt, 3.0), 1.0);
  EXPECT_THROW(depth_error_ratio(DepthMap({4, 1}), gt, 1.0), EmptyInput);
  EXPECT_THROW(depth_error_ratio(DepthMap({2, 2}), gt, 1.0), ArgumentError);
}

TEST(Report, KeyValueLines) {
  CloudMetrics m;
  m.accuracy = 0.25;
  m.threshold = 1.0;
  const std::string s = to_key_value(m);
  EXPECT_NE(s.find("accuracy=0.25\n"), std::string::npos);
  EXPECT_NE(s.find("threshold=1\n"), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 8);
}

}  // namespace
}  // namespace priormvs
