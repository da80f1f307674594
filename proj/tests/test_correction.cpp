#include <random>

#include <gtest/gtest.h>

#include "priormvs/correction.hpp"

namespace priormvs {
namespace {

TEST(ConfidenceMask, StrictThreshold) {
  ConfidenceMap conf(3, 1);
  conf(0, 0) = 0.6f;
  conf(1, 0) = 0.5f;
  conf(2, 0) = 0.f;
  const auto m = confidence_mask(conf, 0.5);
  EXPECT_EQ(m(0, 0), 1);
  EXPECT_EQ(m(1, 0), 0);
  EXPECT_EQ(m(2, 0), 0);
  const auto zero = confidence_mask(conf, 0.0);
  EXPECT_EQ(zero(0, 0), 1);
  EXPECT_EQ(zero(1, 0), 1);
  EXPECT_EQ(zero(2, 0), 0);
  EXPECT_THROW(confidence_mask(conf, 1.5), ArgumentError);
}

TEST(FitAffine, TwoPointIdentity) {
  const std::vector<double> prior{0.5, 0.25};
  const std::vector<double> inv{1.0 / 2.0, 1.0 / 4.0};
  const auto m = fit_affine(prior, inv);
  EXPECT_NEAR(m.a, 1.0, 1e-12);
  EXPECT_NEAR(m.b, 0.0, 1e-12);
  EXPECT_EQ(m.num_inliers, 2u);
  EXPECT_NEAR(m.residual_rms, 0.0, 1e-15);
}

TEST(FitAffine, ExactRelationRecovered) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(500);
  std::vector<double> y(500);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = u(rng);
    y[i] = 2.0 * x[i] + 0.1;
  }
  const auto m = fit_affine(x, y);
  EXPECT_NEAR(m.a, 2.0, 1e-9);
  EXPECT_NEAR(m.b, 0.1, 1e-9);
}

TEST(FitAffine, MatchesGridRefinementOracle) {
  // Brute-force check of OLS optimality: no nearby (a, b) has a smaller SSE.
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 0.05);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(12);
    std::vector<double> y(12);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = u(rng);
      y[i] = 0.7 * x[i] + 0.3 + g(rng);
    }
    const auto m = fit_affine(x, y);
    const auto sse = [&](double a, double b) {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (y[i] - a * x[i] - b) * (y[i] - a * x[i] - b);
      return s;
    };
    const double best = sse(m.a, m.b);
    for (double step : {1e-2, 1e-4, 1e-6})
      for (int da = -2; da <= 2; ++da)
        for (int db = -2; db <= 2; ++db)
          EXPECT_GE(sse(m.a + da * step, m.b + db * step), best * (1 - 1e-12));
  }
}

TEST(FitAffine, DegenerateInputs) {
  const std::vector<double> one{0.5};
  EXPECT_THROW(fit_affine(one, one), DegenerateFit);
  const std::vector<double> flat{0.3, 0.3, 0.3};
  const std::vector<double> y{1.0, 2.0, 3.0};
  EXPECT_THROW(fit_affine(flat, y), DegenerateFit);
}

TEST(Refine, HandEvaluated) {
  Raster<float> r(3, 1);
  r(0, 0) = 0.2f;
  r(1, 0) = 0.45f;
  r(2, 0) = 0.2f;
  const PriorMap prior = PriorMap::from_raster(r);
  const ConfidenceMask mask(3, 1, 0);
  const auto d1 = refine_low_confidence(prior, mask, {1.0, 0.0});
  EXPECT_NEAR(d1.values(0, 0), 5.0, 1e-6);
  const auto d2 = refine_low_confidence(prior, mask, {2.0, 0.1});
  EXPECT_NEAR(d2.values(1, 0), 1.0, 1e-6);
  const auto d3 = refine_low_confidence(prior, mask, {-1.0, 0.05});
  EXPECT_FALSE(d3.is_valid(0, 0));
  ConfidenceMask trusted(3, 1, 1);
  EXPECT_EQ(refine_low_confidence(prior, trusted, {1.0, 0.0}).valid_count(), 0u);
}

struct Constructed {
  DepthMap depth;
  ConfidenceMap conf;
  PriorMap prior;
};

// Left half trusted and exactly affine in inverse depth; right half untrusted
// and corrupted.
Constructed exact_affine_map(double a, double b, std::uint64_t seed) {
  const ImageSize size{64, 48};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.05f, 1.f);
  Raster<float> p(size);
  Constructed c{DepthMap(size), ConfidenceMap(size, 0.9f), {}};
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      p(x, y) = u(rng);
      if (x < size.width / 2) {
        c.depth.set(x, y, static_cast<float>(1.0 / (a * p(x, y) + b)));
      } else {
        c.depth.set(x, y, 100.f * u(rng));
        c.conf(x, y) = 0.1f;
      }
    }
  c.prior = PriorMap::from_raster(p);
  return c;
}

TEST(CorrectDepth, ExactRecovery) {
  const auto c = exact_affine_map(2.0, 0.1, 3);
  const auto r = correct_depth(c.depth, c.conf, c.prior, 0.5);
  ASSERT_FALSE(r.degenerate_fit);
  EXPECT_EQ(r.refined_pixels, 32u * 48u);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      if (x < 32) {
        ASSERT_EQ(r.depth.values(x, y), c.depth.values(x, y));
      } else {
        const double expected = 1.0 / (2.0 * c.prior(x, y) + 0.1);
        ASSERT_LT(std::abs(r.depth.values(x, y) - expected) / expected, 1e-6);
      }
    }
}

TEST(CorrectDepth, AllTrustedIsIdentity) {
  auto c = exact_affine_map(1.0, 0.2, 4);
  c.conf.fill(1.f);
  const auto r = correct_depth(c.depth, c.conf, c.prior, 0.5);
  EXPECT_EQ(r.depth.values, c.depth.values);
  EXPECT_EQ(r.depth.valid, c.depth.valid);
  EXPECT_EQ(r.refined_pixels, 0u);
}

TEST(CorrectDepth, NoInliersPassesThrough) {
  auto c = exact_affine_map(1.0, 0.2, 5);
  c.conf.fill(0.f);
  const auto r = correct_depth(c.depth, c.conf, c.prior, 0.5);
  EXPECT_TRUE(r.degenerate_fit);
  EXPECT_FALSE(r.diagnostic.empty());
  EXPECT_EQ(r.depth.values, c.depth.values);
}

TEST(CorrectDepth, NegativeDenominatorInvalidates) {
  // 1/depth decreases with the prior, so large untrusted priors go negative.
  const ImageSize size{20, 10};
  Raster<float> p(size);
  DepthMap depth(size);
  ConfidenceMap conf(size, 0.9f);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      p(x, y) = x < 10 ? 0.04f * static_cast<float>(x) + 0.01f * y : 0.95f;
      if (x < 10)
        depth.set(x, y, static_cast<float>(1.0 / (0.5 - 1.0 * p(x, y))));
      else
        conf(x, y) = 0.f;
    }
  FitOptions opts;
  opts.min_inliers = 10;
  const auto r = correct_depth(depth, conf, PriorMap::from_raster(p), 0.5, opts);
  ASSERT_FALSE(r.degenerate_fit);
  EXPECT_NEAR(r.mapping->a, -1.0, 1e-4);
  for (int y = 0; y < size.height; ++y)
    for (int x = 10; x < size.width; ++x) EXPECT_FALSE(r.depth.is_valid(x, y));
}

TEST(CorrectDepth, NeverTouchesTrustedPixels) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (int t = 0; t < 20; ++t) {
    const ImageSize size{30, 20};
    Raster<float> p(size);
    DepthMap depth(size);
    ConfidenceMap conf(size);
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x) {
        p(x, y) = u(rng);
        depth.set(x, y, 1.f + 9.f * u(rng));
        conf(x, y) = u(rng);
      }
    const auto r = correct_depth(depth, conf, PriorMap::from_raster(p), 0.5);
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x)
        if (conf(x, y) > 0.5f) {
          ASSERT_EQ(r.depth.values(x, y), depth.values(x, y));
        }
  }
}

TEST(FitMapping, SubsamplingIsSeededAndReproducible) {
  const auto c = exact_affine_map(2.0, 0.1, 6);
  FitOptions opts;
  opts.max_samples = 200;
  opts.seed = 11;
  const ConfidenceMask mask = confidence_mask(c.conf, 0.5);
  const auto a = fit_mapping(c.depth, c.prior, mask, opts);
  const auto b = fit_mapping(c.depth, c.prior, mask, opts);
  EXPECT_EQ(a.num_inliers, 200u);
  EXPECT_EQ(a.a, b.a);
  EXPECT_EQ(a.b, b.b);
  EXPECT_NEAR(a.a, 2.0, 1e-4);
}

TEST(FitMapping, MinInliersEnforced) {
  const auto c = exact_affine_map(2.0, 0.1, 7);
  FitOptions opts;
  opts.min_inliers = 10000;
  EXPECT_THROW(fit_mapping(c.depth, c.prior, confidence_mask(c.conf, 0.5), opts), DegenerateFit);
}

TEST(FitMapping, NoiseWithinStandardErrorBounds) {
  const std::size_t n = 10000;
  const double sigma = 1e-3;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = u(rng);
    y[i] = 2.0 * x[i] + 0.1 + g(rng);
  }
  const auto m = fit_affine(x, y);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double sxx = 0.0;
  for (double v : x) sxx += (v - mean) * (v - mean);
  const double se_a = sigma / std::sqrt(sxx);
  const double se_b = sigma * std::sqrt(1.0 / n + mean * mean / sxx);
  EXPECT_LT(std::abs(m.a - 2.0), 3 * se_a);
  EXPECT_LT(std::abs(m.b - 0.1), 3 * se_b);
}

TEST(AlignToSparse, ExactRecovery) {
  const ImageSize size{40, 30};
  Raster<float> p(size);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) p(x, y) = static_cast<float>((x + 2 * y) / 100.0);
  const PriorMap prior = PriorMap::from_raster(p);
  std::vector<SparsePoint> sparse;
  for (int i = 0; i < 25; ++i) {
    const int x = (i * 7) % size.width;
    const int y = (i * 11) % size.height;
    sparse.push_back({{double(x), double(y)}, 1.0 / (0.5 * p(x, y) + 0.2)});
  }
  const auto r = align_prior_to_sparse(prior, sparse);
  EXPECT_NEAR(r.mapping.a, 0.5, 1e-9);
  EXPECT_NEAR(r.mapping.b, 0.2, 1e-9);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) {
      const double expected = 1.0 / (0.5 * p(x, y) + 0.2);
      ASSERT_LT(std::abs(r.depth.values(x, y) - expected) / expected, 1e-6);
    }
}

TEST(AlignToSparse, TwoPointsInterpolate) {
  Raster<float> p(4, 1);
  for (int x = 0; x < 4; ++x) p(x, 0) = 0.25f * x;
  const std::vector<SparsePoint> sparse{{{0, 0}, 4.0}, {{2, 0}, 2.0}};
  const auto r = align_prior_to_sparse(PriorMap::from_raster(p), sparse);
  EXPECT_NEAR(r.mapping.residual_rms, 0.0, 1e-15);
  EXPECT_NEAR(r.depth.values(0, 0), 4.0, 1e-6);
  EXPECT_NEAR(r.depth.values(2, 0), 2.0, 1e-6);
}

TEST(AlignToSparse, ConstantPriorIsDegenerate) {
  const PriorMap prior = PriorMap::from_raster(Raster<float>(8, 8, 0.4f));
  const std::vector<SparsePoint> sparse{{{1, 1}, 2.0}, {{5, 6}, 3.0}, {{7, 2}, 4.0}};
  EXPECT_THROW(align_prior_to_sparse(prior, sparse), DegenerateFit);
}

}  // namespace
}  // namespace priormvs
