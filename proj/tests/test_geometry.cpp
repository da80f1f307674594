#include <random>

#include <gtest/gtest.h>

#include "priormvs/geometry.hpp"
#include "support/synthetic_scene.hpp"

namespace priormvs {
namespace {

CameraView identity_camera(ImageSize size = {}) {
  return CameraView::create(Eigen::Matrix3d::Identity(), Eigen::Matrix4d::Identity(), 0.5, 10.0, size);
}

CameraView pinhole(double f, double cx, double cy, const Eigen::Vector3d& center = Eigen::Vector3d::Zero(),
                   ImageSize size = {}) {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = k(1, 1) = f;
  k(0, 2) = cx;
  k(1, 2) = cy;
  Eigen::Matrix4d e = Eigen::Matrix4d::Identity();
  e.topRightCorner<3, 1>() = -center;
  return CameraView::create(k, e, 0.5, 10.0, size);
}

CameraView random_camera(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = 300 + 100 * u(rng);
  k(1, 1) = 300 + 100 * u(rng);
  k(0, 1) = 0.5 * u(rng);
  k(0, 2) = 320 + 10 * u(rng);
  k(1, 2) = 240 + 10 * u(rng);
  const Eigen::Quaterniond q = Eigen::Quaterniond(1.0, 0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng)).normalized();
  Eigen::Matrix4d e = Eigen::Matrix4d::Identity();
  e.topLeftCorner<3, 3>() = q.toRotationMatrix();
  e.topRightCorner<3, 1>() = Eigen::Vector3d(u(rng), u(rng), u(rng));
  return CameraView::create(k, e, 0.5, 20.0, {640, 480});
}

TEST(Project, IdentityCameraMapsOpticalAxisToOrigin) {
  const auto p = project(Eigen::Vector3d(0, 0, 1), identity_camera());
  EXPECT_EQ(p.pixel.u, 0.0);
  EXPECT_EQ(p.pixel.v, 0.0);
  EXPECT_EQ(p.depth, 1.0);
}

TEST(Project, PinholeByHand) {
  const auto p = project(Eigen::Vector3d(1, 2, 2), pinhole(100, 50, 50));
  EXPECT_DOUBLE_EQ(p.pixel.u, 100.0);
  EXPECT_DOUBLE_EQ(p.pixel.v, 150.0);
  EXPECT_DOUBLE_EQ(p.depth, 2.0);
}

TEST(Project, BehindCameraIsAnError) {
  EXPECT_THROW(project(Eigen::Vector3d(0, 0, -1), identity_camera()), BehindCamera);
  EXPECT_THROW(project(Eigen::Vector3d(0, 0, 0), identity_camera()), BehindCamera);
  EXPECT_FALSE(try_project(Eigen::Vector3d(0, 0, -1), identity_camera()));
}

TEST(Unproject, Examples) {
  const Eigen::Vector3d a = unproject({0, 0}, 1.0, identity_camera());
  EXPECT_TRUE(a.isApprox(Eigen::Vector3d(0, 0, 1)));
  const Eigen::Vector3d b = unproject({100, 150}, 2.0, pinhole(100, 50, 50));
  EXPECT_NEAR((b - Eigen::Vector3d(1, 2, 2)).norm(), 0.0, 1e-12);
}

TEST(Unproject, RejectsNonPositiveDepth) {
  EXPECT_THROW(unproject({0, 0}, 0.0, identity_camera()), ArgumentError);
  EXPECT_THROW(unproject({0, 0}, -1.0, identity_camera()), ArgumentError);
}

TEST(Unproject, RoundTripOnRandomPixels) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const CameraView cam = random_camera(rng);
    const Pixel px{640 * u(rng), 480 * u(rng)};
    const double depth = 0.5 + 19.5 * u(rng);
    const auto back = project(unproject(px, depth, cam), cam);
    worst = std::max({worst, std::abs(back.pixel.u - px.u) / std::max(1.0, std::abs(px.u)),
                      std::abs(back.pixel.v - px.v) / std::max(1.0, std::abs(px.v)),
                      std::abs(back.depth - depth) / depth});
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Reproject, SameCameraIsIdentity) {
  std::mt19937_64 rng(3);
  const CameraView cam = random_camera(rng);
  const auto r = reproject({123.25, 77.5}, 4.0, cam, cam);
  EXPECT_NEAR(r.pixel.u, 123.25, 1e-9);
  EXPECT_NEAR(r.pixel.v, 77.5, 1e-9);
  EXPECT_NEAR(r.depth, 4.0, 1e-9);
}

TEST(Reproject, TranslationParallax) {
  const CameraView src = pinhole(1, 0, 0);
  const CameraView dst = pinhole(1, 0, 0, Eigen::Vector3d(1, 0, 0));
  const auto r = reproject({0, 0}, 1.0, src, dst);
  EXPECT_NEAR(r.pixel.u, -1.0, 1e-12);
  EXPECT_NEAR(r.pixel.v, 0.0, 1e-12);
  EXPECT_NEAR(r.depth, 1.0, 1e-12);
}

TEST(Reproject, ThereAndBackIsIdentity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const CameraView a = random_camera(rng);
    const CameraView b = random_camera(rng);
    const Pixel px{100 + 440 * u(rng), 100 + 280 * u(rng)};
    const double depth = 5.0 + 10.0 * u(rng);
    const auto ab = try_reproject(px, depth, a, b);
    if (!ab) continue;
    const auto ba = reproject(ab->pixel, ab->depth, b, a);
    EXPECT_NEAR(ba.pixel.u, px.u, 1e-9 * std::max(1.0, px.u));
    EXPECT_NEAR(ba.pixel.v, px.v, 1e-9 * std::max(1.0, px.v));
    EXPECT_NEAR(ba.depth, depth, 1e-9 * depth);
  }
}

TEST(CameraView, RejectsBrokenInvariants) {
  const Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  const Eigen::Matrix4d e = Eigen::Matrix4d::Identity();
  EXPECT_THROW(CameraView::create(k, e, 0.0, 1.0, {}), ArgumentError);
  EXPECT_THROW(CameraView::create(k, e, 2.0, 1.0, {}), ArgumentError);
  Eigen::Matrix3d bad_k = k;
  bad_k(2, 2) = 2.0;
  EXPECT_THROW(CameraView::create(bad_k, e, 1.0, 2.0, {}), ArgumentError);
  bad_k = k;
  bad_k(0, 0) = -1.0;
  EXPECT_THROW(CameraView::create(bad_k, e, 1.0, 2.0, {}), ArgumentError);
  Eigen::Matrix4d bad_e = e;
  bad_e(0, 0) = 1.001;
  EXPECT_THROW(CameraView::create(k, bad_e, 1.0, 2.0, {}), ArgumentError);
  bad_e = e;
  bad_e(0, 0) = -1.0;  // reflection
  EXPECT_THROW(CameraView::create(k, bad_e, 1.0, 2.0, {}), ArgumentError);
}

TEST(CameraView, DownscaledMatchesBoxFilterGeometry) {
  std::mt19937_64 rng(5);
  const CameraView cam = random_camera(rng);
  const Eigen::Vector3d x = unproject({200.0, 100.0}, 6.0, cam);
  for (int factor : {2, 4}) {
    const auto full = project(x, cam);
    const auto small = project(x, cam.downscaled(factor));
    const double shift = (factor - 1) / 2.0;
    EXPECT_NEAR(small.pixel.u, (full.pixel.u - shift) / factor, 1e-9);
    EXPECT_NEAR(small.pixel.v, (full.pixel.v - shift) / factor, 1e-9);
    EXPECT_EQ(cam.downscaled(factor).size().width, 640 / factor);
  }
}

GrayImage random_image(ImageSize size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.f, 255.f);
  GrayImage img(size);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

TEST(PlanesweepWarp, SameCameraIsIdentityAtEveryHypothesis) {
  std::mt19937_64 rng(9);
  const CameraView cam = random_camera(rng).with_size({64, 48});
  const GrayImage img = random_image({64, 48}, 1);
  for (double d : {0.5, 1.0, 3.7, 20.0}) {
    const auto warped = planesweep_warp(img, cam, cam, d);
    EXPECT_EQ(warped.image, img);
    for (auto v : warped.valid.data()) ASSERT_EQ(v, 1);
  }
}

TEST(PlanesweepWarp, FrontoParallelPlaneAlignsAtItsDepth) {
  // Disparity f*b/d = 100 * 0.5 / 5 = 10 px, so the true hypothesis lands on
  // source pixel centers and the warp must reproduce the reference exactly.
  const ImageSize size{96, 64};
  const double plane = 5.0;
  auto scene = testing::SyntheticScene{{testing::TexturedPlane::fronto(plane)}};
  scene.planes[0].texture.cells = {0.2};
  scene.planes[0].texture.weights = {1.0};
  const CameraView ref = testing::make_camera(Eigen::Vector3d::Zero(), 100, size, 2.0, 8.0);
  const CameraView src = testing::make_camera(Eigen::Vector3d(0.5, 0, 0), 100, size, 2.0, 8.0);
  const GrayImage ref_img = to_gray(scene.render(ref).image);
  const GrayImage src_img = to_gray(scene.render(src).image);

  const auto residual = [&](double d) {
    const auto warped = planesweep_warp(src_img, ref, src, d);
    double worst = 0.0;
    double total = 0.0;
    for (int y = 2; y < size.height - 2; ++y)
      for (int x = 2; x < size.width - 2; ++x) {
        if (!warped.valid(x, y)) continue;
        const double e = std::abs(warped.image(x, y) - ref_img(x, y));
        worst = std::max(worst, e);
        total += e;
      }
    return std::make_pair(worst, total);
  };
  EXPECT_LT(residual(plane).first, 1e-6);
  EXPECT_GT(residual(4.0).second, 100.0);
  EXPECT_GT(residual(6.0).second, 100.0);
}

TEST(PlanesweepWarp, OutOfBoundsSamplesAreInvalid) {
  const ImageSize size{32, 16};
  const CameraView ref = testing::make_camera(Eigen::Vector3d::Zero(), 100, size, 2.0, 8.0);
  const CameraView src = testing::make_camera(Eigen::Vector3d(0.5, 0, 0), 100, size, 2.0, 8.0);
  const auto warped = planesweep_warp(random_image(size, 2), ref, src, 5.0);
  // Reference column x samples source column x - 10.
  for (int y = 0; y < size.height; ++y) {
    EXPECT_EQ(warped.valid(9, y), 0);
    EXPECT_EQ(warped.valid(10, y), 1);
    EXPECT_EQ(warped.valid(31, y), 1);
  }
}

TEST(PlanesweepWarp, HypothesisOutsideRangeIsRejected) {
  const CameraView cam = identity_camera({8, 8});
  EXPECT_THROW(planesweep_warp(random_image({8, 8}, 3), cam, cam, 0.1), ArgumentError);
}

TEST(Sampling, BilinearFootprintLeavingImageIsInvalid) {
  GrayImage img(4, 3, 1.f);
  EXPECT_TRUE(sample_bilinear(img, 3.0, 2.0));
  EXPECT_FALSE(sample_bilinear(img, 3.0001, 0.0));
  EXPECT_FALSE(sample_bilinear(img, -0.0001, 0.0));
  img(1, 1) = 3.f;
  EXPECT_FLOAT_EQ(*sample_bilinear(img, 0.5, 0.5), 1.5f);
}

}  // namespace
}  // namespace priormvs
