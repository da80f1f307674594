#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

#include <Eigen/Core>
#include <Eigen/LU>

#include "priormvs/error.hpp"
#include "priormvs/raster.hpp"

namespace priormvs {

/// Continuous image coordinates: origin top-left, +u right, +v down,
/// pixel centers at integer positions.
struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

struct Projection {
  Pixel pixel;
  double depth = 0.0;
};

/// Calibrated pinhole view with a world-to-camera rigid transform and the
/// depth range of the scene it observes.
class CameraView {
 public:
  static constexpr double kRotationTolerance = 1e-9;

  CameraView() = default;

  /// Validates every invariant and throws ArgumentError on violation.
  static CameraView create(const Eigen::Matrix3d& intrinsics, const Eigen::Matrix4d& extrinsics,
                           double depth_min, double depth_max, ImageSize size) {
    const auto& k = intrinsics;
    if (!k.allFinite() || !extrinsics.allFinite())
      throw ArgumentError("camera parameters must be finite");
    if (k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0)
      throw ArgumentError("intrinsics must be upper triangular");
    if (k(2, 2) != 1.0) throw ArgumentError("intrinsics[2][2] must be 1");
    if (!(k(0, 0) > 0.0) || !(k(1, 1) > 0.0)) throw ArgumentError("focal lengths must be positive");
    const Eigen::Matrix3d r = extrinsics.topLeftCorner<3, 3>();
    if (!(r.transpose() * r).isIdentity(kRotationTolerance) || r.determinant() <= 0.0)
      throw ArgumentError("extrinsic rotation must be orthonormal with determinant +1");
    if (extrinsics(3, 0) != 0.0 || extrinsics(3, 1) != 0.0 || extrinsics(3, 2) != 0.0 ||
        extrinsics(3, 3) != 1.0)
      throw ArgumentError("extrinsics last row must be (0, 0, 0, 1)");
    if (!std::isfinite(depth_min) || !std::isfinite(depth_max) || !(depth_min > 0.0) ||
        !(depth_max > depth_min))
      throw ArgumentError("depth range must satisfy 0 < depth_min < depth_max");
    if (size.width < 0 || size.height < 0) throw ArgumentError("image size must be non-negative");

    CameraView cam;
    cam.intrinsics_ = intrinsics;
    cam.intrinsics_inv_ = intrinsics.inverse();
    cam.extrinsics_ = extrinsics;
    cam.rotation_ = r;
    cam.translation_ = extrinsics.topRightCorner<3, 1>();
    cam.center_ = -r.transpose() * cam.translation_;
    cam.depth_min_ = depth_min;
    cam.depth_max_ = depth_max;
    cam.size_ = size;
    return cam;
  }

  const Eigen::Matrix3d& intrinsics() const noexcept { return intrinsics_; }
  const Eigen::Matrix3d& intrinsics_inverse() const noexcept { return intrinsics_inv_; }
  const Eigen::Matrix4d& extrinsics() const noexcept { return extrinsics_; }
  const Eigen::Matrix3d& rotation() const noexcept { return rotation_; }
  const Eigen::Vector3d& translation() const noexcept { return translation_; }
  /// Camera center in world coordinates.
  const Eigen::Vector3d& center() const noexcept { return center_; }
  double depth_min() const noexcept { return depth_min_; }
  double depth_max() const noexcept { return depth_max_; }
  ImageSize size() const noexcept { return size_; }

  CameraView with_size(ImageSize size) const {
    return create(intrinsics_, extrinsics_, depth_min_, depth_max_, size);
  }
  CameraView with_depth_range(double depth_min, double depth_max) const {
    return create(intrinsics_, extrinsics_, depth_min, depth_max, size_);
  }

  /// Camera for an image box-downsampled by `factor`: a new pixel i covers old
  /// pixels [f*i, f*i + f), so u_new = (u_old - (f - 1) / 2) / f.
  CameraView downscaled(int factor) const {
    if (factor < 1) throw ArgumentError("downscale factor must be >= 1");
    if (factor == 1) return *this;
    const double f = factor;
    const double shift = (f - 1.0) / 2.0;
    Eigen::Matrix3d k = intrinsics_;
    k(0, 0) /= f;
    k(0, 1) /= f;
    k(1, 1) /= f;
    k(0, 2) = (k(0, 2) - shift) / f;
    k(1, 2) = (k(1, 2) - shift) / f;
    return create(k, extrinsics_, depth_min_, depth_max_,
                  ImageSize{size_.width / factor, size_.height / factor});
  }

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation_ * world + translation_;
  }
  Eigen::Vector3d to_world(const Eigen::Vector3d& camera) const {
    return rotation_.transpose() * (camera - translation_);
  }

 private:
  Eigen::Matrix3d intrinsics_ = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d intrinsics_inv_ = Eigen::Matrix3d::Identity();
  Eigen::Matrix4d extrinsics_ = Eigen::Matrix4d::Identity();
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d center_ = Eigen::Vector3d::Zero();
  double depth_min_ = 1.0;
  double depth_max_ = 2.0;
  ImageSize size_{};
};

inline constexpr double kMinCameraDepth = 1e-12;

/// Projection without throwing; empty when the point is behind the camera.
inline std::optional<Projection> try_project(const Eigen::Vector3d& world, const CameraView& cam) {
  const Eigen::Vector3d pc = cam.to_camera(world);
  if (!(pc.z() > kMinCameraDepth)) return std::nullopt;
  const Eigen::Vector3d h = cam.intrinsics() * pc;
  return Projection{{h.x() / h.z(), h.y() / h.z()}, pc.z()};
}

/// Perspective projection; depth is the camera-frame z. No clipping to the image.
inline Projection project(const Eigen::Vector3d& world, const CameraView& cam) {
  if (!world.allFinite()) throw ArgumentError("point must be finite");
  auto p = try_project(world, cam);
  if (!p) throw BehindCamera();
  return *p;
}

inline Eigen::Vector3d unproject(Pixel pixel, double depth, const CameraView& cam) {
  if (!(depth > 0.0)) throw ArgumentError("unproject requires a positive depth");
  const Eigen::Vector3d ray = cam.intrinsics_inverse() * Eigen::Vector3d(pixel.u, pixel.v, 1.0);
  return cam.to_world(ray * (depth / ray.z()));
}

inline std::optional<Projection> try_reproject(Pixel pixel, double depth, const CameraView& src,
                                               const CameraView& dst) {
  if (!(depth > 0.0)) return std::nullopt;
  return try_project(unproject(pixel, depth, src), dst);
}

/// Transfers a pixel with known depth from one view into another.
inline Projection reproject(Pixel pixel, double depth, const CameraView& src,
                            const CameraView& dst) {
  return project(unproject(pixel, depth, src), dst);
}

/// Homography family induced by fronto-parallel planes of the reference view:
/// a reference pixel p on the plane z = d maps to
/// K_s (R_rel + t_rel n^T / d) K_r^-1 p = A p + K_s t_rel / d, since
/// n^T K_r^-1 p = 1 for n = (0, 0, 1).
class PlaneSweepMapping {
 public:
  PlaneSweepMapping(const CameraView& ref, const CameraView& src) {
    const Eigen::Matrix3d r_rel = src.rotation() * ref.rotation().transpose();
    const Eigen::Vector3d t_rel = src.translation() - r_rel * ref.translation();
    linear_ = src.intrinsics() * r_rel * ref.intrinsics_inverse();
    offset_ = src.intrinsics() * t_rel;
  }

  std::optional<Pixel> operator()(Pixel p, double depth) const {
    const Eigen::Vector3d h = linear_ * Eigen::Vector3d(p.u, p.v, 1.0) + offset_ / depth;
    if (!(h.z() > kMinCameraDepth)) return std::nullopt;
    return Pixel{h.x() / h.z(), h.y() / h.z()};
  }

 private:
  Eigen::Matrix3d linear_;
  Eigen::Vector3d offset_;
};

template <typename T>
struct WarpedRaster {
  Raster<T> image;
  Mask valid;
};

/// Resamples `src_image` into the reference frame through the plane at
/// `depth_hypothesis`. Output has the reference camera's size.
template <typename T>
WarpedRaster<T> planesweep_warp(const Raster<T>& src_image, const CameraView& ref,
                                const CameraView& src, double depth_hypothesis) {
  const double slack = 1e-9 * ref.depth_max();
  if (!(depth_hypothesis >= ref.depth_min() - slack && depth_hypothesis <= ref.depth_max() + slack))
    throw ArgumentError("depth hypothesis outside the reference depth range");
  const ImageSize size = ref.size().width > 0 ? ref.size() : src_image.size();
  WarpedRaster<T> out{Raster<T>(size), Mask(size, 0)};
  const PlaneSweepMapping mapping(ref, src);
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const auto q = mapping(Pixel{double(x), double(y)}, depth_hypothesis);
      if (!q) continue;
      if (auto value = sample_bilinear(src_image, q->u, q->v)) {
        out.image(x, y) = *value;
        out.valid(x, y) = 1;
      }
    }
  }
  return out;
}

}  // namespace priormvs
