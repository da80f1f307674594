#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include "priormvs/error.hpp"

namespace priormvs {

struct ImageSize {
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

/// Dense row-major 2D grid.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, const T& fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw ArgumentError("raster dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  explicit Raster(ImageSize size, const T& fill = T{}) : Raster(size.width, size.height, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  ImageSize size() const noexcept { return {width_, height_}; }
  std::size_t pixel_count() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

  T& at(int x, int y) {
    if (!contains(x, y)) throw ArgumentError("raster index out of range");
    return (*this)(x, y);
  }
  const T& at(int x, int y) const {
    if (!contains(x, y)) throw ArgumentError("raster index out of range");
    return (*this)(x, y);
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  void fill(const T& value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// 8-bit-range color sample stored in single precision.
struct Rgb {
  float r = 0.f;
  float g = 0.f;
  float b = 0.f;

  float gray() const noexcept { return (r + g + b) / 3.f; }

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using GrayImage = Raster<float>;
using ColorImage = Raster<Rgb>;
using Mask = Raster<std::uint8_t>;

inline GrayImage to_gray(const ColorImage& image) {
  GrayImage gray(image.size());
  auto src = image.data();
  auto dst = gray.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i].gray();
  return gray;
}

/// Metric depth raster with a validity mask. Valid values are finite and positive.
struct DepthMap {
  Raster<float> values;
  Mask valid;

  DepthMap() = default;
  explicit DepthMap(ImageSize size) : values(size, 0.f), valid(size, 0) {}

  /// Treats non-finite or non-positive entries as invalid.
  static DepthMap from_values(Raster<float> values) {
    DepthMap map;
    map.valid = Mask(values.size(), 0);
    auto v = values.data();
    auto m = map.valid.data();
    for (std::size_t i = 0; i < v.size(); ++i) m[i] = (std::isfinite(v[i]) && v[i] > 0.f) ? 1 : 0;
    map.values = std::move(values);
    return map;
  }

  ImageSize size() const noexcept { return values.size(); }
  int width() const noexcept { return values.width(); }
  int height() const noexcept { return values.height(); }

  bool is_valid(int x, int y) const noexcept { return valid(x, y) != 0; }
  void set(int x, int y, float depth) {
    values(x, y) = depth;
    valid(x, y) = 1;
  }
  void invalidate(int x, int y) {
    values(x, y) = 0.f;
    valid(x, y) = 0;
  }

  /// Invalid pixels are written as 0, the interchange convention for depth files.
  Raster<float> to_values() const {
    Raster<float> out = values;
    auto o = out.data();
    auto m = valid.data();
    for (std::size_t i = 0; i < o.size(); ++i)
      if (!m[i]) o[i] = 0.f;
    return out;
  }

  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::count_if(valid.data().begin(), valid.data().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
  }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

/// Per-pixel photometric confidence in [0,1].
using ConfidenceMap = Raster<float>;

namespace detail {

inline float lerp(float a, float b, double t) {
  return static_cast<float>(static_cast<double>(a) + (static_cast<double>(b) - a) * t);
}
inline Rgb lerp(const Rgb& a, const Rgb& b, double t) {
  return {lerp(a.r, b.r, t), lerp(a.g, b.g, t), lerp(a.b, b.b, t)};
}

// Offsets this close to the pixel grid are treated as on it, so identity
// mappings reproduce the input exactly.
inline double snap_to_grid(double c) {
  const double r = std::round(c);
  return std::abs(c - r) < 1e-9 ? r : c;
}

}  // namespace detail

/// Bilinear sample at continuous pixel coordinates (pixel centers at integers).
/// Returns nothing when the 2x2 footprint leaves the image.
template <typename T>
std::optional<T> sample_bilinear(const Raster<T>& raster, double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v) || raster.empty()) return std::nullopt;
  u = detail::snap_to_grid(u);
  v = detail::snap_to_grid(v);
  const int w = raster.width();
  const int h = raster.height();
  if (u < 0.0 || v < 0.0 || u > w - 1 || v > h - 1) return std::nullopt;
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double tx = u - x0;
  const double ty = v - y0;
  const T top = detail::lerp(raster(x0, y0), raster(x1, y0), tx);
  const T bottom = detail::lerp(raster(x0, y1), raster(x1, y1), tx);
  return detail::lerp(top, bottom, ty);
}

/// Bilinear depth sample that requires all contributing neighbors to be valid.
inline std::optional<float> sample_depth(const DepthMap& depth, double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v) || depth.values.empty()) return std::nullopt;
  u = detail::snap_to_grid(u);
  v = detail::snap_to_grid(v);
  const int w = depth.width();
  const int h = depth.height();
  if (u < 0.0 || v < 0.0 || u > w - 1 || v > h - 1) return std::nullopt;
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double tx = u - x0;
  const double ty = v - y0;
  const auto needed = [](double t) { return t > 0.0; };
  if (!depth.is_valid(x0, y0)) return std::nullopt;
  if (needed(tx) && !depth.is_valid(x1, y0)) return std::nullopt;
  if (needed(ty) && !depth.is_valid(x0, y1)) return std::nullopt;
  if (needed(tx) && needed(ty) && !depth.is_valid(x1, y1)) return std::nullopt;
  const auto& r = depth.values;
  const float top = detail::lerp(r(x0, y0), r(x1, y0), tx);
  const float bottom = detail::lerp(r(x0, y1), r(x1, y1), tx);
  return detail::lerp(top, bottom, ty);
}

/// Resamples to a new resolution with pixel centers aligned
/// (u_src = (u_dst + 0.5) * W_src / W_dst - 0.5), clamped at the border.
template <typename T>
Raster<T> resample_bilinear(const Raster<T>& raster, ImageSize size) {
  if (raster.empty()) throw ArgumentError("cannot resample an empty raster");
  if (raster.size() == size) return raster;
  Raster<T> out(size);
  const double sx = static_cast<double>(raster.width()) / size.width;
  const double sy = static_cast<double>(raster.height()) / size.height;
  for (int y = 0; y < size.height; ++y) {
    const double v = std::clamp((y + 0.5) * sy - 0.5, 0.0, raster.height() - 1.0);
    for (int x = 0; x < size.width; ++x) {
      const double u = std::clamp((x + 0.5) * sx - 0.5, 0.0, raster.width() - 1.0);
      out(x, y) = *sample_bilinear(raster, u, v);
    }
  }
  return out;
}

/// 2x2 box filter; odd trailing rows/columns are dropped.
template <typename T>
Raster<T> downsample2(const Raster<T>& raster) {
  Raster<T> out(raster.width() / 2, raster.height() / 2);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const T& a = raster(2 * x, 2 * y);
      const T& b = raster(2 * x + 1, 2 * y);
      const T& c = raster(2 * x, 2 * y + 1);
      const T& d = raster(2 * x + 1, 2 * y + 1);
      if constexpr (std::is_same_v<T, Rgb>) {
        out(x, y) = {(a.r + b.r + c.r + d.r) * 0.25f, (a.g + b.g + c.g + d.g) * 0.25f,
                     (a.b + b.b + c.b + d.b) * 0.25f};
      } else {
        out(x, y) = static_cast<T>((a + b + c + d) * 0.25f);
      }
    }
  }
  return out;
}

/// Nearest-neighbor decimation keeping pixel (x*factor, y*factor).
inline DepthMap decimate(const DepthMap& depth, int factor) {
  if (factor < 1) throw ArgumentError("decimation factor must be >= 1");
  if (factor == 1) return depth;
  DepthMap out(ImageSize{depth.width() / factor, depth.height() / factor});
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      if (depth.is_valid(x * factor, y * factor)) out.set(x, y, depth.values(x * factor, y * factor));
  return out;
}

}  // namespace priormvs
