#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <png.h>

#include "priormvs/error.hpp"
#include "priormvs/io/text.hpp"
#include "priormvs/raster.hpp"

namespace priormvs::io {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

inline std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 255.f)));
}

/// Binary 8-bit PPM (P6).
inline ColorImage read_ppm(std::string_view bytes) {
  std::size_t pos = 0;
  const auto token = [&]() -> std::string_view {
    while (pos < bytes.size()) {
      if (is_space(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !is_space(bytes[pos]) && pos - start < 32) ++pos;
    if (pos == start) throw ParseError("truncated PPM header");
    return bytes.substr(start, pos - start);
  };
  if (token() != "P6") throw ParseError("not a binary PPM (P6) file");
  const auto w = parse_int(token());
  const auto h = parse_int(token());
  const auto maxval = parse_int(token());
  if (!w || !h || *w <= 0 || *h <= 0 || *w > (1 << 20) || *h > (1 << 20))
    throw ParseError("invalid PPM dimensions");
  if (!maxval || *maxval != 255) throw ParseError("only 8-bit PPM (maxval 255) is supported");
  if (pos >= bytes.size()) throw ParseError("truncated PPM header");
  ++pos;
  const std::uint64_t need = static_cast<std::uint64_t>(*w) * static_cast<std::uint64_t>(*h) * 3;
  if (bytes.size() - pos < need) throw ParseError("truncated PPM payload");
  ColorImage image(static_cast<int>(*w), static_cast<int>(*h));
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (auto& px : image.data()) {
    px = {float(data[0]), float(data[1]), float(data[2])};
    data += 3;
  }
  return image;
}

inline std::string write_ppm(const ColorImage& image) {
  std::string out =
      "P6\n" + std::to_string(image.width()) + ' ' + std::to_string(image.height()) + "\n255\n";
  for (const auto& px : image.data()) {
    out += static_cast<char>(quantize(px.r));
    out += static_cast<char>(quantize(px.g));
    out += static_cast<char>(quantize(px.b));
  }
  return out;
}

inline ColorImage read_png(std::string_view bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    throw ParseError(std::string("invalid PNG: ") + png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&png);
    throw ParseError(std::string("invalid PNG: ") + png.message);
  }
  ColorImage image(static_cast<int>(png.width), static_cast<int>(png.height));
  const unsigned char* data = buffer.data();
  for (auto& px : image.data()) {
    px = {float(data[0]), float(data[1]), float(data[2])};
    data += 3;
  }
  return image;
}

namespace detail {

inline std::string encode_png(const std::vector<unsigned char>& pixels, int width, int height,
                              png_uint_32 format) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(width);
  png.height = static_cast<png_uint_32>(height);
  png.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw Error(std::string("PNG encoding failed: ") + png.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw Error(std::string("PNG encoding failed: ") + png.message);
  out.resize(size);
  return out;
}

}  // namespace detail

inline std::string write_png(const ColorImage& image) {
  std::vector<unsigned char> pixels;
  pixels.reserve(image.pixel_count() * 3);
  for (const auto& px : image.data()) {
    pixels.push_back(quantize(px.r));
    pixels.push_back(quantize(px.g));
    pixels.push_back(quantize(px.b));
  }
  return detail::encode_png(pixels, image.width(), image.height(), PNG_FORMAT_RGB);
}

inline std::string write_png(const Mask& mask) {
  std::vector<unsigned char> pixels(mask.data().begin(), mask.data().end());
  return detail::encode_png(pixels, mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

/// Decodes PNG or binary PPM by signature.
inline ColorImage read_image(std::string_view bytes) {
  static constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) return read_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return read_ppm(bytes);
  throw ParseError("unsupported image format (PNG and binary PPM are accepted)");
}

inline ColorImage load_image(const std::filesystem::path& path) {
  try {
    return read_image(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace priormvs::io
