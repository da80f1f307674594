#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

#include "priormvs/error.hpp"
#include "priormvs/io/text.hpp"
#include "priormvs/raster.hpp"

namespace priormvs::io {

namespace detail {

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000ff00u) | ((v << 8) & 0x00ff0000u) | (v << 24);
}

// Next whitespace-delimited header token starting at `pos`.
inline std::string_view header_token(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
  const std::size_t start = pos;
  while (pos < bytes.size() && !is_space(bytes[pos]) && pos - start < 64) ++pos;
  if (pos == start) throw ParseError("truncated PFM header");
  return bytes.substr(start, pos - start);
}

}  // namespace detail

/// Reads a grayscale PFM ("Pf"). Rows are stored bottom-up; a negative scale
/// marks little-endian samples, a positive one big-endian.
inline Raster<float> read_pfm(std::string_view bytes) {
  std::size_t pos = 0;
  const std::string_view magic = detail::header_token(bytes, pos);
  if (magic == "PF") throw ParseError("unsupported: color PFM");
  if (magic != "Pf") throw ParseError("not a PFM file");
  const auto width = parse_int(detail::header_token(bytes, pos));
  const auto height = parse_int(detail::header_token(bytes, pos));
  if (!width || !height || *width < 0 || *height < 0 || *width > (1 << 24) || *height > (1 << 24))
    throw ParseError("invalid PFM dimensions");
  const auto scale = parse_double(detail::header_token(bytes, pos));
  if (!scale || *scale == 0.0) throw ParseError("invalid PFM scale");
  if (pos >= bytes.size() || !is_space(bytes[pos])) throw ParseError("truncated PFM header");
  ++pos;  // single whitespace byte ends the header

  const std::uint64_t count = static_cast<std::uint64_t>(*width) * static_cast<std::uint64_t>(*height);
  if ((bytes.size() - pos) / 4 < count) throw ParseError("truncated PFM payload");

  const bool little = *scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  Raster<float> raster(static_cast<int>(*width), static_cast<int>(*height));
  const char* data = bytes.data() + pos;
  for (int row = 0; row < raster.height(); ++row) {
    const int y = raster.height() - 1 - row;
    for (int x = 0; x < raster.width(); ++x) {
      std::uint32_t word;
      std::memcpy(&word, data, 4);
      data += 4;
      if (swap) word = detail::byteswap32(word);
      std::memcpy(&raster(x, y), &word, 4);
    }
  }
  return raster;
}

/// Little-endian PFM with scale -1.0, bottom row first.
inline std::string write_pfm(const Raster<float>& raster) {
  std::string out = "Pf\n" + std::to_string(raster.width()) + ' ' + std::to_string(raster.height()) +
                    "\n-1.0\n";
  const std::size_t header = out.size();
  out.resize(header + raster.pixel_count() * 4);
  char* data = out.data() + header;
  for (int y = raster.height() - 1; y >= 0; --y)
    for (int x = 0; x < raster.width(); ++x) {
      std::uint32_t word;
      std::memcpy(&word, &raster(x, y), 4);
      if constexpr (std::endian::native == std::endian::big) word = detail::byteswap32(word);
      std::memcpy(data, &word, 4);
      data += 4;
    }
  return out;
}

}  // namespace priormvs::io
