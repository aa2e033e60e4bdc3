#pragma once

#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"

namespace depseg {

namespace detail {

// Row half-widths of a rasterized disk: offset (dx, dy) is inside iff
// dx^2 + dy^2 <= r^2.
inline std::vector<int> disk_half_widths(int radius) {
  std::vector<int> half(2 * radius + 1);
  for (int dy = -radius; dy <= radius; ++dy) {
    int hw = 0;
    while ((hw + 1) * (hw + 1) + dy * dy <= radius * radius) ++hw;
    half[dy + radius] = hw;
  }
  return half;
}

// Per-row prefix counts of pixels equal to `value`.
inline std::vector<int> row_prefix(const BinaryMask& m, std::uint8_t value) {
  const int w = m.width();
  std::vector<int> prefix(static_cast<std::size_t>(m.height()) * (w + 1), 0);
  for (int y = 0; y < m.height(); ++y) {
    int* row = prefix.data() + static_cast<std::size_t>(y) * (w + 1);
    for (int x = 0; x < w; ++x) row[x + 1] = row[x] + ((m(x, y) != 0) == (value != 0) ? 1 : 0);
  }
  return prefix;
}

}  // namespace detail

/// Dilation by a disk. Pixels outside the image count as false.
inline BinaryMask dilate(const BinaryMask& m, int radius) {
  require(radius >= 0, Errc::invalid_argument, "negative structuring radius");
  if (radius == 0) return m;
  const int w = m.width(), h = m.height();
  const auto half = detail::disk_half_widths(radius);
  const auto ones = detail::row_prefix(m, 1);
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      bool hit = false;
      for (int dy = -radius; dy <= radius && !hit; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        const int x0 = std::max(0, x - half[dy + radius]), x1 = std::min(w - 1, x + half[dy + radius]);
        const int* row = ones.data() + static_cast<std::size_t>(yy) * (w + 1);
        hit = row[x1 + 1] - row[x0] > 0;
      }
      out.set(x, y, hit);
    }
  return out;
}

/// Erosion by a disk. Pixels outside the image count as true, so regions
/// touching the frame are not eaten from the border.
inline BinaryMask erode(const BinaryMask& m, int radius) {
  require(radius >= 0, Errc::invalid_argument, "negative structuring radius");
  if (radius == 0) return m;
  const int w = m.width(), h = m.height();
  const auto half = detail::disk_half_widths(radius);
  const auto zeros = detail::row_prefix(m, 0);
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m.test(x, y)) continue;
      bool keep = true;
      for (int dy = -radius; dy <= radius && keep; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        const int x0 = std::max(0, x - half[dy + radius]), x1 = std::min(w - 1, x + half[dy + radius]);
        const int* row = zeros.data() + static_cast<std::size_t>(yy) * (w + 1);
        keep = row[x1 + 1] - row[x0] == 0;
      }
      out.set(x, y, keep);
    }
  return out;
}

inline BinaryMask morph_open(const BinaryMask& m, int radius) { return dilate(erode(m, radius), radius); }
inline BinaryMask morph_close(const BinaryMask& m, int radius) { return erode(dilate(m, radius), radius); }

}  // namespace depseg
