#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"
#include "depseg/imgproc/filters.hpp"

namespace depseg {

inline constexpr double kCannySigma = 1.4;

/// Canny edges: Gaussian pre-smoothing (sigma 1.4), Sobel gradient,
/// non-maximum suppression along the quantized gradient direction and
/// 8-connected hysteresis between `low` and `high` (magnitude units of the
/// unnormalized Sobel operator).
inline BinaryMask canny(const Image<float>& gray, float low, float high) {
  require(low >= 0.0f && high >= low, Errc::invalid_argument, "canny thresholds need high >= low >= 0");
  const int w = gray.width(), h = gray.height();
  BinaryMask edges(w, h);
  if (gray.empty()) return edges;

  const Gradient g = sobel(gaussian_blur(gray, kCannySigma));
  auto mag = [&](int x, int y) { return g.magnitude.contains(x, y) ? g.magnitude(x, y) : 0.0f; };

  // 0 = horizontal gradient, 1 = 45deg, 2 = vertical, 3 = 135deg (image y points down)
  constexpr int kStep[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
  BinaryMask weak(w, h), strong(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float m = g.magnitude(x, y);
      if (m < low || m <= 0.0f) continue;
      double angle = std::atan2(static_cast<double>(g.gy(x, y)), static_cast<double>(g.gx(x, y))) * 180.0 / std::numbers::pi;
      if (angle < 0) angle += 180.0;
      const int dir = static_cast<int>(std::floor((angle + 22.5) / 45.0)) % 4;
      const int dx = kStep[dir][0], dy = kStep[dir][1];
      // asymmetric comparison keeps exactly one pixel across a symmetric ridge
      if (m >= mag(x - dx, y - dy) && m > mag(x + dx, y + dy)) {
        weak.set(x, y);
        if (m >= high) strong.set(x, y);
      }
    }
  }

  std::vector<Point> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (strong.test(x, y)) {
        edges.set(x, y);
        stack.push_back({x, y});
      }
  while (!stack.empty()) {
    const Point p = stack.back();
    stack.pop_back();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = p.x + dx, ny = p.y + dy;
        if (!edges.contains(nx, ny) || edges.test(nx, ny) || !weak.test(nx, ny)) continue;
        edges.set(nx, ny);
        stack.push_back({nx, ny});
      }
  }
  return edges;
}

}  // namespace depseg
