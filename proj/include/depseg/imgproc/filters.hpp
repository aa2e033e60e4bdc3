#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "depseg/image.hpp"

namespace depseg {

/// Separable Gaussian blur with replicated borders; radius = ceil(3 sigma).
inline Image<float> gaussian_blur(const Image<float>& src, double sigma) {
  if (sigma <= 0.0 || src.empty()) return src;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    norm += kernel[i + radius];
  }
  for (auto& w : kernel) w /= norm;

  const int w = src.width(), h = src.height();
  Image<float> tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * src(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = static_cast<float>(acc);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp(x, std::clamp(y + i, 0, h - 1));
      out(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

struct Gradient {
  Image<float> gx;
  Image<float> gy;
  Image<float> magnitude;
};

/// 3x3 Sobel (unnormalized) with replicated borders, L2 magnitude.
inline Gradient sobel(const Image<float>& src) {
  const int w = src.width(), h = src.height();
  Gradient g{Image<float>(w, h), Image<float>(w, h), Image<float>(w, h)};
  auto at = [&](int x, int y) { return static_cast<double>(src(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1))); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
      g.gx(x, y) = static_cast<float>(gx);
      g.gy(x, y) = static_cast<float>(gy);
      g.magnitude(x, y) = static_cast<float>(std::sqrt(gx * gx + gy * gy));
    }
  }
  return g;
}

}  // namespace depseg
