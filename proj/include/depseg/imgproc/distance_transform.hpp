#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "depseg/image.hpp"

namespace depseg {

namespace detail {

// Felzenszwalb-Huttenlocher lower envelope of parabolas, in place.
inline void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    d[q] = double(q - v[k]) * (q - v[k]) + f[v[k]];
  }
}

}  // namespace detail

/// Exact Euclidean distance from every true pixel to the nearest false
/// pixel; the ring just outside the image counts as false. False pixels
/// map to 0.
inline Image<float> distance_transform(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  Image<float> out(w, h);
  if (mask.empty()) return out;
  // padded grid (w+2)x(h+2) with a false border
  const int pw = w + 2, ph = h + 2;
  constexpr double kInf = 1e20;
  std::vector<double> grid(static_cast<std::size_t>(pw) * ph, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (mask.test(x, y)) grid[static_cast<std::size_t>(y + 1) * pw + (x + 1)] = kInf;

  const int n = std::max(pw, ph);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < pw; ++x) {
    f.resize(ph);
    d.resize(ph);
    for (int y = 0; y < ph; ++y) f[y] = grid[static_cast<std::size_t>(y) * pw + x];
    detail::edt_1d(f, d, v, z);
    for (int y = 0; y < ph; ++y) grid[static_cast<std::size_t>(y) * pw + x] = d[y];
  }
  for (int y = 0; y < ph; ++y) {
    f.resize(pw);
    d.resize(pw);
    for (int x = 0; x < pw; ++x) f[x] = grid[static_cast<std::size_t>(y) * pw + x];
    detail::edt_1d(f, d, v, z);
    for (int x = 0; x < pw; ++x) grid[static_cast<std::size_t>(y) * pw + x] = d[x];
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(x, y) = mask.test(x, y) ? static_cast<float>(std::sqrt(grid[static_cast<std::size_t>(y + 1) * pw + (x + 1)])) : 0.0f;
  return out;
}

}  // namespace depseg
