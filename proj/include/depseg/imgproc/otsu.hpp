#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "depseg/error.hpp"
#include "depseg/image.hpp"

namespace depseg {

using Histogram256 = std::array<std::uint64_t, 256>;

inline Histogram256 histogram_u8(const Image<std::uint8_t>& img) {
  Histogram256 h{};
  for (auto v : img.pixels()) ++h[v];
  return h;
}

/// Otsu threshold: bins <= t form the lower class. Maximizes between-class
/// variance; ties resolve to the lowest bin. A histogram with all mass in
/// one bin returns that bin.
inline int otsu_threshold(std::span<const std::uint64_t, 256> histogram) {
  long double total = 0, weighted = 0;
  int nonzero = 0, only = 0;
  for (int i = 0; i < 256; ++i) {
    total += histogram[i];
    weighted += static_cast<long double>(i) * histogram[i];
    if (histogram[i] > 0) {
      ++nonzero;
      only = i;
    }
  }
  require(total > 0, Errc::invalid_argument, "otsu on empty histogram");
  if (nonzero == 1) return only;

  long double w0 = 0, sum0 = 0, best = -1;
  int best_t = 0;
  for (int t = 0; t < 255; ++t) {
    w0 += histogram[t];
    sum0 += static_cast<long double>(t) * histogram[t];
    const long double w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const long double diff = sum0 * total - weighted * w0;  // = w0 w1 (mu0 - mu1)
    const long double var = diff * diff / (w0 * w1);
    if (var > best) {
      best = var;
      best_t = t;
    }
  }
  return best_t;
}

inline int otsu_threshold(const Histogram256& histogram) {
  return otsu_threshold(std::span<const std::uint64_t, 256>(histogram));
}

}  // namespace depseg
