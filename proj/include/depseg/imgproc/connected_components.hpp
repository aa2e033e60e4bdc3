#pragma once

#include <numeric>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"

namespace depseg {

/// Two-pass union-find labeling. Labels run 1..K in order of each
/// component's first pixel in row-major scan; background stays 0.
inline RegionLabels connected_components(const BinaryMask& mask, int connectivity = 8) {
  require(connectivity == 4 || connectivity == 8, Errc::invalid_argument, "connectivity must be 4 or 8");
  const int w = mask.width(), h = mask.height();
  RegionLabels labels(w, h);
  std::vector<std::int32_t> parent(1, 0);

  auto find = [&](std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  // already-visited neighbors: left, up-left, up, up-right
  constexpr int kDx[4] = {-1, -1, 0, 1};
  constexpr int kDy[4] = {0, -1, -1, -1};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.test(x, y)) continue;
      std::int32_t current = 0;
      for (int n = 0; n < 4; ++n) {
        if (connectivity == 4 && (n == 1 || n == 3)) continue;
        const int nx = x + kDx[n], ny = y + kDy[n];
        if (!mask.contains(nx, ny) || !mask.test(nx, ny)) continue;
        const std::int32_t l = labels(nx, ny);
        if (current == 0) {
          current = l;
        } else {
          unite(current, l);
        }
      }
      if (current == 0) {
        current = static_cast<std::int32_t>(parent.size());
        parent.push_back(current);
      }
      labels(x, y) = current;
    }
  }

  // Provisional labels are created in scan order and union keeps the
  // smallest root, so roots already follow first-encounter order; compact them.
  std::vector<std::int32_t> final_label(parent.size(), 0);
  std::int32_t next = 0;
  for (std::size_t i = 1; i < parent.size(); ++i) {
    const std::int32_t root = find(static_cast<std::int32_t>(i));
    if (root == static_cast<std::int32_t>(i)) final_label[i] = ++next;
  }
  for (auto& l : labels.pixels())
    if (l > 0) l = final_label[find(l)];
  return labels;
}

}  // namespace depseg
