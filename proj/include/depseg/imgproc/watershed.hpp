#pragma once

#include <cmath>
#include <cstdint>
#include <queue>
#include <tuple>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"

namespace depseg {

namespace detail {

// Neighbor offsets in a fixed order: up, left, right, down, then diagonals.
inline constexpr int kNeighborDx[8] = {0, -1, 1, 0, -1, 1, -1, 1};
inline constexpr int kNeighborDy[8] = {-1, 0, 0, 1, -1, -1, 1, 1};

}  // namespace detail

/// Marker-controlled priority-flood watershed.
///
/// Pixels are flooded in ascending (topography, insertion order). A popped
/// pixel whose labeled neighbors all agree takes that label and pushes its
/// unvisited neighbors; one that touches two different labels becomes a
/// watershed line (0) and does not propagate. Marker pixels keep their label.
inline RegionLabels watershed(const Image<float>& topography, const RegionLabels& markers, int connectivity = 4) {
  require(topography.same_shape(markers), Errc::shape_mismatch, "watershed topography and markers differ in shape");
  require(connectivity == 4 || connectivity == 8, Errc::invalid_argument, "connectivity must be 4 or 8");
  const int w = markers.width(), h = markers.height();
  RegionLabels labels = markers;
  bool any_marker = false;
  for (auto v : markers.pixels()) {
    require(v >= 0, Errc::invalid_argument, "negative marker label");
    any_marker = any_marker || v > 0;
  }
  require(any_marker, Errc::invalid_argument, "watershed needs at least one positive marker");
  for (auto v : topography.pixels()) require(std::isfinite(v), Errc::invalid_argument, "non-finite topography");

  using Entry = std::tuple<float, std::uint64_t, std::size_t>;  // value, age, index
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::vector<std::uint8_t> visited(labels.size(), 0);
  std::uint64_t age = 0;

  auto push_neighbors = [&](int x, int y) {
    for (int n = 0; n < connectivity; ++n) {
      const int nx = x + detail::kNeighborDx[n], ny = y + detail::kNeighborDy[n];
      if (!labels.contains(nx, ny)) continue;
      const std::size_t j = labels.index(nx, ny);
      if (labels[j] > 0 || visited[j]) continue;
      visited[j] = 1;
      queue.emplace(topography[j], age++, j);
    }
  };

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (labels(x, y) > 0) push_neighbors(x, y);

  while (!queue.empty()) {
    const auto [value, order, i] = queue.top();
    queue.pop();
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    std::int32_t label = 0;
    bool conflict = false;
    for (int n = 0; n < connectivity; ++n) {
      const int nx = x + detail::kNeighborDx[n], ny = y + detail::kNeighborDy[n];
      if (!labels.contains(nx, ny)) continue;
      const std::int32_t l = labels(nx, ny);
      if (l <= 0) continue;
      if (label == 0) {
        label = l;
      } else if (l != label) {
        conflict = true;
      }
    }
    if (conflict || label == 0) continue;  // watershed line
    labels[i] = label;
    push_neighbors(x, y);
  }
  return labels;
}

}  // namespace depseg
