#pragma once

#include <algorithm>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"

namespace depseg {

/// Peaks of a scalar map, strongest first.
///
/// A candidate is a strictly positive pixel outside the border margin whose
/// value is >= every pixel within Euclidean radius `min_distance`.
/// Candidates are visited by descending value (row-major on ties) and kept
/// when at least `min_distance` away from every kept point.
inline std::vector<Point> local_maxima(const Image<float>& map, int min_distance, int border_margin, int max_points) {
  require(min_distance >= 1, Errc::invalid_argument, "min_distance must be >= 1");
  require(border_margin >= 0 && max_points >= 0, Errc::invalid_argument, "negative margin or point budget");
  const int w = map.width(), h = map.height();
  std::vector<Point> result;
  if (max_points == 0) return result;

  const int r2 = min_distance * min_distance;
  std::vector<Point> candidates;
  for (int y = border_margin; y < h - border_margin; ++y) {
    for (int x = border_margin; x < w - border_margin; ++x) {
      const float v = map(x, y);
      if (!(v > 0.0f)) continue;
      // cheap rejection on the neighbours inside the disk (no diagonals at radius 1)
      bool peak = true;
      for (int dy = -1; dy <= 1 && peak; ++dy)
        for (int dx = -1; dx <= 1 && peak; ++dx)
          if (dx * dx + dy * dy <= r2 && map.contains(x + dx, y + dy) && map(x + dx, y + dy) > v) peak = false;
      for (int dy = -min_distance; dy <= min_distance && peak; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -min_distance; dx <= min_distance; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w || dx * dx + dy * dy > r2) continue;
          if (map(xx, yy) > v) {
            peak = false;
            break;
          }
        }
      }
      if (peak) candidates.push_back({x, y});
    }
  }

  // candidates are already row-major, so a stable sort keeps that tie order
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](const Point& a, const Point& b) { return map(a) > map(b); });
  for (const Point& c : candidates) {
    const bool separated = std::all_of(result.begin(), result.end(), [&](const Point& p) {
      const int dx = p.x - c.x, dy = p.y - c.y;
      return dx * dx + dy * dy >= r2;
    });
    if (!separated) continue;
    result.push_back(c);
    if (static_cast<int>(result.size()) == max_points) break;
  }
  return result;
}

}  // namespace depseg
