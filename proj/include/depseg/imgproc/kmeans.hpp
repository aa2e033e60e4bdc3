#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/rng.hpp"

namespace depseg {

struct KMeansResult {
  std::vector<int> assignments;  // per input value, index into centers
  std::vector<float> centers;    // ascending
  double sse = 0.0;              // within-cluster sum of squares
};

namespace detail {

// Scalar Lloyd on sorted data: clusters are contiguous index ranges, so an
// iteration costs O(k log n) using prefix sums.
struct SortedScalarKMeans {
  std::vector<double> sorted;
  std::vector<double> prefix;  // prefix[i] = sum of sorted[0..i)

  explicit SortedScalarKMeans(std::span<const float> values) : sorted(values.begin(), values.end()) {
    std::sort(sorted.begin(), sorted.end());
    prefix.resize(sorted.size() + 1, 0.0);
    for (std::size_t i = 0; i < sorted.size(); ++i) prefix[i + 1] = prefix[i] + sorted[i];
  }

  // Values <= midpoint go to the lower center.
  std::vector<std::size_t> boundaries(const std::vector<double>& centers) const {
    std::vector<std::size_t> ends(centers.size());
    for (std::size_t c = 0; c + 1 < centers.size(); ++c) {
      const double mid = 0.5 * (centers[c] + centers[c + 1]);
      ends[c] = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), mid) - sorted.begin());
    }
    ends.back() = sorted.size();
    return ends;
  }

  double sse(const std::vector<double>& centers) const {
    auto ends = boundaries(centers);
    double total = 0.0;
    std::size_t begin = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      for (std::size_t i = begin; i < ends[c]; ++i) total += (sorted[i] - centers[c]) * (sorted[i] - centers[c]);
      begin = std::max(begin, ends[c]);
    }
    return total;
  }

  std::vector<double> seed_plus_plus(int k, Rng& rng) const {
    std::vector<double> centers;
    centers.push_back(sorted[uniform_index(rng, sorted.size())]);
    std::vector<double> d2(sorted.size());
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        double best = std::numeric_limits<double>::max();
        for (double ctr : centers) best = std::min(best, (sorted[i] - ctr) * (sorted[i] - ctr));
        d2[i] = best;
        total += best;
      }
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      std::size_t pick = sorted.size() - 1;
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // rounding can leave the tail pick on an existing center
      while (d2[pick] == 0.0 && pick > 0) --pick;
      centers.push_back(sorted[pick]);
    }
    std::sort(centers.begin(), centers.end());
    return centers;
  }

  std::vector<double> lloyd(std::vector<double> centers, int max_iter) const {
    for (int it = 0; it < max_iter; ++it) {
      auto ends = boundaries(centers);
      bool changed = false;
      std::size_t begin = 0;
      for (std::size_t c = 0; c < centers.size(); ++c) {
        const std::size_t end = std::max(begin, ends[c]);
        if (end > begin) {
          const double mean = (prefix[end] - prefix[begin]) / static_cast<double>(end - begin);
          if (mean != centers[c]) changed = true;
          centers[c] = mean;
        }
        begin = end;
      }
      if (!changed) break;
    }
    return centers;
  }
};

}  // namespace detail

/// K-means on scalar values with k-means++ seeding. `restarts` independent
/// seedings are run from one RNG stream; the lowest-SSE solution wins.
/// Deterministic for a fixed seed.
inline KMeansResult kmeans_scalar(std::span<const float> values, int k, std::uint64_t seed, int max_iter = 100,
                                  int restarts = 8) {
  require(k >= 1, Errc::invalid_argument, "k must be >= 1");
  require(!values.empty(), Errc::invalid_argument, "kmeans on empty input");
  require(max_iter >= 1 && restarts >= 1, Errc::invalid_argument, "max_iter and restarts must be >= 1");

  detail::SortedScalarKMeans km(values);
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < km.sorted.size(); ++i) distinct += km.sorted[i] != km.sorted[i - 1] ? 1 : 0;
  require(static_cast<std::size_t>(k) <= distinct, Errc::degenerate_input,
          "k=" + std::to_string(k) + " exceeds " + std::to_string(distinct) + " distinct values");

  Rng rng(seed);
  std::vector<double> best_centers;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    auto centers = km.lloyd(km.seed_plus_plus(k, rng), max_iter);
    std::sort(centers.begin(), centers.end());
    const double sse = km.sse(centers);
    if (sse < best_sse) {
      best_sse = sse;
      best_centers = centers;
    }
  }

  KMeansResult result;
  result.sse = best_sse;
  result.centers.assign(best_centers.begin(), best_centers.end());
  std::vector<double> mids;
  for (std::size_t c = 0; c + 1 < best_centers.size(); ++c) mids.push_back(0.5 * (best_centers[c] + best_centers[c + 1]));
  result.assignments.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    // first midpoint >= value; ties stay with the lower center
    result.assignments[i] =
        static_cast<int>(std::lower_bound(mids.begin(), mids.end(), static_cast<double>(values[i])) - mids.begin());
  }
  return result;
}

}  // namespace depseg
