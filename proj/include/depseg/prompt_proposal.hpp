#pragma once

// Depth-guided point prompts: relative depth, the classical region proposal
// operator, region cleaning and interior prompt extraction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"
#include "depseg/imgproc.hpp"

namespace depseg {

struct ProposalConfig {
  int kmeans_k = 4;
  float canny_low = 40.0f;   // u8 depth scale
  float canny_high = 120.0f;
  int open_radius = 2;
  int close_radius = 2;
  std::optional<int> min_region_area;  // default: 0.2% of the image
  std::optional<int> min_distance;     // default: 5% of min(H, W)
  int border_margin = 8;
  int max_points_per_region = 3;
  int max_total_points = 0;  // 0 = unlimited; near regions are served first
  bool near_is_high = false;  // true for disparity-like maps (larger = closer)
  std::uint64_t seed = 0;

  void validate() const {
    require(kmeans_k >= 1, Errc::invalid_argument, "kmeans_k must be >= 1");
    require(canny_low >= 0.0f && canny_high >= canny_low, Errc::invalid_argument, "need canny_high >= canny_low >= 0");
    require(open_radius >= 0 && close_radius >= 0 && border_margin >= 0 && max_points_per_region >= 0 &&
                max_total_points >= 0,
            Errc::invalid_argument, "proposal counts must be >= 0");
    require(!min_region_area || *min_region_area >= 0, Errc::invalid_argument, "min_region_area must be >= 0");
    require(!min_distance || *min_distance >= 1, Errc::invalid_argument, "min_distance must be >= 1");
  }

  int effective_min_region_area(int width, int height) const {
    if (min_region_area) return *min_region_area;
    return std::max(1, static_cast<int>(std::lround(0.002 * width * height)));
  }
  int effective_min_distance(int width, int height) const {
    if (min_distance) return *min_distance;
    return std::max(1, static_cast<int>(std::lround(0.05 * std::min(width, height))));
  }
};

struct RegionPrompts {
  std::int32_t region = 0;  // label in the proposal map
  bool near = false;        // on the near side of the Otsu depth split
  std::vector<Point> points;

  friend bool operator==(const RegionPrompts&, const RegionPrompts&) = default;
};

/// Prompt lists in serving order (near regions first).
struct PromptSet {
  int width = 0;
  int height = 0;
  std::vector<RegionPrompts> regions;

  std::size_t total_points() const {
    std::size_t n = 0;
    for (const auto& r : regions) n += r.points.size();
    return n;
  }

  friend bool operator==(const PromptSet&, const PromptSet&) = default;
};

/// d - median(d); the lower median is used for even pixel counts.
inline DepthMap relative_depth(const DepthMap& d) {
  require(!d.empty(), Errc::invalid_argument, "empty depth map");
  for (float v : d.pixels()) require(std::isfinite(v), Errc::invalid_argument, "depth map contains NaN or Inf");
  std::vector<float> sorted(d.pixels().begin(), d.pixels().end());
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>((sorted.size() - 1) / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double median = *mid;
  DepthMap out(d.width(), d.height());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = static_cast<float>(static_cast<double>(d[i]) - median);
  return out;
}

/// Min-max normalization onto integer levels 0..255. A constant map maps to 0.
inline Image<std::uint8_t> quantize_depth_u8(const DepthMap& d) {
  Image<std::uint8_t> q(d.width(), d.height());
  if (d.empty()) return q;
  const auto [lo, hi] = std::minmax_element(d.pixels().begin(), d.pixels().end());
  const double min = *lo, range = static_cast<double>(*hi) - min;
  if (!(range > 0.0)) return q;
  for (std::size_t i = 0; i < d.size(); ++i)
    q[i] = static_cast<std::uint8_t>(std::lround(255.0 * (static_cast<double>(d[i]) - min) / range));
  return q;
}

/// Region proposals from relative depth.
///
/// Everything after quantization runs on integer depth levels:
///  (a) scalar k-means on the levels gives depth strata;
///  (b) Otsu on the level histogram gives the near/far split;
///  (c) Canny on the level image marks depth edges;
///  (d) stratum pixels away from edges, split into connected pieces, become
///      watershed markers;
///  (e) watershed on the Sobel magnitude of the levels grows the markers.
/// Regions smaller than the minimum area are dropped; the rest are
/// relabeled 1..M with near regions first.
inline RegionLabels propose_regions(const DepthMap& d_rel, const ProposalConfig& cfg,
                                    std::vector<bool>* near_flags = nullptr) {
  cfg.validate();
  require(!d_rel.empty(), Errc::invalid_argument, "empty depth map");
  const int w = d_rel.width(), h = d_rel.height();
  const auto q = quantize_depth_u8(d_rel);
  const auto histogram = histogram_u8(q);
  const int distinct = static_cast<int>(std::count_if(histogram.begin(), histogram.end(), [](auto c) { return c > 0; }));

  // (a)
  std::vector<float> levels(q.pixels().begin(), q.pixels().end());
  const auto strata = kmeans_scalar(levels, std::min(cfg.kmeans_k, distinct), cfg.seed);
  // (b)
  const int otsu = otsu_threshold(histogram);
  // (c)
  Image<float> qf(w, h);
  std::copy(levels.begin(), levels.end(), qf.pixels().begin());
  const BinaryMask edge_band = dilate(canny(qf, cfg.canny_low, cfg.canny_high), 1);

  // (d)
  const int min_area = cfg.effective_min_region_area(w, h);
  const std::size_t min_marker_area = static_cast<std::size_t>(std::max(1, min_area / 8));
  auto build_markers = [&](bool use_edges) {
    RegionLabels markers(w, h);
    std::int32_t next = 0;
    for (std::size_t s = 0; s < strata.centers.size(); ++s) {
      BinaryMask interior(w, h);
      for (std::size_t i = 0; i < interior.size(); ++i)
        interior[i] = strata.assignments[i] == static_cast<int>(s) && !(use_edges && edge_band[i]) ? 1 : 0;
      if (use_edges) interior = erode(interior, 1);
      const auto pieces = connected_components(interior, 4);
      const std::int32_t count = max_label(pieces);
      std::vector<std::size_t> area(static_cast<std::size_t>(count) + 1, 0);
      for (auto l : pieces.pixels()) ++area[l];
      std::vector<std::int32_t> relabel(static_cast<std::size_t>(count) + 1, 0);
      for (std::int32_t l = 1; l <= count; ++l)
        if (area[l] >= min_marker_area) relabel[l] = ++next;
      for (std::size_t i = 0; i < pieces.size(); ++i)
        if (pieces[i] > 0 && relabel[pieces[i]] > 0) markers[i] = relabel[pieces[i]];
    }
    return std::pair{markers, next};
  };
  auto [markers, marker_count] = build_markers(true);
  if (marker_count == 0) std::tie(markers, marker_count) = build_markers(false);
  if (marker_count == 0) {
    // every stratum is tiny: fall back to one marker over the whole frame
    markers = RegionLabels(w, h, 1);
    marker_count = 1;
  }

  // (e)
  const RegionLabels flooded = watershed(sobel(qf).magnitude, markers, 4);

  std::vector<std::size_t> area(static_cast<std::size_t>(marker_count) + 1, 0);
  std::vector<std::uint64_t> level_sum(static_cast<std::size_t>(marker_count) + 1, 0);
  for (std::size_t i = 0; i < flooded.size(); ++i) {
    ++area[flooded[i]];
    level_sum[flooded[i]] += q[i];
  }
  struct Kept {
    std::int32_t label;
    bool near;
  };
  std::vector<Kept> kept;
  for (std::int32_t l = 1; l <= marker_count; ++l) {
    if (area[l] == 0 || area[l] < static_cast<std::size_t>(min_area)) continue;
    const double mean_level = static_cast<double>(level_sum[l]) / static_cast<double>(area[l]);
    const bool near = cfg.near_is_high ? mean_level > otsu : mean_level <= otsu;
    kept.push_back({l, near});
  }
  std::stable_partition(kept.begin(), kept.end(), [](const Kept& k) { return k.near; });

  std::vector<std::int32_t> relabel(static_cast<std::size_t>(marker_count) + 1, 0);
  if (near_flags) near_flags->assign(1, false);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    relabel[kept[i].label] = static_cast<std::int32_t>(i + 1);
    if (near_flags) near_flags->push_back(kept[i].near);
  }
  RegionLabels out(w, h);
  for (std::size_t i = 0; i < flooded.size(); ++i) out[i] = relabel[flooded[i]];
  return out;
}

/// Overload carrying the frame: the RGB image only has to agree in shape.
inline RegionLabels propose_regions(const DepthMap& d_rel, const RgbImage& rgb, const ProposalConfig& cfg,
                                    std::vector<bool>* near_flags = nullptr) {
  require(rgb.same_shape(d_rel), Errc::shape_mismatch, "depth and RGB frame differ in shape");
  return propose_regions(d_rel, cfg, near_flags);
}

inline BinaryMask clean_region(const BinaryMask& mask, const ProposalConfig& cfg) {
  return morph_close(morph_open(mask, cfg.open_radius), cfg.close_radius);
}

inline std::vector<Point> propose_points(const BinaryMask& region, const ProposalConfig& cfg) {
  const int w = region.width(), h = region.height();
  return local_maxima(distance_transform(region), cfg.effective_min_distance(w, h), cfg.border_margin,
                      cfg.max_points_per_region);
}

/// Full prompt path for one frame: relative depth through interior points.
inline PromptSet propose_prompts(const DepthMap& depth, const ProposalConfig& cfg) {
  const DepthMap d_rel = relative_depth(depth);
  std::vector<bool> near;
  const RegionLabels regions = propose_regions(d_rel, cfg, &near);
  PromptSet prompts{depth.width(), depth.height(), {}};
  std::size_t budget = cfg.max_total_points > 0 ? static_cast<std::size_t>(cfg.max_total_points) : SIZE_MAX;
  const std::int32_t count = max_label(regions);
  for (std::int32_t label = 1; label <= count && budget > 0; ++label) {
    auto points = propose_points(clean_region(mask_of(regions, label), cfg), cfg);
    if (points.empty()) continue;
    if (points.size() > budget) points.resize(budget);
    budget -= points.size();
    prompts.regions.push_back({label, near[static_cast<std::size_t>(label)], std::move(points)});
  }
  return prompts;
}

}  // namespace depseg
