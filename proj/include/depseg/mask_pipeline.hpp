#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"
#include "depseg/imgproc/connected_components.hpp"
#include "depseg/imgproc/morphology.hpp"

namespace depseg {

struct MaskPipelineConfig {
  float score_threshold = 0.0f;  // logits: positive = foreground
  int open_radius = 2;
  std::optional<int> min_mask_area;  // default: 64 px at 480x854, scaled by frame area
  int connectivity = 8;

  void validate() const {
    require(open_radius >= 0, Errc::invalid_argument, "mask open_radius must be >= 0");
    require(!min_mask_area || *min_mask_area >= 1, Errc::invalid_argument, "min_mask_area must be >= 1");
    require(connectivity == 4 || connectivity == 8, Errc::invalid_argument, "connectivity must be 4 or 8");
  }

  int effective_min_mask_area(int width, int height) const {
    if (min_mask_area) return *min_mask_area;
    return std::max(1, static_cast<int>(std::lround(64.0 * width * height / (480.0 * 854.0))));
  }
};

struct RefinedMask {
  BinaryMask mask;
  std::size_t area = 0;
  std::int32_t source = 0;  // priority label the component came from
};

struct RefinedMaskSet {
  std::vector<RefinedMask> masks;
};

inline BinaryMask score_to_mask(const ScoreMap& scores, const MaskPipelineConfig& cfg) {
  BinaryMask m(scores.width(), scores.height());
  for (std::size_t i = 0; i < scores.size(); ++i) m[i] = scores[i] > cfg.score_threshold ? 1 : 0;
  return m;
}

/// Opening, then the area filter. Input order is preserved.
inline std::vector<BinaryMask> refine_masks(const std::vector<BinaryMask>& raw, const MaskPipelineConfig& cfg) {
  cfg.validate();
  std::vector<BinaryMask> kept;
  for (const auto& m : raw) {
    BinaryMask opened = morph_open(m, cfg.open_radius);
    if (opened.area() >= static_cast<std::size_t>(cfg.effective_min_mask_area(m.width(), m.height())))
      kept.push_back(std::move(opened));
  }
  return kept;
}

/// Stable ascending-area order of mask indices.
inline std::vector<std::size_t> ascending_area_order(const std::vector<std::size_t>& areas) {
  std::vector<std::size_t> order(areas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return areas[a] < areas[b]; });
  return order;
}

/// Each pixel takes the 1-based rank (ascending area, ties by input index)
/// of the smallest mask covering it; uncovered pixels stay 0.
inline RegionLabels priority_merge(const std::vector<BinaryMask>& masks) {
  if (masks.empty()) return {};
  const int w = masks.front().width(), h = masks.front().height();
  std::vector<std::size_t> areas;
  for (const auto& m : masks) {
    require(m.width() == w && m.height() == h, Errc::shape_mismatch, "priority_merge masks differ in shape");
    areas.push_back(m.area());
  }
  const auto order = ascending_area_order(areas);
  RegionLabels labels(w, h);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const BinaryMask& m = masks[order[rank]];
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (m[i] && labels[i] == 0) labels[i] = static_cast<std::int32_t>(rank + 1);
  }
  return labels;
}

/// Splits every positive label into its connected components, label by label.
inline RefinedMaskSet decompose(const RegionLabels& labels, const MaskPipelineConfig& cfg) {
  cfg.validate();
  RefinedMaskSet out;
  const std::int32_t count = max_label(labels);
  for (std::int32_t l = 1; l <= count; ++l) {
    const BinaryMask support = mask_of(labels, l);
    const RegionLabels parts = connected_components(support, cfg.connectivity);
    const std::int32_t n = max_label(parts);
    std::vector<RefinedMask> pieces(static_cast<std::size_t>(n));
    for (auto& p : pieces) p.mask = BinaryMask(labels.width(), labels.height());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i] == 0) continue;
      auto& p = pieces[static_cast<std::size_t>(parts[i] - 1)];
      p.mask[i] = 1;
      ++p.area;
    }
    for (auto& p : pieces) {
      p.source = l;
      out.masks.push_back(std::move(p));
    }
  }
  return out;
}

struct LabeledMask {
  BinaryMask mask;
  std::uint16_t class_id = 0;
};

/// Small-area-first merge: visiting masks by ascending area (ties by input
/// index), each mask writes its class only into still-unlabeled pixels.
inline LabelMap final_merge(const std::vector<LabeledMask>& labeled, int width, int height) {
  LabelMap out(width, height, 0);
  std::vector<std::size_t> areas;
  for (const auto& lm : labeled) {
    require(lm.mask.width() == width && lm.mask.height() == height, Errc::shape_mismatch,
            "final_merge mask does not match frame shape");
    areas.push_back(lm.mask.area());
  }
  std::vector<std::uint8_t> taken(out.size(), 0);
  for (std::size_t idx : ascending_area_order(areas)) {
    const auto& lm = labeled[idx];
    for (std::size_t i = 0; i < out.size(); ++i)
      if (lm.mask[i] && !taken[i]) {
        out[i] = lm.class_id;
        taken[i] = 1;
      }
  }
  return out;
}

}  // namespace depseg
