#pragma once

// Frame-level composition: prompts -> score maps -> refined masks ->
// template matching -> small-area-first label map.

#include <string>
#include <vector>

#include "depseg/backends.hpp"
#include "depseg/mask_pipeline.hpp"
#include "depseg/matcher.hpp"
#include "depseg/prompt_proposal.hpp"
#include "depseg/template_bank.hpp"

namespace depseg {

enum class MatcherKind { templates, baseline };

struct PipelineConfig {
  ProposalConfig proposal;
  MaskPipelineConfig masks;
  int top_k = kDefaultTopK;
  double fraction = 1.0;
  std::uint64_t seed = 0;  // bank subsampling
};

struct FrameResult {
  LabelMap labels;
  PromptSet prompts;
  RefinedMaskSet masks;
  std::vector<std::uint16_t> classes;  // one per refined mask
};

inline PromptSet frame_prompts(const Backend& backend, const std::string& frame_id, const PipelineConfig& cfg) {
  return propose_prompts(backend.depth_of(frame_id), cfg.proposal);
}

/// Masks for a prompt set: one score map per region (all of the region's
/// points in one request), thresholded, opened, area-filtered, priority
/// merged and split into connected pieces.
inline RefinedMaskSet frame_masks(const Backend& backend, const std::string& frame_id, const PromptSet& prompts,
                                  const MaskPipelineConfig& cfg) {
  std::vector<BinaryMask> raw;
  for (const auto& region : prompts.regions) {
    const ScoreMap scores = backend.score_map_for(frame_id, region.points);
    require(scores.width() == prompts.width && scores.height() == prompts.height, Errc::shape_mismatch,
            "score map of frame '" + frame_id + "' does not match the frame");
    raw.push_back(score_to_mask(scores, cfg));
  }
  const auto refined = refine_masks(raw, cfg);
  if (refined.empty()) return {};
  return decompose(priority_merge(refined), cfg);
}

template <typename Classifier>
FrameResult segment_with(const Backend& backend, const std::string& frame_id, const PipelineConfig& cfg,
                         Classifier&& classify_mask) {
  FrameResult result;
  result.prompts = frame_prompts(backend, frame_id, cfg);
  result.masks = frame_masks(backend, frame_id, result.prompts, cfg.masks);
  std::vector<LabeledMask> labeled;
  for (const auto& m : result.masks.masks) {
    const std::uint16_t c = classify_mask(m.mask);
    result.classes.push_back(c);
    labeled.push_back({m.mask, c});
  }
  result.labels = final_merge(labeled, result.prompts.width, result.prompts.height);
  return result;
}

/// Full pipeline for one frame against a (possibly subsampled) bank.
inline FrameResult segment_frame(const Backend& backend, const std::string& frame_id, const TemplateBank& bank,
                                 const PipelineConfig& cfg) {
  require(bank.template_count() > 0, Errc::empty_bank, "segmentation needs a nonempty template bank");
  const TokenGrid tokens = backend.token_grid_of(frame_id);
  require(tokens.dim() == bank.dim, Errc::dimension_mismatch,
          "token dim " + std::to_string(tokens.dim()) + " of frame '" + frame_id + "' != bank dim " +
              std::to_string(bank.dim));
  return segment_with(backend, frame_id, cfg,
                      [&](const BinaryMask& m) { return classify(mask_descriptor(tokens, m), bank, cfg.top_k); });
}

inline FrameResult segment_frame_baseline(const Backend& backend, const std::string& frame_id,
                                          const BaselinePrototypes& prototypes, const PipelineConfig& cfg) {
  const auto rgb = backend.rgb_of(frame_id);
  require(rgb.has_value(), Errc::missing_frame, "baseline matcher needs the RGB frame of '" + frame_id + "'");
  return segment_with(backend, frame_id, cfg,
                      [&](const BinaryMask& m) { return baseline_classify(baseline_descriptor(*rgb, m), prototypes); });
}

}  // namespace depseg
