// Library walk-through on synthetic scenes: register templates from
// annotated frames, segment held-out frames, report mIoU.

#include <iostream>
#include <string>

#include "depseg/depseg.hpp"

using namespace depseg;

int main() {
  TokenModel tokens;
  tokens.noise = 0.1f;

  SyntheticBackend train(tokens), test(tokens);
  for (std::uint64_t i = 0; i < 20; ++i) train.add("train_" + std::to_string(i), random_scene(mix_seed(1, i)));
  for (std::uint64_t i = 0; i < 10; ++i) test.add("test_" + std::to_string(i), random_scene(mix_seed(2, i)));

  TemplateBank bank;
  for (const auto& id : train.frame_ids()) {
    const RenderedScene scene = train.render(id);
    for (auto& [class_id, descriptor] : register_frame(scene.tokens, scene.gt)) bank.add(class_id, std::move(descriptor));
  }

  const PipelineConfig cfg;
  IoUReport acc;
  for (const auto& id : test.frame_ids()) {
    const FrameResult r = segment_frame(test, id, bank, cfg);
    accumulate(r.labels, test.gt_of(id), acc);
    std::cout << id << ": " << r.prompts.regions.size() << " regions, " << r.masks.masks.size() << " masks\n";
  }
  std::cout << format_table(finalize(acc));
}
