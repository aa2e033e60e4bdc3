// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: depseg_acceptance [path-to-depseg-cli]

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "depseg/depseg.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace depseg;
using testing_support::random_blobs;
using testing_support::random_mask;
using testing_support::random_smooth;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run(const std::string& name, const std::function<Outcome()>& body) {
  try {
    report(name, body());
  } catch (const std::exception& e) {
    report(name, {false, std::string("exception: ") + e.what()});
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// kernel oracles

constexpr int kInstances = 500;

// Returns the index of the first disagreeing instance, or -1.
int check_kernel(std::uint64_t seed, const std::function<bool(std::mt19937_64&, int)>& agree) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < kInstances; ++i)
    if (!agree(rng, i)) return i;
  return -1;
}

int dim64(std::mt19937_64& rng) { return 1 + int(rng() % 64); }

std::vector<float> random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<float> g;
  std::vector<float> v(static_cast<std::size_t>(dim));
  double n = 0.0;
  for (auto& x : v) {
    x = g(rng);
    n += double(x) * x;
  }
  n = std::sqrt(n);
  if (n == 0.0) v[0] = 1.0f, n = 1.0;
  for (auto& x : v) x = static_cast<float>(x / n);
  return v;
}

// Up to 5 classes with up to 20 unit templates each.
TemplateBank random_bank(std::mt19937_64& rng, int dim) {
  TemplateBank bank;
  bank.dim = dim;
  const int classes = 1 + int(rng() % 5);
  for (int c = 0; c < classes; ++c) {
    const auto id = static_cast<std::uint16_t>(rng() % 13);
    const int count = 1 + int(rng() % 20);
    auto& list = bank.classes[id];
    list.clear();
    for (int l = 0; l < count; ++l) list.push_back(random_unit(rng, dim));
  }
  return bank;
}

std::vector<BinaryMask> random_mask_set(std::mt19937_64& rng, int w, int h) {
  std::vector<BinaryMask> masks;
  const int n = 1 + int(rng() % 6);
  for (int i = 0; i < n; ++i) masks.push_back(random_blobs(rng, w, h, 1 + int(rng() % 3)));
  return masks;
}

Outcome kernel_oracles() {
  const auto t0 = Clock::now();
  std::vector<std::pair<std::string, int>> results;

  results.emplace_back("distance_transform", check_kernel(101, [](std::mt19937_64& rng, int i) {
    const int w = dim64(rng), h = dim64(rng);
    const auto m = i % 3 ? random_blobs(rng, w, h, 3) : random_mask(rng, w, h, 0.85);
    const auto a = distance_transform(m), b = oracle::distance(m);
    for (std::size_t p = 0; p < a.size(); ++p)
      if (std::abs(a[p] - b[p]) > 1e-4) return false;
    return true;
  }));

  results.emplace_back("otsu", check_kernel(102, [](std::mt19937_64& rng, int) {
    Histogram256 hist{};
    const int nonzero = 1 + int(rng() % 40);
    for (int i = 0; i < nonzero; ++i) hist[rng() % 256] += 1 + rng() % 1000;
    const int t = otsu_threshold(hist), o = oracle::otsu(hist);
    // Distinct thresholds are accepted only when they are tied in variance.
    const double vt = oracle::otsu_variance(hist, t), vo = oracle::otsu_variance(hist, o);
    return t == o || std::abs(vt - vo) <= 1e-12 * std::max(1.0, vo);
  }));

  results.emplace_back("watershed", check_kernel(103, [](std::mt19937_64& rng, int i) {
    const int w = dim64(rng), h = dim64(rng);
    auto topo = random_smooth(rng, w, h);
    if (i % 5 == 0)
      for (auto& v : topo.pixels()) v = std::round(v * 6.0f);  // plateaus
    RegionLabels markers(w, h, 0);
    const int labels = 1 + int(rng() % 5);
    for (int l = 1; l <= labels; ++l) markers(int(rng() % w), int(rng() % h)) = l;
    const int conn = i % 2 ? 8 : 4;
    return watershed(topo, markers, conn) == oracle::flood(topo, markers, conn);
  }));

  results.emplace_back("connected_components", check_kernel(104, [](std::mt19937_64& rng, int i) {
    const int w = dim64(rng), h = dim64(rng);
    const auto m = random_mask(rng, w, h, 0.3 + 0.2 * double(i % 3));
    const int conn = i % 2 ? 4 : 8;
    return connected_components(m, conn) == oracle::components(m, conn);
  }));

  results.emplace_back("local_maxima", check_kernel(105, [](std::mt19937_64& rng, int i) {
    const int w = dim64(rng), h = dim64(rng);
    Image<float> map = random_smooth(rng, w, h);
    if (i % 4 == 0)
      for (auto& v : map.pixels()) v = std::round(v * 8.0f) / 8.0f - 0.3f;
    const int md = 1 + int(rng() % 8), margin = int(rng() % 4), maxp = 1 + int(rng() % 10);
    return local_maxima(map, md, margin, maxp) == oracle::maxima(map, md, margin, maxp);
  }));

  results.emplace_back("priority_merge", check_kernel(106, [](std::mt19937_64& rng, int) {
    const int w = dim64(rng), h = dim64(rng);
    const auto masks = random_mask_set(rng, w, h);
    return priority_merge(masks) == oracle::priority_merge(masks, w, h);
  }));

  results.emplace_back("final_merge", check_kernel(107, [](std::mt19937_64& rng, int) {
    const int w = dim64(rng), h = dim64(rng);
    std::vector<LabeledMask> labeled;
    for (auto& m : random_mask_set(rng, w, h)) labeled.push_back({std::move(m), std::uint16_t(1 + rng() % 12)});
    return final_merge(labeled, w, h) == oracle::final_merge(labeled, w, h);
  }));

  results.emplace_back("topk_aggregate", check_kernel(108, [](std::mt19937_64& rng, int) {
    const int dim = 1 + int(rng() % 64);
    const TemplateBank bank = random_bank(rng, dim);
    const auto h = random_unit(rng, dim);
    const int k = 1 + int(rng() % 25);
    const auto sims = cosine_scores(h, bank);
    const auto scores = topk_aggregate(sims, k);
    for (const auto& [id, list] : bank.classes) {
      std::vector<float> naive;
      for (const auto& t : list) {
        const double d = oracle::naive_dot(h, t);
        if (std::abs(d - sims.at(id)[naive.size()]) > 1e-6) return false;
        naive.push_back(static_cast<float>(d));
      }
      if (std::abs(scores.at(id) - oracle::topk_sum(naive, k)) > 1e-6 * k) return false;
    }
    return true;
  }));

  results.emplace_back("classify", check_kernel(109, [](std::mt19937_64& rng, int i) {
    const int dim = 1 + int(rng() % 64);
    TemplateBank bank = random_bank(rng, dim);
    // Duplicate a class now and then so the smallest-id tie rule is exercised.
    if (i % 7 == 0 && bank.classes.size() < 5) {
      std::uint16_t fresh = 0;
      while (bank.classes.contains(fresh)) ++fresh;
      bank.classes[fresh] = bank.classes.begin()->second;
    }
    const auto h = random_unit(rng, dim);
    const int k = 1 + int(rng() % 10);
    return classify(h, bank, k) == oracle::classify(h, bank, k);
  }));

  results.emplace_back("IoU", check_kernel(110, [](std::mt19937_64& rng, int) {
    const int w = dim64(rng), h = dim64(rng);
    const int classes = 1 + int(rng() % 6);
    LabelMap pred(w, h), gt(w, h);
    for (std::size_t p = 0; p < pred.size(); ++p) {
      gt[p] = std::uint16_t(rng() % classes);
      pred[p] = rng() % 4 ? gt[p] : std::uint16_t(rng() % classes);
    }
    IoUReport acc;
    accumulate(pred, gt, acc);
    const auto rep = finalize(acc);
    const auto ref = oracle::iou_counts(pred, gt);
    double sum = 0.0;
    for (const auto& [id, u] : ref.uni) {
      const auto& c = rep.counts.at(id);
      if (c.intersection != ref.inter.at(id) || c.union_ != u) return false;
      const double v = double(ref.inter.at(id)) / double(u);
      if (std::abs(rep.iou.at(id) - v) > 1e-12) return false;
      sum += v;
    }
    return rep.miou && std::abs(*rep.miou - sum / double(ref.uni.size())) <= 1e-12;
  }));

  const double secs = seconds_since(t0);
  Outcome o;
  std::ostringstream detail;
  for (const auto& [name, bad] : results) {
    if (bad >= 0) {
      o.pass = false;
      detail << name << " differs at instance " << bad << "; ";
    }
  }
  detail << results.size() << " kernels x " << kInstances << " instances in " << fmt("%.1f", secs) << " s (limit 60)";
  if (secs >= 60.0) o.pass = false;
  o.detail = detail.str();
  return o;
}

// ---------------------------------------------------------------------------
// determinism through the CLI

int shell(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

std::string sh_quote(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome determinism(const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not found: '" + cli + "'"};
  const fs::path dir = fs::temp_directory_path() / "depseg_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string exe = sh_quote(cli);
  const fs::path data = dir / "data", manifest = data / "manifest.tsv", bank = dir / "bank.bin";
  if (shell(exe + " synth --out " + sh_quote(data) + " --scenes 8 --seed 0") != 0) return {false, "synth failed"};
  if (shell(exe + " register --manifest " + sh_quote(manifest) + " --gt " + sh_quote(data / "gt") + " --out " +
            sh_quote(bank)) != 0)
    return {false, "register failed"};
  for (const char* run : {"run1", "run2"})
    if (shell(exe + " segment --manifest " + sh_quote(manifest) + " --bank " + sh_quote(bank) + " --seed 0 --overlay --out " +
              sh_quote(dir / run)) != 0)
      return {false, std::string("segment ") + run + " failed"};

  std::size_t tensors = 0, overlays = 0;
  for (const auto& e : fs::directory_iterator(dir / "run1")) {
    const auto name = e.path().filename();
    const fs::path other = dir / "run2" / name;
    if (!fs::exists(other)) return {false, name.string() + " missing from the second run"};
    if (read_bytes(e.path()) != read_bytes(other)) return {false, name.string() + " differs between runs"};
    tensors += e.path().extension() == ".tns";
    overlays += e.path().extension() == ".ppm";
  }
  std::size_t second = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "run2")) ++second;
  if (second != tensors + overlays) return {false, "runs produced different file sets"};
  if (tensors != 8 || overlays != 8) return {false, "expected 8 label maps and 8 overlays"};
  fs::remove_all(dir);
  return {true, std::to_string(tensors) + " label maps and " + std::to_string(overlays) + " overlays byte-identical"};
}

// ---------------------------------------------------------------------------
// shift invariance

Outcome shift_invariance() {
  const ProposalConfig cfg;
  int maps = 0;
  std::size_t regions = 0;
  for (std::uint64_t s = 0; s < 20; ++s, ++maps) {
    SyntheticBackend synth;
    synth.add("f", random_scene(mix_seed(77, s)));
    const DepthMap d = synth.depth_of("f");
    const PromptSet base = propose_prompts(d, cfg);
    regions += base.regions.size();
    for (float c : {-5.0f, 0.7f, 100.0f}) {
      DepthMap shifted = d;
      for (auto& v : shifted.pixels()) v += c;
      if (!(propose_prompts(shifted, cfg) == base))
        return {false, "map " + std::to_string(s) + " changes under shift " + fmt("%g", c)};
    }
  }
  return {true, std::to_string(maps) + " depth maps, " + std::to_string(regions) + " regions, shifts {-5, 0.7, 100}"};
}

// ---------------------------------------------------------------------------
// synthetic end to end

SyntheticBackend make_scenes(const TokenModel& model, std::uint64_t seed, int count, const SceneGenParams& gen,
                             const std::string& prefix) {
  SyntheticBackend b(model);
  for (int i = 0; i < count; ++i) b.add(prefix + std::to_string(i), random_scene(mix_seed(seed, std::uint64_t(i)), gen));
  return b;
}

TemplateBank register_all(const SyntheticBackend& b) {
  TemplateBank bank;
  for (const auto& id : b.frame_ids()) {
    const auto scene = b.render(id);
    for (auto& [c, d] : register_frame(scene.tokens, scene.gt)) bank.add(c, std::move(d));
    bank.frames.push_back(id);
  }
  return bank;
}

double dataset_miou(const SyntheticBackend& b, const TemplateBank& bank, const PipelineConfig& cfg) {
  IoUReport acc;
  for (const auto& id : b.frame_ids()) accumulate(segment_frame(b, id, bank, cfg).labels, b.gt_of(id), acc);
  return *finalize(acc).miou;
}

Outcome synthetic_end_to_end() {
  const auto t0 = Clock::now();
  TokenModel model;
  model.noise = 0.1f;
  const SceneGenParams gen;
  const auto train = make_scenes(model, 1000, 20, gen, "train_");
  const auto test = make_scenes(model, 2000, 50, gen, "test_");
  const TemplateBank bank = register_all(train);
  const double miou = dataset_miou(test, bank, PipelineConfig{});
  const double secs = seconds_since(t0);
  return {miou >= 0.90 && secs < 300.0, "mIoU " + fmt("%.4f", miou) + " over 50 scenes (>= 0.90), " + fmt("%.1f", secs) +
                                            " s single-threaded (limit 300)"};
}

// ---------------------------------------------------------------------------
// template fraction

Outcome frac_monotonicity() {
  // Several appearance modes per class and heavier token noise, so a single
  // template cannot stand in for the whole class.
  TokenModel model;
  model.noise = 0.6f;
  model.mode_spread = 1.5f;
  SceneGenParams gen;
  gen.num_modes = 6;
  constexpr std::size_t kPerClass = 100;

  SyntheticBackend train(model);
  TemplateBank full;
  for (std::uint64_t i = 0;; ++i) {
    const std::string id = "train_" + std::to_string(i);
    train.add(id, random_scene(mix_seed(3000, i), gen));
    const auto scene = train.render(id);
    for (auto& [c, d] : register_frame(scene.tokens, scene.gt))
      if (full.classes[c].size() < kPerClass) full.add(c, std::move(d));
    bool done = full.classes.size() == std::size_t(gen.num_classes) + 1;
    for (const auto& [c, list] : full.classes) done = done && list.size() == kPerClass;
    if (done) break;
    if (i > 2000) return {false, "could not collect 100 templates per class"};
  }

  const std::vector<double> fracs = {0.01, 0.05, 0.1, 0.25, 0.5, 1.0};
  std::vector<double> mean(fracs.size(), 0.0);
  constexpr int kSeeds = 5;
  for (int s = 0; s < kSeeds; ++s) {
    const auto test = make_scenes(model, mix_seed(4000, std::uint64_t(s)), 20, gen, "test_");
    for (std::size_t f = 0; f < fracs.size(); ++f) {
      PipelineConfig cfg;
      cfg.fraction = fracs[f];
      cfg.seed = std::uint64_t(s);
      const TemplateBank bank = subsample_bank(full, cfg.fraction, cfg.seed);
      for (const auto& [c, list] : bank.classes)
        if (list.empty()) return {false, "frac " + fmt("%g", fracs[f]) + " left class " + std::to_string(c) + " empty"};
      mean[f] += dataset_miou(test, bank, cfg) / kSeeds;
    }
  }
  std::ostringstream detail;
  detail << "mean mIoU over " << kSeeds << " seeds:";
  for (std::size_t f = 0; f < fracs.size(); ++f) detail << " frac " << fracs[f] << "=" << fmt("%.4f", mean[f]);
  detail << "; every class kept >= 1 template";
  return {mean.back() >= mean.front(), detail.str()};
}

// ---------------------------------------------------------------------------
// merge semantics

BinaryMask rect(int n, int x0, int y0, int w, int h) {
  BinaryMask m(n, n);
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) m.set(x, y);
  return m;
}

// Every outer rectangle anchored at the origin of a 16x16 canvas and every
// rectangle inside it, in both input orders.
Outcome merge_semantics() {
  constexpr int n = 16;
  constexpr std::uint16_t inner_class = 3, outer_class = 5;
  std::size_t configs = 0;
  for (int ow = 1; ow <= n; ++ow)
    for (int oh = 1; oh <= n; ++oh) {
      const BinaryMask outer = rect(n, 0, 0, ow, oh);
      for (int iw = 1; iw <= ow; ++iw)
        for (int ih = 1; ih <= oh; ++ih)
          for (int ix = 0; ix + iw <= ow; ++ix)
            for (int iy = 0; iy + ih <= oh; ++iy) {
              const BinaryMask inner = rect(n, ix, iy, iw, ih);
              const bool equal = iw == ow && ih == oh;
              for (int order = 0; order < 2; ++order) {
                std::vector<LabeledMask> labeled = {{inner, inner_class}, {outer, outer_class}};
                if (order) std::swap(labeled[0], labeled[1]);
                const LabelMap out = final_merge(labeled, n, n);
                // Equal masks: the earlier one in input order wins the tie.
                const std::uint16_t overlap = equal ? labeled[0].class_id : inner_class;
                for (int y = 0; y < n; ++y)
                  for (int x = 0; x < n; ++x) {
                    const std::uint16_t want = inner.test(x, y) ? overlap : outer.test(x, y) ? outer_class : 0;
                    if (out(x, y) != want) {
                      std::ostringstream msg;
                      msg << "outer " << ow << "x" << oh << ", inner " << iw << "x" << ih << " at (" << ix << "," << iy
                          << "), order " << order << ": pixel (" << x << "," << y << ") is " << out(x, y)
                          << ", expected " << want;
                      return {false, msg.str()};
                    }
                  }
                ++configs;
              }
            }
    }
  return {true, std::to_string(configs) + " nested configurations on a 16x16 canvas"};
}

// ---------------------------------------------------------------------------
// round trips

Outcome round_trips() {
  const fs::path dir = fs::temp_directory_path() / "depseg_acceptance_roundtrip";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::mt19937_64 rng(909);
  for (int i = 0; i < 100; ++i) {
    std::vector<std::size_t> shape(1 + rng() % kMaxTensorRank);
    for (auto& d : shape) d = 1 + rng() % 9;
    const std::size_t count = Tensor::element_count(shape);
    Tensor t;
    switch (i % 3) {
      case 0: {
        std::vector<float> v(count);
        // arbitrary bit patterns, NaN payloads and infinities included
        for (auto& x : v) x = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
        t = Tensor(shape, std::move(v));
        break;
      }
      case 1: {
        std::vector<std::uint8_t> v(count);
        for (auto& x : v) x = static_cast<std::uint8_t>(rng());
        t = Tensor(shape, std::move(v));
        break;
      }
      default: {
        std::vector<std::uint16_t> v(count);
        for (auto& x : v) x = static_cast<std::uint16_t>(rng());
        t = Tensor(shape, std::move(v));
      }
    }
    const fs::path p = dir / "t.tns";
    write_tensor(t, p);
    const Tensor back = read_tensor(p);
    if (!(back == t) || encode_tensor(back) != read_bytes(p))
      return {false, "tensor instance " + std::to_string(i) + " does not round-trip"};
  }
  for (int i = 0; i < 100; ++i) {
    const int dim = 1 + int(rng() % 64);
    TemplateBank bank;
    bank.dim = dim;
    const int classes = 1 + int(rng() % 6);
    for (int c = 0; c < classes; ++c) {
      auto& list = bank.classes[std::uint16_t(rng() % 200)];
      list.clear();
      const int count = 1 + int(rng() % 20);
      // bank load rejects templates that are not unit norm
      for (int l = 0; l < count; ++l) list.push_back(random_unit(rng, dim));
    }
    for (int f = 0, frames = int(rng() % 4); f < frames; ++f) bank.frames.push_back("frame_" + std::to_string(rng() % 1000));
    const fs::path p = dir / "bank.bin";
    save_bank(bank, p);
    const TemplateBank back = load_bank(p);
    bool same = back.dim == bank.dim && back.frames == bank.frames && back.classes.size() == bank.classes.size();
    for (const auto& [id, list] : bank.classes) {
      if (!same || !back.classes.contains(id) || back.classes.at(id).size() != list.size()) {
        same = false;
        break;
      }
      for (std::size_t l = 0; l < list.size() && same; ++l)
        same = std::memcmp(list[l].data(), back.classes.at(id)[l].data(), list[l].size() * sizeof(float)) == 0;
    }
    if (!same || encode_bank(back) != read_bytes(p))
      return {false, "bank instance " + std::to_string(i) + " does not round-trip"};
  }
  fs::remove_all(dir);
  return {true, "100 tensors (f32 bit patterns, u8, u16; rank 1-4) and 100 banks (dim 1-64) bit-exact"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  run("kernel-oracles", kernel_oracles);
  run("determinism", [&] { return determinism(cli); });
  run("shift-invariance", shift_invariance);
  run("synthetic-end-to-end", synthetic_end_to_end);
  run("frac-monotonicity", frac_monotonicity);
  run("merge-semantics", merge_semantics);
  run("round-trips", round_trips);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
