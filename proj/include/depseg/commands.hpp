#pragma once

// Implementations behind the depseg command-line subcommands. Kept in the
// library so tests drive exactly the code the executable runs.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "depseg/backends.hpp"
#include "depseg/config.hpp"
#include "depseg/evaluator.hpp"
#include "depseg/log.hpp"
#include "depseg/matcher.hpp"
#include "depseg/pipeline.hpp"
#include "depseg/render.hpp"
#include "depseg/synthetic.hpp"
#include "depseg/template_bank.hpp"
#include "depseg/tensor_io.hpp"

namespace depseg {

namespace fs = std::filesystem;

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Returns the error
/// message per index (empty on success).
inline std::vector<std::string> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const int threads = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return errors;
}

// ---------------------------------------------------------------------------
// register

struct RegisterOptions {
  fs::path manifest;
  fs::path gt_dir;
  fs::path out_bank;
  std::optional<fs::path> baseline_out;  // also build 8-D baseline prototypes
  int jobs = 1;
};

inline LabelMap read_label_map(const fs::path& path) { return image_from_tensor<std::uint16_t>(read_tensor(path)); }

inline void write_baseline_prototypes(const BaselinePrototypes& protos, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), Errc::io, "cannot write " + path.string());
  char buf[64];
  for (const auto& [id, p] : protos) {
    out << "class=" << id;
    for (double v : p.raw()) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

inline BaselinePrototypes read_baseline_prototypes(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io, "cannot open " + path.string());
  BaselinePrototypes protos;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    unsigned id = 0;
    double v[8];
    require(std::sscanf(line.c_str(), "class=%u %lf %lf %lf %lf %lf %lf %lf %lf", &id, &v[0], &v[1], &v[2], &v[3],
                        &v[4], &v[5], &v[6], &v[7]) == 9 &&
                id <= 0xffff,
            Errc::parse_error, "bad prototype line '" + line + "'");
    BaselineDescriptor d;
    d.mean = {v[0], v[1], v[2]};
    d.stddev = {v[3], v[4], v[5]};
    d.area_ratio = v[6];
    d.aspect_ratio = v[7];
    protos[static_cast<std::uint16_t>(id)] = d;
  }
  require(!protos.empty(), Errc::empty_bank, "no prototypes in " + path.string());
  return protos;
}

inline TemplateBank cmd_register(const RegisterOptions& opts, std::ostream& out) {
  const Manifest manifest = Manifest::read(opts.manifest);
  require(!manifest.empty(), Errc::invalid_argument, "manifest lists no frames");
  const OracleBackend backend(manifest);
  const auto& entries = manifest.entries();

  std::vector<std::vector<std::pair<std::uint16_t, Descriptor>>> per_frame(entries.size());
  std::vector<std::vector<std::pair<std::uint16_t, BaselineDescriptor>>> per_frame_baseline(entries.size());
  const auto errors = parallel_for(entries.size(), opts.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    const fs::path gt_path = opts.gt_dir / (e.frame_id + ".tns");
    require(fs::exists(gt_path), Errc::missing_frame, "no ground truth for frame '" + e.frame_id + "'");
    const LabelMap gt = read_label_map(gt_path);
    per_frame[i] = register_frame(backend.token_grid_of(e.frame_id), gt);
    if (opts.baseline_out) {
      const auto rgb = backend.rgb_of(e.frame_id);
      require(rgb.has_value(), Errc::missing_frame, "baseline prototypes need the RGB frame of '" + e.frame_id + "'");
      std::set<std::uint16_t> present(gt.pixels().begin(), gt.pixels().end());
      for (auto c : present) per_frame_baseline[i].emplace_back(c, baseline_descriptor(*rgb, mask_of(gt, c)));
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw Error(Errc::invalid_argument, "register " + entries[i].frame_id + ": " + errors[i]);

  TemplateBank bank;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (auto& [c, d] : per_frame[i]) bank.add(c, std::move(d));  // throws on dim inconsistency
    bank.frames.push_back(entries[i].frame_id);
  }
  save_bank(bank, opts.out_bank);
  out << "bank " << opts.out_bank.string() << " dim=" << bank.dim << " frames=" << bank.frames.size() << '\n';
  for (const auto& [id, list] : bank.classes) out << "class " << id << ": " << list.size() << " templates\n";

  if (opts.baseline_out) {
    std::vector<std::pair<std::uint16_t, BaselineDescriptor>> samples;
    for (auto& f : per_frame_baseline) samples.insert(samples.end(), f.begin(), f.end());
    write_baseline_prototypes(baseline_prototypes(samples), *opts.baseline_out);
    out << "baseline prototypes " << opts.baseline_out->string() << '\n';
  }
  return bank;
}

// ---------------------------------------------------------------------------
// segment

struct SegmentOptions {
  fs::path manifest;
  std::optional<fs::path> bank;
  std::optional<fs::path> baseline;  // use the 8-D baseline matcher instead
  PipelineConfig cfg;
  fs::path out_dir;
  int jobs = 1;
  bool overlay = false;
  std::optional<fs::path> palette;
  std::optional<fs::path> emit_prompts;  // dry run: write prompt lists only
};

struct SegmentSummary {
  std::size_t succeeded = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // frame id, message

  bool ok() const { return failures.empty(); }
};

/// Prompt list line: frame_id <TAB> point-hash <TAB> canonical point string.
inline std::string prompt_line(const std::string& frame_id, const RegionPrompts& region) {
  return frame_id + '\t' + point_hash(region.points) + '\t' + canonical_point_string(region.points);
}

inline SegmentSummary cmd_segment(const SegmentOptions& opts, std::ostream& out) {
  const OracleBackend backend(Manifest::read(opts.manifest));
  const auto ids = backend.frame_ids();
  require(!ids.empty(), Errc::invalid_argument, "manifest lists no frames");
  SegmentSummary summary;

  if (opts.emit_prompts) {
    std::vector<std::vector<std::string>> lines(ids.size());
    const auto errors = parallel_for(ids.size(), opts.jobs, [&](std::size_t i) {
      for (const auto& r : frame_prompts(backend, ids[i], opts.cfg).regions) lines[i].push_back(prompt_line(ids[i], r));
    });
    std::ofstream file(*opts.emit_prompts, std::ios::trunc);
    require(static_cast<bool>(file), Errc::io, "cannot write " + opts.emit_prompts->string());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (!errors[i].empty()) {
        summary.failures.emplace_back(ids[i], errors[i]);
        continue;
      }
      for (const auto& l : lines[i]) file << l << '\n';
      ++summary.succeeded;
    }
    out << "prompts for " << summary.succeeded << " frames written to " << opts.emit_prompts->string() << '\n';
    return summary;
  }

  std::optional<TemplateBank> bank;
  std::optional<BaselinePrototypes> prototypes;
  if (opts.baseline) {
    prototypes = read_baseline_prototypes(*opts.baseline);
  } else {
    require(opts.bank.has_value(), Errc::invalid_argument, "segment needs --bank (or --baseline)");
    bank = subsample_bank(load_bank(*opts.bank), opts.cfg.fraction, opts.cfg.seed);
  }
  const Palette palette = opts.palette ? read_palette(*opts.palette) : default_palette();
  fs::create_directories(opts.out_dir);

  const auto errors = parallel_for(ids.size(), opts.jobs, [&](std::size_t i) {
    const std::string& id = ids[i];
    const FrameResult r = prototypes ? segment_frame_baseline(backend, id, *prototypes, opts.cfg)
                                     : segment_frame(backend, id, *bank, opts.cfg);
    write_tensor(to_tensor(r.labels), opts.out_dir / (id + ".tns"));
    if (opts.overlay) {
      if (const auto rgb = backend.rgb_of(id)) {
        write_ppm(render_overlay(*rgb, r.labels, palette), opts.out_dir / (id + ".ppm"));
      } else {
        log().warn("frame {} has no RGB path, overlay skipped", id);
      }
    }
    log().info("frame {}: {} regions, {} masks", id, r.prompts.regions.size(), r.masks.masks.size());
  });

  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (errors[i].empty()) {
      ++summary.succeeded;
    } else {
      summary.failures.emplace_back(ids[i], errors[i]);
      log().error("frame {}: {}", ids[i], errors[i]);
    }
  }
  const fs::path failure_file = opts.out_dir / "failures.tsv";
  if (summary.failures.empty()) {
    fs::remove(failure_file);
  } else {
    std::ofstream f(failure_file, std::ios::trunc);
    for (const auto& [id, msg] : summary.failures) f << id << '\t' << msg << '\n';
  }
  out << "segmented " << summary.succeeded << "/" << ids.size() << " frames into " << opts.out_dir.string() << '\n';
  return summary;
}

// ---------------------------------------------------------------------------
// eval

inline std::vector<std::string> tensor_stems(const fs::path& dir) {
  require(fs::is_directory(dir), Errc::io, "not a directory: " + dir.string());
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".tns") stems.push_back(e.path().stem().string());
  std::sort(stems.begin(), stems.end());
  return stems;
}

/// Every prediction must have a ground-truth counterpart; ground-truth
/// frames without a prediction are ignored.
inline IoUReport cmd_eval(const fs::path& pred_dir, const fs::path& gt_dir, const FinalizeOptions& fin,
                          const std::map<std::uint16_t, std::string>& names, std::ostream& out) {
  const auto pred = tensor_stems(pred_dir);
  const auto gt = tensor_stems(gt_dir);
  std::vector<std::string> common;
  std::set_intersection(pred.begin(), pred.end(), gt.begin(), gt.end(), std::back_inserter(common));
  require(!common.empty(), Errc::missing_frame, "prediction and ground-truth directories share no frames");
  require(common.size() == pred.size(), Errc::missing_frame,
          std::to_string(pred.size() - common.size()) + " predicted frames have no ground truth");
  IoUReport acc;
  for (const auto& id : common) {
    try {
      accumulate(read_label_map(pred_dir / (id + ".tns")), read_label_map(gt_dir / (id + ".tns")), acc);
    } catch (const Error& e) {
      throw Error(e.code(), "frame " + id + ": " + e.what());
    }
  }
  IoUReport report = finalize(acc, fin);
  out << format_table(report, names) << format_key_values(report);
  return report;
}

// ---------------------------------------------------------------------------
// render / bank-info

inline void cmd_render(const fs::path& rgb_path, const fs::path& labels_path, const Palette& palette,
                       const fs::path& out_path, double alpha = 0.5) {
  const RgbImage rgb = rgb_from_tensor(read_tensor(rgb_path));
  const LabelMap labels = read_label_map(labels_path);
  write_ppm(render_overlay(rgb, labels, palette, alpha), out_path);
}

inline void cmd_bank_info(const fs::path& bank_path, std::ostream& out) {
  const TemplateBank bank = load_bank(bank_path);
  out << "dim=" << bank.dim << " classes=" << bank.classes.size() << " templates=" << bank.template_count()
      << " frames=" << bank.frames.size() << '\n';
  for (const auto& [id, list] : bank.classes) out << "class=" << id << " count=" << list.size() << '\n';
}

// ---------------------------------------------------------------------------
// synth: writes a synthetic dataset in the exporter's on-disk layout

struct SynthOptions {
  fs::path out_dir;
  int scenes = 10;
  std::uint64_t seed = 0;
  std::string prefix = "scene";
  SceneGenParams generator;
  TokenModel tokens;
  PipelineConfig cfg;  // prompts are precomputed with this proposal config
};

inline Manifest cmd_synth(const SynthOptions& opts, std::ostream& out) {
  require(opts.scenes >= 1, Errc::invalid_argument, "need at least one scene");
  SyntheticBackend synth(opts.tokens);
  for (int i = 0; i < opts.scenes; ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "%s_%04d", opts.prefix.c_str(), i);
    synth.add(id, random_scene(mix_seed(opts.seed, static_cast<std::uint64_t>(i)), opts.generator));
  }
  for (const char* sub : {"depth", "tokens", "rgb", "gt", "scores"}) fs::create_directories(opts.out_dir / sub);

  std::vector<ManifestEntry> entries;
  std::size_t score_maps = 0;
  for (const auto& id : synth.frame_ids()) {
    const RenderedScene scene = synth.render(id);
    ManifestEntry e{id, opts.out_dir / "depth" / (id + ".tns"), opts.out_dir / "tokens" / (id + ".tns"),
                    opts.out_dir / "scores" / id, opts.out_dir / "rgb" / (id + ".tns")};
    write_tensor(to_tensor(scene.depth), e.depth_path);
    write_tensor(to_tensor(scene.tokens), e.tokens_path);
    write_tensor(to_tensor(scene.rgb), *e.rgb_path);
    write_tensor(to_tensor(scene.gt), opts.out_dir / "gt" / (id + ".tns"));
    fs::create_directories(e.scores_dir);
    for (const auto& region : propose_prompts(scene.depth, opts.cfg.proposal).regions) {
      write_tensor(to_tensor(synth.score_map_for(id, region.points)), score_map_path(e.scores_dir, region.points));
      ++score_maps;
    }
    entries.push_back(std::move(e));
  }
  Manifest manifest(std::move(entries));
  manifest.write(opts.out_dir / "manifest.tsv");
  out << "wrote " << opts.scenes << " scenes (" << score_maps << " score maps) to " << opts.out_dir.string() << '\n';
  return manifest;
}

}  // namespace depseg
