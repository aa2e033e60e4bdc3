#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "depseg/commands.hpp"

namespace {

struct PipelineFlags {
  std::string config;
  std::optional<int> k;
  std::optional<double> frac;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "key=value config file")->check(CLI::ExistingFile);
    cmd->add_option("--k", k, "top-k similarities summed per class");
    cmd->add_option("--frac", frac, "fraction of templates kept per class");
    cmd->add_option("--seed", seed, "seed for proposals and template subsampling");
  }

  depseg::PipelineConfig resolve() const {
    depseg::KeyValues kv;
    if (!config.empty()) kv = depseg::read_key_values(config);
    if (k) kv["k"] = std::to_string(*k);
    if (frac) kv["frac"] = std::to_string(*frac);
    if (seed) kv["seed"] = std::to_string(*seed);
    depseg::PipelineConfig cfg;
    depseg::apply_config(kv, cfg);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depseg: depth-guided, training-free surgical scene segmentation"};
  app.require_subcommand(1);
  int jobs = 1;

  // register
  auto* reg = app.add_subcommand("register", "build a template bank from annotated frames");
  depseg::RegisterOptions reg_opts;
  std::string reg_baseline;
  reg->add_option("--manifest", reg_opts.manifest, "frame manifest (TSV)")->required()->check(CLI::ExistingFile);
  reg->add_option("--gt", reg_opts.gt_dir, "directory of <frame_id>.tns label maps")->required();
  reg->add_option("--out", reg_opts.out_bank, "bank file to write")->required();
  reg->add_option("--baseline", reg_baseline, "also write 8-D baseline prototypes here");
  reg->add_option("--jobs", jobs, "worker threads");

  // segment
  auto* seg = app.add_subcommand("segment", "segment every manifest frame");
  depseg::SegmentOptions seg_opts;
  PipelineFlags seg_flags;
  std::string seg_bank, seg_baseline, seg_palette, seg_prompts;
  seg->add_option("--manifest", seg_opts.manifest, "frame manifest (TSV)")->required()->check(CLI::ExistingFile);
  seg->add_option("--bank", seg_bank, "template bank");
  seg->add_option("--baseline", seg_baseline, "classify with 8-D baseline prototypes instead of the bank");
  seg->add_option("--out", seg_opts.out_dir, "output directory");
  seg->add_option("--palette", seg_palette, "class palette for overlays")->check(CLI::ExistingFile);
  seg->add_flag("--overlay", seg_opts.overlay, "also write <frame_id>.ppm overlays");
  seg->add_option("--emit-prompts", seg_prompts, "dry run: write prompt lists for the exporter and stop");
  seg->add_option("--jobs", jobs, "worker threads");
  seg_flags.attach(seg);

  // eval
  auto* ev = app.add_subcommand("eval", "per-class IoU and mIoU of predictions against ground truth");
  std::string pred_dir, gt_dir, ev_palette, ev_out;
  bool include_absent = false;
  ev->add_option("--pred", pred_dir, "directory of predicted label maps")->required();
  ev->add_option("--gt", gt_dir, "directory of ground-truth label maps")->required();
  ev->add_option("--palette", ev_palette, "class names")->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "also write the report to this file");
  ev->add_flag("--include-absent", include_absent, "score palette classes absent everywhere as 0 in mIoU");

  // bank-info
  auto* info = app.add_subcommand("bank-info", "print template counts of a bank");
  std::string info_bank;
  info->add_option("--bank", info_bank, "template bank")->required()->check(CLI::ExistingFile);

  // render
  auto* ren = app.add_subcommand("render", "alpha-blend a label map over its frame (PPM)");
  std::string ren_rgb, ren_labels, ren_palette, ren_out;
  double alpha = 0.5;
  ren->add_option("--rgb", ren_rgb, "H x W x 3 u8 frame tensor")->required()->check(CLI::ExistingFile);
  ren->add_option("--labels", ren_labels, "H x W u16 label map tensor")->required()->check(CLI::ExistingFile);
  ren->add_option("--palette", ren_palette, "class palette")->check(CLI::ExistingFile);
  ren->add_option("--out", ren_out, "output .ppm")->required();
  ren->add_option("--alpha", alpha, "overlay opacity")->check(CLI::Range(0.0, 1.0));

  // synth
  auto* syn = app.add_subcommand("synth", "write a synthetic dataset with precomputed score maps");
  depseg::SynthOptions syn_opts;
  PipelineFlags syn_flags;
  syn->add_option("--out", syn_opts.out_dir, "output directory")->required();
  syn->add_option("--scenes", syn_opts.scenes, "number of scenes");
  syn->add_option("--prefix", syn_opts.prefix, "frame id prefix");
  syn->add_option("--noise", syn_opts.tokens.noise, "token noise norm");
  syn->add_option("--dim", syn_opts.tokens.dim, "token dimension");
  syn->add_option("--stride", syn_opts.tokens.stride, "pixels per token cell");
  syn->add_option("--modes", syn_opts.generator.num_modes, "appearance modes per class");
  syn->add_option("--mode-spread", syn_opts.tokens.mode_spread, "token spread between modes");
  syn->add_option("--classes", syn_opts.generator.num_classes, "object classes");
  syn->add_option("--width", syn_opts.generator.width, "frame width");
  syn->add_option("--height", syn_opts.generator.height, "frame height");
  syn_flags.attach(syn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? EXIT_SUCCESS : 2;  // --help exits 0, usage errors 2
  }

  try {
    if (reg->parsed()) {
      reg_opts.jobs = jobs;
      if (!reg_baseline.empty()) reg_opts.baseline_out = reg_baseline;
      depseg::cmd_register(reg_opts, std::cout);
    } else if (seg->parsed()) {
      seg_opts.cfg = seg_flags.resolve();
      seg_opts.jobs = jobs;
      if (!seg_bank.empty()) seg_opts.bank = seg_bank;
      if (!seg_baseline.empty()) seg_opts.baseline = seg_baseline;
      if (!seg_palette.empty()) seg_opts.palette = seg_palette;
      if (!seg_prompts.empty()) {
        seg_opts.emit_prompts = seg_prompts;
      } else if (seg_opts.out_dir.empty()) {
        std::cerr << "segment: --out is required unless --emit-prompts is given\n";
        return 2;
      }
      const auto summary = depseg::cmd_segment(seg_opts, std::cout);
      for (const auto& [id, msg] : summary.failures) std::cerr << "failed " << id << ": " << msg << '\n';
      return summary.ok() ? EXIT_SUCCESS : 3;
    } else if (ev->parsed()) {
      const auto palette = ev_palette.empty() ? depseg::default_palette() : depseg::read_palette(ev_palette);
      depseg::FinalizeOptions fin;
      fin.exclude_absent = !include_absent;
      for (const auto& [id, e] : palette) fin.classes.insert(id);
      std::ostringstream report;
      depseg::cmd_eval(pred_dir, gt_dir, fin, depseg::palette_names(palette), report);
      std::cout << report.str();
      if (!ev_out.empty()) {
        std::ofstream f(ev_out, std::ios::trunc);
        f << report.str();
        if (!f) throw depseg::Error(depseg::Errc::io, "cannot write " + ev_out);
      }
    } else if (info->parsed()) {
      depseg::cmd_bank_info(info_bank, std::cout);
    } else if (ren->parsed()) {
      const auto palette = ren_palette.empty() ? depseg::default_palette() : depseg::read_palette(ren_palette);
      depseg::cmd_render(ren_rgb, ren_labels, palette, ren_out, alpha);
    } else if (syn->parsed()) {
      // --seed picks the scenes; proposal settings come from --config only so
      // the cached score maps match a plain `segment` run.
      syn_opts.seed = syn_flags.seed.value_or(0);
      syn_flags.seed.reset();
      syn_opts.cfg = syn_flags.resolve();
      depseg::cmd_synth(syn_opts, std::cout);
    }
  } catch (const depseg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return EXIT_SUCCESS;
}
