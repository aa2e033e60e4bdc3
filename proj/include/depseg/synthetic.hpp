#pragma once

// Parametric scenes standing in for the foundation models: a background
// plane with disks and bars at distinct depths, per-class token vectors
// with Gaussian noise, and score maps shaped as smooth bumps around the
// ground-truth object under the first prompt.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "depseg/backends.hpp"
#include "depseg/error.hpp"
#include "depseg/image.hpp"
#include "depseg/imgproc/distance_transform.hpp"
#include "depseg/rng.hpp"

namespace depseg {

enum class ShapeKind { disk, bar };

struct SceneObject {
  ShapeKind kind = ShapeKind::disk;
  float cx = 0, cy = 0, radius = 0;  // disk
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // bar, half-open [x0, x1) x [y0, y1)
  float depth = 0.5f;
  std::uint16_t class_id = 1;
  int mode = 0;

  bool contains(int x, int y) const {
    if (kind == ShapeKind::disk) {
      const float dx = static_cast<float>(x) - cx, dy = static_cast<float>(y) - cy;
      return dx * dx + dy * dy <= radius * radius;
    }
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
};

struct SceneSpec {
  int width = 128;
  int height = 96;
  float plane_depth = 0.8f;
  std::uint16_t plane_class = 0;
  int plane_mode = 0;
  std::vector<SceneObject> objects;
  std::uint64_t seed = 0;  // drives token and color noise
};

/// Class embedding model of the synthetic feature encoder.
struct TokenModel {
  int dim = 32;
  int stride = 8;
  float noise = 0.1f;        // expected L2 norm of the per-token noise vector
  float mode_spread = 0.0f;  // intra-class variation between modes
  float class_overlap = 0.0f;  // weight of a direction shared by every class
  bool orthogonal = false;   // class c -> basis vector e_(c mod dim)
  std::uint64_t seed = 1234;

  std::vector<float> class_vector(std::uint16_t class_id, int mode = 0) const {
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    if (orthogonal) {
      v[class_id % dim] = 1.0;
    } else {
      Rng base(mix_seed(seed, class_id));
      for (auto& x : v) x = gaussian(base);
      normalize(v);
      if (class_overlap > 0.0f) {
        Rng shared(mix_seed(seed, 0xC0FFEEULL));
        for (auto& x : v) x = (1.0 - class_overlap) * x + class_overlap * gaussian(shared) / std::sqrt(double(dim));
        normalize(v);
      }
      if (mode_spread > 0.0f) {
        Rng m(mix_seed(mix_seed(seed, class_id), static_cast<std::uint64_t>(mode) + 1));
        for (auto& x : v) x += mode_spread * gaussian(m) / std::sqrt(double(dim));
        normalize(v);
      }
    }
    return {v.begin(), v.end()};
  }

 private:
  static void normalize(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
  }
};

struct RenderedScene {
  DepthMap depth;
  LabelMap gt;
  Image<std::int32_t> instances;  // 0 = plane, i+1 = objects[i]
  RgbImage rgb;
  TokenGrid tokens;
};

inline Rgb synthetic_class_color(std::uint16_t class_id) {
  Rng rng(mix_seed(0x5EEDULL, class_id));
  return Rgb{static_cast<std::uint8_t>(40 + uniform_index(rng, 180)),
             static_cast<std::uint8_t>(40 + uniform_index(rng, 180)),
             static_cast<std::uint8_t>(40 + uniform_index(rng, 180))};
}

/// Instance map with nearer objects drawn over farther ones (ties: later wins).
inline Image<std::int32_t> render_instances(const SceneSpec& spec) {
  Image<std::int32_t> inst(spec.width, spec.height, 0);
  std::vector<std::size_t> order(spec.objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return spec.objects[a].depth > spec.objects[b].depth; });
  for (std::size_t idx : order)
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        if (spec.objects[idx].contains(x, y)) inst(x, y) = static_cast<std::int32_t>(idx + 1);
  return inst;
}

inline RenderedScene render_scene(const SceneSpec& spec, const TokenModel& model) {
  require(spec.width > 0 && spec.height > 0, Errc::invalid_argument, "scene extent must be positive");
  require(model.stride >= 1 && model.dim >= 1, Errc::invalid_argument, "token stride and dim must be >= 1");
  RenderedScene s;
  s.instances = render_instances(spec);
  s.depth = DepthMap(spec.width, spec.height);
  s.gt = LabelMap(spec.width, spec.height);
  s.rgb = RgbImage(spec.width, spec.height);

  auto class_of = [&](std::int32_t inst) { return inst == 0 ? spec.plane_class : spec.objects[inst - 1].class_id; };
  auto mode_of = [&](std::int32_t inst) { return inst == 0 ? spec.plane_mode : spec.objects[inst - 1].mode; };

  Rng color_noise(mix_seed(spec.seed, 0xC010ULL));
  for (std::size_t i = 0; i < s.instances.size(); ++i) {
    const std::int32_t inst = s.instances[i];
    s.depth[i] = inst == 0 ? spec.plane_depth : spec.objects[inst - 1].depth;
    s.gt[i] = class_of(inst);
    const Rgb base = synthetic_class_color(class_of(inst));
    auto jitter = [&](std::uint8_t c) {
      return static_cast<std::uint8_t>(std::clamp(int(c) + int(uniform_index(color_noise, 21)) - 10, 0, 255));
    };
    s.rgb[i] = Rgb{jitter(base.r), jitter(base.g), jitter(base.b)};
  }

  const int rows = std::max(1, spec.height / model.stride), cols = std::max(1, spec.width / model.stride);
  s.tokens = TokenGrid(rows, cols, model.dim);
  std::map<std::int32_t, std::vector<float>> vectors;
  for (std::int32_t inst = 0; inst <= static_cast<std::int32_t>(spec.objects.size()); ++inst)
    vectors[inst] = model.class_vector(class_of(inst), mode_of(inst));
  Rng token_noise(mix_seed(spec.seed, 0x70C3ULL));
  const double sigma = model.noise / std::sqrt(static_cast<double>(model.dim));
  for (int r = 0; r < rows; ++r) {
    const int y0 = static_cast<int>(static_cast<long long>(r) * spec.height / rows);
    const int y1 = static_cast<int>(static_cast<long long>(r + 1) * spec.height / rows);
    for (int c = 0; c < cols; ++c) {
      const int x0 = static_cast<int>(static_cast<long long>(c) * spec.width / cols);
      const int x1 = static_cast<int>(static_cast<long long>(c + 1) * spec.width / cols);
      std::map<std::int32_t, int> counts;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) ++counts[s.instances(x, y)];
      const double cell = static_cast<double>((y1 - y0) * (x1 - x0));
      auto token = s.tokens.at(r, c);
      for (int d = 0; d < model.dim; ++d) {
        double acc = 0.0;
        for (const auto& [inst, n] : counts) acc += (n / cell) * vectors[inst][static_cast<std::size_t>(d)];
        token[static_cast<std::size_t>(d)] = static_cast<float>(acc + sigma * gaussian(token_noise));
      }
    }
  }
  return s;
}

/// Logit-style score bump around an instance: +4 tanh(sd / 4) inside,
/// negative outside, where sd is the distance to the instance boundary.
/// Strictly positive exactly on the instance pixels.
inline ScoreMap instance_score_map(const Image<std::int32_t>& instances, std::int32_t instance) {
  BinaryMask inside(instances.width(), instances.height()), outside(instances.width(), instances.height());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    inside[i] = instances[i] == instance ? 1 : 0;
    outside[i] = 1 - inside[i];
  }
  const auto din = distance_transform(inside), dout = distance_transform(outside);
  ScoreMap s(instances.width(), instances.height());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double sd = inside[i] ? din[i] : -static_cast<double>(dout[i]);
    s[i] = static_cast<float>(4.0 * std::tanh(sd / 4.0));
  }
  return s;
}

struct SceneGenParams {
  int width = 128;
  int height = 96;
  int min_objects = 2;
  int max_objects = 4;
  int num_classes = 4;  // object classes 1..num_classes, plane is class 0
  int num_modes = 1;
  float min_radius = 12.0f;
  float max_radius = 20.0f;
  bool allow_bars = true;
  int min_visible_area = 150;
};

/// Random scene: plane plus 2-4 disks or bars at pairwise distinct depths,
/// each object keeping most of its area visible.
inline SceneSpec random_scene(std::uint64_t seed, const SceneGenParams& p = {}) {
  require(p.min_objects >= 0 && p.max_objects >= p.min_objects && p.num_classes >= 1 && p.num_modes >= 1,
          Errc::invalid_argument, "bad scene generator parameters");
  Rng rng(mix_seed(seed, 0x5CE4EULL));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    SceneSpec spec;
    spec.width = p.width;
    spec.height = p.height;
    spec.seed = seed;
    spec.plane_depth = static_cast<float>(uniform_real(rng, 0.7, 0.95));
    spec.plane_mode = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(p.num_modes)));
    const int count = p.min_objects + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(p.max_objects - p.min_objects + 1)));

    std::vector<std::uint16_t> classes(static_cast<std::size_t>(p.num_classes));
    std::iota(classes.begin(), classes.end(), std::uint16_t{1});
    for (std::size_t i = classes.size(); i > 1; --i) std::swap(classes[i - 1], classes[uniform_index(rng, i)]);

    std::vector<float> depths;
    while (static_cast<int>(depths.size()) < count) {
      const float d = static_cast<float>(uniform_real(rng, 0.1, 0.6));
      if (std::all_of(depths.begin(), depths.end(), [&](float o) { return std::abs(o - d) >= 0.05f; }))
        depths.push_back(d);
    }

    for (int i = 0; i < count; ++i) {
      SceneObject o;
      o.depth = depths[static_cast<std::size_t>(i)];
      o.class_id = classes[static_cast<std::size_t>(i) % classes.size()];
      o.mode = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(p.num_modes)));
      if (p.allow_bars && uniform01(rng) < 0.35) {
        o.kind = ShapeKind::bar;
        const int thick = 10 + static_cast<int>(uniform_index(rng, 7));
        const int length = std::min(30 + static_cast<int>(uniform_index(rng, 31)), std::min(p.width, p.height) - 4);
        const bool horizontal = uniform01(rng) < 0.5;
        const int bw = horizontal ? length : thick, bh = horizontal ? thick : length;
        o.x0 = 2 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(std::max(1, p.width - bw - 3))));
        o.y0 = 2 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(std::max(1, p.height - bh - 3))));
        o.x1 = o.x0 + bw;
        o.y1 = o.y0 + bh;
      } else {
        o.kind = ShapeKind::disk;
        o.radius = static_cast<float>(uniform_real(rng, p.min_radius, p.max_radius));
        const double m = o.radius + 2.0;
        o.cx = static_cast<float>(std::floor(uniform_real(rng, m, p.width - m)));
        o.cy = static_cast<float>(std::floor(uniform_real(rng, m, p.height - m)));
      }
      spec.objects.push_back(o);
    }

    const auto inst = render_instances(spec);
    std::vector<int> visible(spec.objects.size() + 1, 0), full(spec.objects.size(), 0);
    for (auto v : inst.pixels()) ++visible[static_cast<std::size_t>(v)];
    for (std::size_t i = 0; i < spec.objects.size(); ++i)
      for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) full[i] += spec.objects[i].contains(x, y) ? 1 : 0;
    bool ok = visible[0] >= p.min_visible_area;
    for (std::size_t i = 0; i < spec.objects.size() && ok; ++i)
      ok = visible[i + 1] >= p.min_visible_area && visible[i + 1] * 10 >= full[i] * 6;
    if (ok) return spec;
  }
  throw Error(Errc::degenerate_input, "could not place scene objects; relax the generator parameters");
}

/// Backend rendering registered scenes on demand. Rendering is a pure
/// function of (scene, token model), so every call is repeatable.
class SyntheticBackend : public Backend {
 public:
  explicit SyntheticBackend(TokenModel model = {}) : model_(model) {}

  void add(std::string frame_id, SceneSpec spec) {
    require(!scenes_.contains(frame_id), Errc::invalid_argument, "duplicate synthetic frame " + frame_id);
    order_.push_back(frame_id);
    scenes_.emplace(std::move(frame_id), std::move(spec));
  }

  const TokenModel& token_model() const noexcept { return model_; }
  const SceneSpec& scene(const std::string& frame_id) const {
    auto it = scenes_.find(frame_id);
    if (it == scenes_.end()) throw Error(Errc::missing_frame, "unknown synthetic frame '" + frame_id + "'");
    return it->second;
  }
  RenderedScene render(const std::string& frame_id) const { return render_scene(scene(frame_id), model_); }

  std::vector<std::string> frame_ids() const override { return order_; }
  DepthMap depth_of(const std::string& frame_id) const override {
    return DepthMap(render_instances_depth(scene(frame_id)));
  }
  ScoreMap score_map_for(const std::string& frame_id, std::span<const Point> points) const override {
    require(!points.empty(), Errc::invalid_argument, "score_map_for needs at least one point");
    const SceneSpec& spec = scene(frame_id);
    const auto inst = render_instances(spec);
    for (const Point& p : points) require(inst.contains(p), Errc::invalid_argument, "prompt point outside frame");
    const Point first = canonical_points(points).front();
    return instance_score_map(inst, inst(first));
  }
  TokenGrid token_grid_of(const std::string& frame_id) const override { return render(frame_id).tokens; }
  std::optional<RgbImage> rgb_of(const std::string& frame_id) const override { return render(frame_id).rgb; }
  LabelMap gt_of(const std::string& frame_id) const { return render(frame_id).gt; }

 private:
  static DepthMap render_instances_depth(const SceneSpec& spec) {
    const auto inst = render_instances(spec);
    DepthMap d(spec.width, spec.height);
    for (std::size_t i = 0; i < inst.size(); ++i) d[i] = inst[i] == 0 ? spec.plane_depth : spec.objects[inst[i] - 1].depth;
    return d;
  }

  TokenModel model_;
  std::vector<std::string> order_;
  std::map<std::string, SceneSpec> scenes_;
};

}  // namespace depseg
