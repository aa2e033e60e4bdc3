#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"
#include "depseg/template_bank.hpp"

namespace depseg {

using Similarities = std::map<std::uint16_t, std::vector<float>>;
using ClassScores = std::map<std::uint16_t, double>;

inline constexpr int kDefaultTopK = 7;

inline double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

/// s_(c,l) = h . t_(c,l) for every template; both sides are unit vectors.
inline Similarities cosine_scores(std::span<const float> h, const TemplateBank& bank) {
  require(static_cast<int>(h.size()) == bank.dim, Errc::dimension_mismatch,
          "descriptor dim " + std::to_string(h.size()) + " != bank dim " + std::to_string(bank.dim));
  Similarities sims;
  for (const auto& [id, list] : bank.classes) {
    auto& out = sims[id];
    out.reserve(list.size());
    for (const auto& t : list) out.push_back(static_cast<float>(dot(h, t)));
  }
  return sims;
}

/// Per class, the sum of the min(k, L_c) largest similarities. Classes
/// without templates score -inf.
inline ClassScores topk_aggregate(const Similarities& sims, int k) {
  require(k >= 1, Errc::invalid_argument, "k must be >= 1");
  ClassScores scores;
  for (const auto& [id, list] : sims) {
    if (list.empty()) {
      scores[id] = -std::numeric_limits<double>::infinity();
      continue;
    }
    std::vector<float> sorted = list;
    const std::size_t take = std::min(static_cast<std::size_t>(k), sorted.size());
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take), sorted.end(), std::greater<>());
    double s = 0.0;
    for (std::size_t i = 0; i < take; ++i) s += sorted[i];
    scores[id] = s;
  }
  return scores;
}

/// Argmax class; ties go to the smallest class id.
inline std::uint16_t argmax_class(const ClassScores& scores) {
  std::uint16_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& [id, s] : scores) {  // ascending id
    if (s == -std::numeric_limits<double>::infinity()) continue;
    if (!any || s > best_score) {
      best = id;
      best_score = s;
      any = true;
    }
  }
  require(any, Errc::empty_bank, "no class has templates");
  return best;
}

inline std::uint16_t classify(std::span<const float> h, const TemplateBank& bank, int k = kDefaultTopK) {
  require(bank.template_count() > 0, Errc::empty_bank, "classify against an empty bank");
  return argmax_class(topk_aggregate(cosine_scores(h, bank), k));
}

// Hand-crafted 8-D baseline: colour statistics plus mask geometry.

struct BaselineDescriptor {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};  // population
  double area_ratio = 0.0;         // mask area / image area
  double aspect_ratio = 0.0;       // bbox width / bbox height

  std::array<double, 8> raw() const {
    return {mean[0], mean[1], mean[2], stddev[0], stddev[1], stddev[2], area_ratio, aspect_ratio};
  }

  std::array<double, 8> normalized() const {
    auto v = raw();
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n > 0.0)
      for (double& x : v) x /= n;
    return v;
  }
};

inline BaselineDescriptor baseline_descriptor(const RgbImage& rgb, const BinaryMask& mask) {
  require(rgb.same_shape(mask), Errc::shape_mismatch, "baseline descriptor mask differs from image");
  std::array<double, 3> sum{}, sq{};
  std::size_t n = 0;
  int xmin = mask.width(), xmax = -1, ymin = mask.height(), ymax = -1;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.test(x, y)) continue;
      const Rgb p = rgb(x, y);
      const double c[3] = {double(p.r), double(p.g), double(p.b)};
      for (int i = 0; i < 3; ++i) {
        sum[i] += c[i];
        sq[i] += c[i] * c[i];
      }
      ++n;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  require(n > 0, Errc::empty_support, "baseline descriptor of an empty mask");
  BaselineDescriptor d;
  for (int i = 0; i < 3; ++i) {
    d.mean[i] = sum[i] / double(n);
    d.stddev[i] = std::sqrt(std::max(0.0, sq[i] / double(n) - d.mean[i] * d.mean[i]));
  }
  d.area_ratio = double(n) / double(mask.size());
  d.aspect_ratio = double(xmax - xmin + 1) / double(ymax - ymin + 1);
  return d;
}

using BaselinePrototypes = std::map<std::uint16_t, BaselineDescriptor>;

/// Per-class arithmetic mean of the raw descriptors; normalization happens
/// at comparison time.
inline BaselinePrototypes baseline_prototypes(const std::vector<std::pair<std::uint16_t, BaselineDescriptor>>& samples) {
  std::map<std::uint16_t, std::pair<std::array<double, 8>, std::size_t>> acc;
  for (const auto& [id, d] : samples) {
    auto& [sum, n] = acc[id];
    const auto v = d.raw();
    for (int i = 0; i < 8; ++i) sum[i] += v[i];
    ++n;
  }
  BaselinePrototypes out;
  for (const auto& [id, a] : acc) {
    const auto& [sum, n] = a;
    BaselineDescriptor p;
    for (int i = 0; i < 3; ++i) {
      p.mean[i] = sum[i] / double(n);
      p.stddev[i] = sum[3 + i] / double(n);
    }
    p.area_ratio = sum[6] / double(n);
    p.aspect_ratio = sum[7] / double(n);
    out[id] = p;
  }
  return out;
}

inline std::uint16_t baseline_classify(const BaselineDescriptor& d, const BaselinePrototypes& prototypes) {
  require(!prototypes.empty(), Errc::empty_bank, "no baseline prototypes");
  const auto v = d.normalized();
  std::uint16_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& [id, p] : prototypes) {
    const auto q = p.normalized();
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += v[i] * q[i];
    if (s > best_score) {
      best = id;
      best_score = s;
    }
  }
  return best;
}

}  // namespace depseg
