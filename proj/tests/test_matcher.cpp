#include <random>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace depseg;
using namespace testing_support;

namespace {

Descriptor unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g;
  std::vector<double> v(static_cast<std::size_t>(dim));
  double n = 0;
  for (auto& x : v) {
    x = g(rng);
    n += x * x;
  }
  Descriptor d;
  for (double x : v) d.push_back(static_cast<float>(x / std::sqrt(n)));
  return d;
}

}  // namespace

TEST(Cosine, SelfAndOrthogonal) {
  TemplateBank bank;
  bank.dim = 3;
  bank.add(1, {0, 1, 0});
  bank.add(2, {1, 0, 0});
  const std::vector<float> h{0, 1, 0};
  const auto s = cosine_scores(h, bank);
  EXPECT_FLOAT_EQ(s.at(1)[0], 1.0f);
  EXPECT_FLOAT_EQ(s.at(2)[0], 0.0f);
  EXPECT_EQ(error_code_of([&] { cosine_scores(std::vector<float>{1, 0}, bank); }), Errc::dimension_mismatch);
}

TEST(Cosine, MatchesNaiveDot) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const int dim = 1 + int(rng() % 128);
    const auto a = unit(rng, dim), b = unit(rng, dim);
    EXPECT_NEAR(dot(a, b), oracle::naive_dot(a, b), 1e-6);
  }
}

TEST(TopK, SaturationAndMax) {
  const Similarities sims{{1, {0.1f, 0.9f, 0.5f}}, {2, {0.3f}}};
  const auto k1 = topk_aggregate(sims, 1);
  EXPECT_FLOAT_EQ(float(k1.at(1)), 0.9f);
  EXPECT_FLOAT_EQ(float(k1.at(2)), 0.3f);
  const auto k9 = topk_aggregate(sims, 9);
  EXPECT_NEAR(k9.at(1), 1.5, 1e-6);
  EXPECT_THROW(topk_aggregate(sims, 0), Error);
}

TEST(TopK, MatchesSortAndSumAndIncrementsByNextLargest) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-1, 1);
  for (int t = 0; t < 100; ++t) {
    Similarities sims;
    for (int c = 0; c < 5; ++c)
      for (int l = 0; l < int(rng() % 20) + 1; ++l) sims[std::uint16_t(c)].push_back(u(rng));
    const auto s7 = topk_aggregate(sims, 7), s8 = topk_aggregate(sims, 8);
    for (const auto& [id, list] : sims) {
      EXPECT_DOUBLE_EQ(s7.at(id), oracle::topk_sum(list, 7));
      auto sorted = list;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      const double next = sorted.size() > 7 ? sorted[7] : 0.0;
      EXPECT_NEAR(s8.at(id) - s7.at(id), next, 1e-6);
    }
  }
}

TEST(Classify, SingleClassAlwaysWins) {
  std::mt19937_64 rng(3);
  TemplateBank bank;
  bank.dim = 8;
  bank.add(4, unit(rng, 8));
  for (int i = 0; i < 10; ++i) EXPECT_EQ(classify(unit(rng, 8), bank), 4);
}

TEST(Classify, ExactTemplateWinsAgainstOrthogonalClasses) {
  TemplateBank bank;
  bank.dim = 3;
  bank.add(0, {1, 0, 0});
  bank.add(5, {0, 1, 0});
  bank.add(9, {0, 0, 1});
  EXPECT_EQ(classify(std::vector<float>{0, 1, 0}, bank), 5);
}

TEST(Classify, TiesGoToSmallestId) {
  TemplateBank bank;
  bank.dim = 2;
  bank.add(7, {1, 0});
  bank.add(3, {1, 0});
  EXPECT_EQ(classify(std::vector<float>{1, 0}, bank), 3);
  EXPECT_EQ(error_code_of([] { classify(std::vector<float>{1}, TemplateBank{}); }), Errc::empty_bank);
}

TEST(Classify, MatchesExhaustiveScorerAndIgnoresTemplateOrder) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 300; ++t) {
    TemplateBank bank;
    bank.dim = 1 + int(rng() % 16);
    const int classes = 1 + int(rng() % 5);
    for (int c = 0; c < classes; ++c)
      for (int l = 0; l < 1 + int(rng() % 20); ++l) bank.add(std::uint16_t(rng() % 13), unit(rng, bank.dim));
    const auto h = unit(rng, bank.dim);
    const int k = 1 + int(rng() % 10);
    const auto c = classify(h, bank, k);
    EXPECT_EQ(c, oracle::classify(h, bank, k));
    TemplateBank shuffled = bank;
    for (auto& [id, list] : shuffled.classes) std::shuffle(list.begin(), list.end(), rng);
    EXPECT_EQ(classify(h, shuffled, k), c);
  }
}

TEST(Baseline, UniformGrayRegion) {
  RgbImage img(10, 10, Rgb{128, 128, 128});
  const auto d = baseline_descriptor(img, BinaryMask(10, 10, 1));
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(d.mean[std::size_t(i)], 128.0);
    EXPECT_DOUBLE_EQ(d.stddev[std::size_t(i)], 0.0);
  }
  EXPECT_DOUBLE_EQ(d.area_ratio, 1.0);
  EXPECT_DOUBLE_EQ(d.aspect_ratio, 1.0);
  EXPECT_EQ(error_code_of([&] { baseline_descriptor(img, BinaryMask(10, 10)); }), Errc::empty_support);
}

TEST(Baseline, MatchesTwoPassStatistics) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const int w = 2 + int(rng() % 40), h = 2 + int(rng() % 40);
    RgbImage img(w, h);
    for (auto& p : img.pixels()) p = Rgb{std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng())};
    auto m = random_blobs(rng, w, h, 2);
    m.set(0, 0);
    const auto d = baseline_descriptor(img, m);
    const auto want = oracle::color_stats(img, m);
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(d.mean[std::size_t(i)], want[std::size_t(i)], 1e-4);
      EXPECT_NEAR(d.stddev[std::size_t(i)], want[std::size_t(3 + i)], 1e-4);
    }
  }
}

TEST(Baseline, ClassifyPicksEqualPrototype) {
  BaselineDescriptor a, b;
  a.mean = {200, 10, 10};
  b.mean = {10, 200, 10};
  b.area_ratio = 0.5;
  const BaselinePrototypes protos = baseline_prototypes({{1, a}, {2, b}, {2, b}});
  EXPECT_EQ(baseline_classify(b, protos), 2);
  EXPECT_EQ(baseline_classify(a, protos), 1);
  EXPECT_EQ(error_code_of([&] { baseline_classify(a, {}); }), Errc::empty_bank);
}
