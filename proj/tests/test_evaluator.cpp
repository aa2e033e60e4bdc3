#include <random>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace depseg;
using namespace testing_support;

TEST(Accumulate, PerfectPrediction) {
  LabelMap gt(8, 8, 0);
  gt(1, 1) = 2;
  gt(2, 2) = 5;
  IoUReport acc;
  accumulate(gt, gt, acc);
  const auto r = finalize(acc);
  for (const auto& [id, v] : r.iou) EXPECT_DOUBLE_EQ(v, 1.0);
  EXPECT_DOUBLE_EQ(*r.miou, 1.0);
  EXPECT_EQ(r.iou.size(), 3u);
}

TEST(Accumulate, DisjointClassScoresZero) {
  LabelMap pred(4, 4, 0), gt(4, 4, 0);
  pred(0, 0) = 1;
  gt(3, 3) = 1;
  IoUReport acc;
  accumulate(pred, gt, acc);
  EXPECT_DOUBLE_EQ(finalize(acc).iou.at(1), 0.0);
  EXPECT_EQ(error_code_of([&] { accumulate(pred, LabelMap(3, 3), acc); }), Errc::shape_mismatch);
}

TEST(Accumulate, MatchesCountingOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    LabelMap pred(16, 16), gt(16, 16);
    for (auto& v : pred.pixels()) v = std::uint16_t(rng() % 5);
    for (auto& v : gt.pixels()) v = std::uint16_t(rng() % 5);
    IoUReport acc;
    accumulate(pred, gt, acc);
    const auto want = oracle::iou_counts(pred, gt);
    for (const auto& [id, c] : acc.counts) {
      EXPECT_EQ(c.intersection, want.inter.at(id));
      EXPECT_EQ(c.union_, want.uni.at(id));
    }
    EXPECT_EQ(acc.counts.size(), want.uni.size());
  }
}

TEST(Finalize, AbsentClassesAreExcludedUnlessRequested) {
  LabelMap m(4, 4, 0);
  m(0, 0) = 1;
  IoUReport acc;
  accumulate(m, m, acc);
  EXPECT_DOUBLE_EQ(*finalize(acc).miou, 1.0);
  FinalizeOptions opts;
  opts.exclude_absent = false;
  opts.classes = {0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(*finalize(acc, opts).miou, 0.5);
  EXPECT_EQ(error_code_of([] { finalize(IoUReport{}); }), Errc::invalid_argument);
}

TEST(Finalize, MicroAverageEqualsConcatenatedFrames) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const int frames = 1 + int(rng() % 5);
    LabelMap cat_pred(16, 16 * frames), cat_gt(16, 16 * frames);
    std::vector<std::pair<LabelMap, LabelMap>> pairs;
    for (int f = 0; f < frames; ++f) {
      LabelMap p(16, 16), g(16, 16);
      for (auto& v : p.pixels()) v = std::uint16_t(rng() % 4);
      for (auto& v : g.pixels()) v = std::uint16_t(rng() % 4);
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
          cat_pred(x, 16 * f + y) = p(x, y);
          cat_gt(x, 16 * f + y) = g(x, y);
        }
      pairs.emplace_back(p, g);
    }
    IoUReport acc, whole, shuffled;
    for (const auto& [p, g] : pairs) accumulate(p, g, acc);
    accumulate(cat_pred, cat_gt, whole);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    for (const auto& [p, g] : pairs) accumulate(p, g, shuffled);
    const auto a = finalize(acc), b = finalize(whole), c = finalize(shuffled);
    EXPECT_EQ(a.iou, b.iou);
    EXPECT_EQ(a.iou, c.iou);
    EXPECT_EQ(a.miou, c.miou);
    for (const auto& kv : a.iou) EXPECT_LE(kv.second, 1.0);
  }
}

TEST(Finalize, PartialReportsMerge) {
  LabelMap a(4, 4, 1), b(4, 4, 0);
  IoUReport one, two, both;
  accumulate(a, b, one);
  accumulate(b, b, two);
  accumulate(a, b, both);
  accumulate(b, b, both);
  one.merge(two);
  EXPECT_EQ(one.counts, both.counts);
  EXPECT_EQ(one.frames, 2u);
}

TEST(Report, KeyValueAndTableFormats) {
  LabelMap p(2, 1), g(2, 1);
  p(0, 0) = 1;
  g(0, 0) = 1;
  g(1, 0) = 1;
  IoUReport acc;
  accumulate(p, g, acc);
  const auto r = finalize(acc);
  EXPECT_EQ(format_key_values(r), "iou.0=0.000000\niou.1=0.500000\nmiou=0.250000\nframes=1\n");
  const auto table = format_table(r, {{1, "Liver"}});
  EXPECT_NE(table.find("Liver"), std::string::npos);
  EXPECT_NE(table.find("50.0"), std::string::npos);
}
