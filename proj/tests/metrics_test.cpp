#include <gtest/gtest.h>

#include "hrseg/core/rng.hpp"
#include "hrseg/metrics/confusion.hpp"

using namespace hrseg;

namespace {

Tensor<float> random_map(int64_t h, int64_t w, uint64_t seed, double p_crack) {
  Tensor<float> t(1, 1, h, w);
  Rng rng(seed);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.bernoulli(p_crack) ? 1.0f : 0.0f;
  return t;
}

}  // namespace

TEST(Confusion, PerfectPrediction) {
  ConfusionMatrix cm;
  const Tensor<float> map = random_map(8, 8, 3, 0.3);
  update(cm, map, map);
  EXPECT_EQ(cm.fp, 0u);
  EXPECT_EQ(cm.fn, 0u);
  const MetricsReport r = compute(cm);
  EXPECT_DOUBLE_EQ(r.miou, 1.0);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
}

TEST(Confusion, AllBackgroundPrediction) {
  ConfusionMatrix cm;
  Tensor<float> pred(1, 1, 4, 4, 0.0f);
  Tensor<float> label = random_map(4, 4, 5, 0.4);
  uint64_t cracks = 0;
  for (int64_t i = 0; i < label.size(); ++i) cracks += label[i] == 1.0f;
  update(cm, pred, label);
  EXPECT_EQ(cm.fn, cracks);
  EXPECT_EQ(cm.tp, 0u);
  EXPECT_DOUBLE_EQ(compute(cm).iou_crack, 0.0);
}

TEST(Confusion, HandEnumerated2x2) {
  Tensor<float> pred(1, 1, 2, 2), label(1, 1, 2, 2);
  pred(0, 0, 0, 0) = 1;
  pred(0, 0, 0, 1) = 0;
  pred(0, 0, 1, 0) = 0;
  pred(0, 0, 1, 1) = 1;
  label(0, 0, 0, 0) = 1;
  label(0, 0, 0, 1) = 1;
  label(0, 0, 1, 0) = 0;
  label(0, 0, 1, 1) = 0;
  ConfusionMatrix cm;
  update(cm, pred, label);
  EXPECT_EQ(cm.tp, 1u);
  EXPECT_EQ(cm.fp, 1u);
  EXPECT_EQ(cm.fn, 1u);
  EXPECT_EQ(cm.tn, 1u);
}

TEST(Confusion, HandDerivedMetrics) {
  ConfusionMatrix cm;
  cm.tp = 50;
  cm.fp = 10;
  cm.fn = 40;
  cm.tn = 900;
  const MetricsReport r = compute(cm);
  EXPECT_NEAR(r.iou_crack, 0.5, 1e-9);
  EXPECT_NEAR(r.iou_bg, 900.0 / 950.0, 1e-9);
  EXPECT_NEAR(r.miou, 0.723684, 1e-4);
  EXPECT_NEAR(r.precision, 0.833333, 1e-4);
  EXPECT_NEAR(r.recall, 0.555556, 1e-4);
  EXPECT_NEAR(r.f1, 0.666667, 1e-4);
}

TEST(Confusion, DegenerateClassConventions) {
  // No crack anywhere: crack IoU counts as 1, precision/recall 0.
  ConfusionMatrix cm;
  cm.tn = 100;
  const MetricsReport r = compute(cm);
  EXPECT_DOUBLE_EQ(r.iou_crack, 1.0);
  EXPECT_DOUBLE_EQ(r.iou_bg, 1.0);
  EXPECT_DOUBLE_EQ(r.miou, 1.0);
  EXPECT_DOUBLE_EQ(r.precision, 0.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.0);
  EXPECT_DOUBLE_EQ(r.f1, 0.0);

  ConfusionMatrix empty;
  EXPECT_THROW(compute(empty), DataError);
}

TEST(Confusion, RejectsNonClassValues) {
  Tensor<float> pred(1, 1, 1, 1, 0.5f);
  Tensor<float> label(1, 1, 1, 1, 0.0f);
  ConfusionMatrix cm;
  EXPECT_THROW(update(cm, pred, label), DataError);
  Tensor<float> bigger(1, 1, 1, 2, 0.0f);
  EXPECT_THROW(update(cm, bigger, label), ShapeError);
}

// Brute-force per-pixel recount oracle over random 16x16 maps; counts and
// derived metrics must agree exactly.
TEST(Confusion, MatchesBruteForceRecount) {
  for (uint64_t trial = 0; trial < 100; ++trial) {
    const Tensor<float> pred = random_map(16, 16, 1000 + trial, 0.35);
    const Tensor<float> label = random_map(16, 16, 2000 + trial, 0.25);
    ConfusionMatrix cm;
    update(cm, pred, label);

    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (int64_t y = 0; y < 16; ++y) {
      for (int64_t x = 0; x < 16; ++x) {
        const bool p = pred(0, 0, y, x) == 1.0f;
        const bool l = label(0, 0, y, x) == 1.0f;
        if (p && l) ++tp;
        if (p && !l) ++fp;
        if (!p && l) ++fn;
        if (!p && !l) ++tn;
      }
    }
    ASSERT_EQ(cm.tp, tp);
    ASSERT_EQ(cm.fp, fp);
    ASSERT_EQ(cm.fn, fn);
    ASSERT_EQ(cm.tn, tn);

    const MetricsReport r = compute(cm);
    const double iou_crack = (tp + fp + fn) == 0 ? 1.0 : double(tp) / double(tp + fp + fn);
    const double iou_bg = (tn + fp + fn) == 0 ? 1.0 : double(tn) / double(tn + fp + fn);
    ASSERT_EQ(r.miou, (iou_crack + iou_bg) / 2.0);
    ASSERT_EQ(r.precision, (tp + fp) == 0 ? 0.0 : double(tp) / double(tp + fp));
    ASSERT_EQ(r.recall, (tp + fn) == 0 ? 0.0 : double(tp) / double(tp + fn));
  }
}

TEST(Confusion, ShardMergeEqualsConcatenation) {
  const Tensor<float> pred_a = random_map(8, 8, 31, 0.3);
  const Tensor<float> label_a = random_map(8, 8, 32, 0.3);
  const Tensor<float> pred_b = random_map(8, 8, 33, 0.5);
  const Tensor<float> label_b = random_map(8, 8, 34, 0.5);

  ConfusionMatrix shard_a, shard_b, merged, direct;
  update(shard_a, pred_a, label_a);
  update(shard_b, pred_b, label_b);
  merged.merge(shard_b);  // merge order must not matter
  merged.merge(shard_a);
  update(direct, pred_a, label_a);
  update(direct, pred_b, label_b);
  EXPECT_EQ(merged.tp, direct.tp);
  EXPECT_EQ(merged.fp, direct.fp);
  EXPECT_EQ(merged.fn, direct.fn);
  EXPECT_EQ(merged.tn, direct.tn);
  EXPECT_EQ(merged.total(), 128u);
}

TEST(Confusion, SwappingPredAndLabelSwapsPrecisionRecall) {
  const Tensor<float> a = random_map(16, 16, 41, 0.3);
  const Tensor<float> b = random_map(16, 16, 42, 0.4);
  ConfusionMatrix ab, ba;
  update(ab, a, b);
  update(ba, b, a);
  const MetricsReport r_ab = compute(ab), r_ba = compute(ba);
  EXPECT_DOUBLE_EQ(r_ab.precision, r_ba.recall);
  EXPECT_DOUBLE_EQ(r_ab.recall, r_ba.precision);
  EXPECT_DOUBLE_EQ(r_ab.f1, r_ba.f1);
  EXPECT_DOUBLE_EQ(r_ab.miou, r_ba.miou);
}

TEST(Confusion, MetricsStayInUnitInterval) {
  Rng rng(51);
  for (int trial = 0; trial < 50; ++trial) {
    ConfusionMatrix cm;
    cm.tp = rng.uniform_int(0, 100);
    cm.fp = rng.uniform_int(0, 100);
    cm.fn = rng.uniform_int(0, 100);
    cm.tn = rng.uniform_int(0, 100);
    if (cm.total() == 0) continue;
    const MetricsReport r = compute(cm);
    for (double v : {r.miou, r.precision, r.recall, r.f1, r.iou_crack, r.iou_bg}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Argmax, TiesResolveToBackground) {
  Tensor<float> logits(1, 2, 1, 2);
  logits(0, 0, 0, 0) = 0.5f;
  logits(0, 1, 0, 0) = 0.5f;  // tie
  logits(0, 0, 0, 1) = 0.1f;
  logits(0, 1, 0, 1) = 0.4f;
  const Tensor<float> cls = argmax_classes(logits);
  EXPECT_EQ(cls(0, 0, 0, 0), 0.0f);
  EXPECT_EQ(cls(0, 0, 0, 1), 1.0f);
}
