#pragma once

#include <cstdint>
#include <string>

#include "hrseg/core/tensor.hpp"

namespace hrseg {

// Pixel-count accumulator for the crack class. Merging per-shard matrices is
// associative and commutative, so shard order never changes a metric.
struct ConfusionMatrix {
  uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  uint64_t total() const { return tp + fp + fn + tn; }

  void merge(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
  }
};

template <typename T>
void update(ConfusionMatrix& cm, const Tensor<T>& pred, const Tensor<T>& label) {
  require_same_extents(pred, label, "confusion update");
  for (int64_t i = 0; i < pred.size(); ++i) {
    const T p = pred[i], l = label[i];
    if ((p != T(0) && p != T(1)) || (l != T(0) && l != T(1))) {
      throw DataError("confusion update expects class maps with values in {0,1}");
    }
    if (p == T(1)) {
      if (l == T(1)) ++cm.tp;
      else ++cm.fp;
    } else {
      if (l == T(1)) ++cm.fn;
      else ++cm.tn;
    }
  }
}

struct MetricsReport {
  double miou = 0, precision = 0, recall = 0, f1 = 0;
  double iou_crack = 0, iou_bg = 0;
};

// IoU_crack = tp/(tp+fp+fn), IoU_bg = tn/(tn+fp+fn), mIoU their mean.
// A 0/0 ratio is 0, except a class absent from both prediction and label
// contributes IoU 1.
inline MetricsReport compute(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DataError("metrics over an empty confusion matrix");
  MetricsReport r;
  const uint64_t crack_union = cm.tp + cm.fp + cm.fn;
  const uint64_t bg_union = cm.tn + cm.fp + cm.fn;
  r.iou_crack = crack_union == 0 ? 1.0 : static_cast<double>(cm.tp) / static_cast<double>(crack_union);
  r.iou_bg = bg_union == 0 ? 1.0 : static_cast<double>(cm.tn) / static_cast<double>(bg_union);
  r.miou = (r.iou_crack + r.iou_bg) / 2.0;
  r.precision = (cm.tp + cm.fp) == 0 ? 0.0 : static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  r.recall = (cm.tp + cm.fn) == 0 ? 0.0 : static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  r.f1 = (r.precision + r.recall) == 0 ? 0.0
                                       : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

// Class map from 2-channel logits; ties resolve to background.
template <typename T>
Tensor<T> argmax_classes(const Tensor<T>& logits) {
  if (logits.c() < 2) throw ShapeError("argmax_classes expects >= 2 channels");
  Tensor<T> out(logits.n(), 1, logits.h(), logits.w());
  for (int64_t n = 0; n < logits.n(); ++n) {
    for (int64_t y = 0; y < logits.h(); ++y) {
      for (int64_t x = 0; x < logits.w(); ++x) {
        int64_t best = 0;
        T best_v = logits(n, 0, y, x);
        for (int64_t c = 1; c < logits.c(); ++c) {
          if (logits(n, c, y, x) > best_v) {
            best_v = logits(n, c, y, x);
            best = c;
          }
        }
        out(n, 0, y, x) = static_cast<T>(best);
      }
    }
  }
  return out;
}

}  // namespace hrseg
