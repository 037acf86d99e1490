#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "hrseg/core/tensor.hpp"

namespace hrseg {

template <typename T>
struct SoftmaxCeResult {
  Tensor<T> per_pixel_loss;   // (N,1,H,W), -log p(true class), >= 0
  Tensor<T> true_class_prob;  // (N,1,H,W), softmax probability of the label
};

namespace detail {

template <typename T>
void validate_ce_args(const Tensor<T>& logits, const Tensor<T>& labels) {
  if (logits.c() < 2) throw ShapeError("softmax_ce expects >= 2 logit channels");
  if (labels.c() != 1 || labels.n() != logits.n() || labels.h() != logits.h() ||
      labels.w() != logits.w()) {
    throw ShapeError("softmax_ce label extents " + labels.extents_str() +
                     " do not match logits " + logits.extents_str());
  }
}

template <typename T>
int64_t label_at(const Tensor<T>& labels, int64_t n, int64_t h, int64_t w, int64_t classes) {
  const T v = labels(n, 0, h, w);
  const int64_t id = static_cast<int64_t>(v);
  if (static_cast<T>(id) != v || id < 0 || id >= classes) {
    throw DataError("label value " + std::to_string(static_cast<double>(v)) +
                    " outside {0.." + std::to_string(classes - 1) + "} at pixel (" +
                    std::to_string(n) + "," + std::to_string(h) + "," +
                    std::to_string(w) + ")");
  }
  return id;
}

}  // namespace detail

// Per-pixel -log softmax probability of the true class, via log-sum-exp.
template <typename T>
SoftmaxCeResult<T> softmax_ce_per_pixel(const Tensor<T>& logits, const Tensor<T>& labels) {
  detail::validate_ce_args(logits, labels);
  const int64_t classes = logits.c();
  SoftmaxCeResult<T> r;
  r.per_pixel_loss = Tensor<T>(logits.n(), 1, logits.h(), logits.w());
  r.true_class_prob = Tensor<T>(logits.n(), 1, logits.h(), logits.w());

  for (int64_t n = 0; n < logits.n(); ++n) {
    for (int64_t h = 0; h < logits.h(); ++h) {
      for (int64_t w = 0; w < logits.w(); ++w) {
        const int64_t y = detail::label_at(labels, n, h, w, classes);
        T max_logit = logits(n, 0, h, w);
        for (int64_t c = 1; c < classes; ++c) max_logit = std::max(max_logit, logits(n, c, h, w));
        T sum_exp = T(0);
        for (int64_t c = 0; c < classes; ++c) sum_exp += std::exp(logits(n, c, h, w) - max_logit);
        const T log_sum = std::log(sum_exp);
        const T loss = log_sum - (logits(n, y, h, w) - max_logit);
        r.per_pixel_loss(n, 0, h, w) = std::max(loss, T(0));
        r.true_class_prob(n, 0, h, w) = std::exp(logits(n, y, h, w) - max_logit) / sum_exp;
      }
    }
  }
  debug_check_finite(r.per_pixel_loss, "softmax_ce_per_pixel");
  return r;
}

// Gradient w.r.t. logits: (softmax - one_hot) * pixel_weight. pixel_weights
// carries the downstream reduction (e.g. OHEM mask / kept-count).
template <typename T>
Tensor<T> softmax_ce_backward(const Tensor<T>& logits, const Tensor<T>& labels,
                              const Tensor<T>& pixel_weights) {
  detail::validate_ce_args(logits, labels);
  detail::validate_ce_args(logits, pixel_weights);
  const int64_t classes = logits.c();
  Tensor<T> g(logits.n(), logits.c(), logits.h(), logits.w());
  for (int64_t n = 0; n < logits.n(); ++n) {
    for (int64_t h = 0; h < logits.h(); ++h) {
      for (int64_t w = 0; w < logits.w(); ++w) {
        const T wgt = pixel_weights(n, 0, h, w);
        if (wgt == T(0)) continue;
        const int64_t y = detail::label_at(labels, n, h, w, classes);
        T max_logit = logits(n, 0, h, w);
        for (int64_t c = 1; c < classes; ++c) max_logit = std::max(max_logit, logits(n, c, h, w));
        T sum_exp = T(0);
        for (int64_t c = 0; c < classes; ++c) sum_exp += std::exp(logits(n, c, h, w) - max_logit);
        for (int64_t c = 0; c < classes; ++c) {
          const T p = std::exp(logits(n, c, h, w) - max_logit) / sum_exp;
          g(n, c, h, w) = wgt * (p - (c == y ? T(1) : T(0)));
        }
      }
    }
  }
  debug_check_finite(g, "softmax_ce_backward");
  return g;
}

}  // namespace hrseg
