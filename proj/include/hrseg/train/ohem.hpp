#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hrseg/core/tensor.hpp"

namespace hrseg {

struct OhemConfig {
  bool enabled = true;
  double prob_thresh = 0.7;
  int64_t min_kept = 2500;  // absolute count for the tensor being reduced
};

template <typename T>
struct OhemResult {
  double loss = 0;    // mean over the selected pixels
  Tensor<T> mask;     // 1 where selected, for gradient masking
  int64_t kept = 0;
};

// Keeps every pixel whose true-class probability is below prob_thresh; if
// fewer than min_kept qualify, falls back to the min_kept highest-loss
// pixels. Ties break on the lower flat index, keeping selection
// deterministic.
template <typename T>
OhemResult<T> ohem_reduce(const Tensor<T>& per_pixel_loss, const Tensor<T>& true_class_prob,
                          const OhemConfig& cfg) {
  require_same_extents(per_pixel_loss, true_class_prob, "ohem_reduce");
  const int64_t total = per_pixel_loss.size();
  if (total == 0) throw DataError("ohem_reduce on an empty tensor");

  OhemResult<T> r;
  r.mask = Tensor<T>(per_pixel_loss.n(), per_pixel_loss.c(), per_pixel_loss.h(),
                     per_pixel_loss.w());
  const int64_t min_kept = std::min<int64_t>(std::max<int64_t>(cfg.min_kept, 1), total);

  std::vector<int64_t> hard;
  hard.reserve(static_cast<size_t>(total) / 4);
  for (int64_t i = 0; i < total; ++i) {
    if (static_cast<double>(true_class_prob[i]) < cfg.prob_thresh) hard.push_back(i);
  }

  double sum = 0;
  if (static_cast<int64_t>(hard.size()) >= min_kept) {
    for (int64_t i : hard) {
      r.mask[i] = T(1);
      sum += static_cast<double>(per_pixel_loss[i]);
    }
    r.kept = static_cast<int64_t>(hard.size());
  } else {
    std::vector<int64_t> order(static_cast<size_t>(total));
    std::iota(order.begin(), order.end(), int64_t{0});
    auto harder = [&](int64_t a, int64_t b) {
      if (per_pixel_loss[a] != per_pixel_loss[b]) return per_pixel_loss[a] > per_pixel_loss[b];
      return a < b;
    };
    std::nth_element(order.begin(), order.begin() + (min_kept - 1), order.end(), harder);
    for (int64_t j = 0; j < min_kept; ++j) {
      const int64_t i = order[static_cast<size_t>(j)];
      r.mask[i] = T(1);
      sum += static_cast<double>(per_pixel_loss[i]);
    }
    r.kept = min_kept;
  }
  r.loss = sum / static_cast<double>(r.kept);
  return r;
}

// Plain mean over all pixels; the reduction used when OHEM is disabled.
template <typename T>
OhemResult<T> mean_reduce(const Tensor<T>& per_pixel_loss) {
  const int64_t total = per_pixel_loss.size();
  if (total == 0) throw DataError("mean_reduce on an empty tensor");
  OhemResult<T> r;
  r.mask = Tensor<T>(per_pixel_loss.n(), per_pixel_loss.c(), per_pixel_loss.h(),
                     per_pixel_loss.w());
  double sum = 0;
  for (int64_t i = 0; i < total; ++i) {
    r.mask[i] = T(1);
    sum += static_cast<double>(per_pixel_loss[i]);
  }
  r.kept = total;
  r.loss = sum / static_cast<double>(total);
  return r;
}

}  // namespace hrseg
