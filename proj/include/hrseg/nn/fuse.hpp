#pragma once

#include <utility>

#include "hrseg/core/tensor.hpp"

namespace hrseg {

enum class Fusion { sum, mul };

// Element-wise fusion of the high-resolution feature with the (already
// upsampled, channel-adjusted, activated) semantic-guidance feature.
template <typename T>
Tensor<T> fuse_forward(const Tensor<T>& x_h, const Tensor<T>& x_s, Fusion mode) {
  require_same_extents(x_h, x_s, "fuse");
  Tensor<T> out(x_h.n(), x_h.c(), x_h.h(), x_h.w());
  if (mode == Fusion::sum) {
    for (int64_t i = 0; i < x_h.size(); ++i) out[i] = x_h[i] + x_s[i];
  } else {
    for (int64_t i = 0; i < x_h.size(); ++i) out[i] = x_h[i] * x_s[i];
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> fuse_backward(const Tensor<T>& x_h, const Tensor<T>& x_s,
                                              Fusion mode, const Tensor<T>& upstream) {
  require_same_extents(x_h, upstream, "fuse_backward");
  Tensor<T> gh(x_h.n(), x_h.c(), x_h.h(), x_h.w());
  Tensor<T> gs(x_s.n(), x_s.c(), x_s.h(), x_s.w());
  if (mode == Fusion::sum) {
    for (int64_t i = 0; i < x_h.size(); ++i) {
      gh[i] = upstream[i];
      gs[i] = upstream[i];
    }
  } else {
    for (int64_t i = 0; i < x_h.size(); ++i) {
      gh[i] = upstream[i] * x_s[i];
      gs[i] = upstream[i] * x_h[i];
    }
  }
  return {std::move(gh), std::move(gs)};
}

}  // namespace hrseg
