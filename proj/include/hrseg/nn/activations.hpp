#pragma once

#include <cmath>

#include "hrseg/core/tensor.hpp"

namespace hrseg {

enum class ActKind { relu, sigmoid };

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out(input.n(), input.c(), input.h(), input.w());
  for (int64_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream) {
  require_same_extents(input, upstream, "relu_backward");
  Tensor<T> g(input.n(), input.c(), input.h(), input.w());
  for (int64_t i = 0; i < input.size(); ++i) g[i] = input[i] > T(0) ? upstream[i] : T(0);
  return g;
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& input) {
  Tensor<T> out(input.n(), input.c(), input.h(), input.w());
  for (int64_t i = 0; i < input.size(); ++i) {
    const T x = input[i];
    // Branch on sign for numerical stability at large |x|.
    if (x >= T(0)) {
      const T e = std::exp(-x);
      out[i] = T(1) / (T(1) + e);
    } else {
      const T e = std::exp(x);
      out[i] = e / (T(1) + e);
    }
  }
  debug_check_finite(out, "sigmoid_forward");
  return out;
}

// Takes the forward *output* y; dy/dx = y*(1-y).
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& upstream) {
  require_same_extents(output, upstream, "sigmoid_backward");
  Tensor<T> g(output.n(), output.c(), output.h(), output.w());
  for (int64_t i = 0; i < output.size(); ++i) {
    g[i] = upstream[i] * output[i] * (T(1) - output[i]);
  }
  return g;
}

template <typename T>
Tensor<T> activation_forward(const Tensor<T>& input, ActKind kind) {
  return kind == ActKind::relu ? relu_forward(input) : sigmoid_forward(input);
}

}  // namespace hrseg
