#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hrseg/core/tensor.hpp"

namespace hrseg {

enum class BnMode { train, infer };

template <typename T>
struct BatchNormState {
  std::vector<T> gamma, beta, running_mean, running_var;
  T epsilon = static_cast<T>(1e-5);
  T momentum = static_cast<T>(0.9);  // retention: running = m*running + (1-m)*batch

  BatchNormState() = default;
  explicit BatchNormState(int64_t channels)
      : gamma(static_cast<size_t>(channels), T(1)),
        beta(static_cast<size_t>(channels), T(0)),
        running_mean(static_cast<size_t>(channels), T(0)),
        running_var(static_cast<size_t>(channels), T(1)) {}

  int64_t channels() const { return static_cast<int64_t>(gamma.size()); }
};

// Saved batch statistics for the backward pass.
template <typename T>
struct BnCache {
  std::vector<T> mean, inv_std;
};

namespace detail {

template <typename T>
void validate_bn_args(const Tensor<T>& input, const BatchNormState<T>& s) {
  if (input.c() != s.channels()) {
    throw ShapeError("batchnorm channel mismatch: input has " +
                     std::to_string(input.c()) + ", state has " +
                     std::to_string(s.channels()));
  }
}

}  // namespace detail

// Train mode normalizes with batch statistics over N*H*W per channel (biased
// variance) and updates the running stats; infer mode is a pure function of
// (input, state).
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, BatchNormState<T>& s, BnMode mode,
                            BnCache<T>* cache = nullptr) {
  detail::validate_bn_args(input, s);
  const int64_t C = input.c();
  const int64_t plane = input.h() * input.w();
  const int64_t m = input.n() * plane;
  Tensor<T> out(input.n(), C, input.h(), input.w());

  std::vector<T> mean(static_cast<size_t>(C)), inv_std(static_cast<size_t>(C));
  for (int64_t c = 0; c < C; ++c) {
    T mu, var;
    if (mode == BnMode::train) {
      T sum = T(0);
      for (int64_t n = 0; n < input.n(); ++n) {
        const T* p = input.row(n, c, 0);
        for (int64_t i = 0; i < plane; ++i) sum += p[i];
      }
      mu = sum / static_cast<T>(m);
      T sq = T(0);
      for (int64_t n = 0; n < input.n(); ++n) {
        const T* p = input.row(n, c, 0);
        for (int64_t i = 0; i < plane; ++i) {
          const T d = p[i] - mu;
          sq += d * d;
        }
      }
      var = sq / static_cast<T>(m);
      s.running_mean[c] = s.momentum * s.running_mean[c] + (T(1) - s.momentum) * mu;
      s.running_var[c] = s.momentum * s.running_var[c] + (T(1) - s.momentum) * var;
    } else {
      mu = s.running_mean[c];
      var = s.running_var[c];
    }
    mean[c] = mu;
    inv_std[c] = T(1) / std::sqrt(var + s.epsilon);

    const T g = s.gamma[c], b = s.beta[c], is = inv_std[c];
    for (int64_t n = 0; n < input.n(); ++n) {
      const T* p = input.row(n, c, 0);
      T* q = out.row(n, c, 0);
      for (int64_t i = 0; i < plane; ++i) q[i] = g * (p[i] - mu) * is + b;
    }
  }
  if (cache) {
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
  }
  debug_check_finite(out, "batchnorm_forward");
  return out;
}

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  std::vector<T> gamma, beta;
};

// Backward for train mode, through the batch statistics.
template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& input, const BatchNormState<T>& s,
                                     const BnCache<T>& cache, const Tensor<T>& upstream) {
  detail::validate_bn_args(input, s);
  require_same_extents(input, upstream, "batchnorm_backward");
  const int64_t C = input.c();
  const int64_t plane = input.h() * input.w();
  const int64_t m = input.n() * plane;

  BatchNormGrads<T> g;
  g.input = Tensor<T>(input.n(), C, input.h(), input.w());
  g.gamma.assign(static_cast<size_t>(C), T(0));
  g.beta.assign(static_cast<size_t>(C), T(0));

  for (int64_t c = 0; c < C; ++c) {
    const T mu = cache.mean[c], is = cache.inv_std[c], gm = s.gamma[c];
    T sum_dy = T(0), sum_dy_xhat = T(0);
    for (int64_t n = 0; n < input.n(); ++n) {
      const T* x = input.row(n, c, 0);
      const T* dy = upstream.row(n, c, 0);
      for (int64_t i = 0; i < plane; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * (x[i] - mu) * is;
      }
    }
    g.beta[c] = sum_dy;
    g.gamma[c] = sum_dy_xhat;
    // dx = gamma*is/m * (m*dy - sum(dy) - xhat*sum(dy*xhat))
    const T scale = gm * is / static_cast<T>(m);
    for (int64_t n = 0; n < input.n(); ++n) {
      const T* x = input.row(n, c, 0);
      const T* dy = upstream.row(n, c, 0);
      T* dx = g.input.row(n, c, 0);
      for (int64_t i = 0; i < plane; ++i) {
        const T xhat = (x[i] - mu) * is;
        dx[i] = scale * (static_cast<T>(m) * dy[i] - sum_dy - xhat * sum_dy_xhat);
      }
    }
  }
  debug_check_finite(g.input, "batchnorm_backward/input");
  return g;
}

}  // namespace hrseg
