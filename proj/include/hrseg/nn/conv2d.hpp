#pragma once

#include <string>
#include <vector>

#include "hrseg/core/tensor.hpp"

namespace hrseg {

// Convolution parameters. weight is (C_out, C_in, k, k); bias is empty for
// every convolution that is followed by batch normalization.
template <typename T>
struct ConvParams {
  Tensor<T> weight;
  std::vector<T> bias;
  int stride = 1;
  int padding = 0;

  int64_t c_out() const { return weight.n(); }
  int64_t c_in() const { return weight.c(); }
  int64_t k() const { return weight.h(); }
};

inline int64_t conv2d_out_extent(int64_t in, int64_t k, int64_t stride, int64_t pad) {
  const int64_t out = (in + 2 * pad - k) / stride + 1;
  if (out < 1) {
    throw ShapeError("conv2d output extent " + std::to_string(out) +
                     " for input " + std::to_string(in) + ", k " + std::to_string(k) +
                     ", stride " + std::to_string(stride) + ", pad " + std::to_string(pad));
  }
  return out;
}

namespace detail {

template <typename T>
void validate_conv_args(const Tensor<T>& input, const ConvParams<T>& p) {
  if (p.weight.h() != p.weight.w() || p.weight.h() % 2 == 0) {
    throw ShapeError("conv2d kernel must be square and odd, got " +
                     p.weight.extents_str());
  }
  if (input.c() != p.c_in()) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(input.c()) +
                     ", weight expects " + std::to_string(p.c_in()));
  }
  if (!p.bias.empty() && static_cast<int64_t>(p.bias.size()) != p.c_out()) {
    throw ShapeError("conv2d bias length " + std::to_string(p.bias.size()) +
                     " != C_out " + std::to_string(p.c_out()));
  }
  if (p.stride < 1) throw ShapeError("conv2d stride must be >= 1");
  if (p.padding < 0) throw ShapeError("conv2d padding must be >= 0");
}

}  // namespace detail

// Cross-correlation (no kernel flip), zero padding.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& p) {
  detail::validate_conv_args(input, p);
  const int64_t k = p.k(), s = p.stride, pad = p.padding;
  const int64_t out_h = conv2d_out_extent(input.h(), k, s, pad);
  const int64_t out_w = conv2d_out_extent(input.w(), k, s, pad);
  Tensor<T> out(input.n(), p.c_out(), out_h, out_w);

  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t co = 0; co < p.c_out(); ++co) {
      if (!p.bias.empty()) {
        T* plane = out.row(n, co, 0);
        std::fill(plane, plane + out_h * out_w, p.bias[static_cast<size_t>(co)]);
      }
      for (int64_t ci = 0; ci < p.c_in(); ++ci) {
        for (int64_t kh = 0; kh < k; ++kh) {
          for (int64_t kw = 0; kw < k; ++kw) {
            const T wv = p.weight(co, ci, kh, kw);
            if (wv == T(0)) continue;
            // Valid output column range keeps iw = ow*s + kw - pad in bounds.
            int64_t ow_lo = 0;
            while (ow_lo * s + kw - pad < 0) ++ow_lo;
            int64_t ow_hi = out_w - 1;
            while (ow_hi >= 0 && ow_hi * s + kw - pad >= input.w()) --ow_hi;
            for (int64_t oh = 0; oh < out_h; ++oh) {
              const int64_t ih = oh * s + kh - pad;
              if (ih < 0 || ih >= input.h()) continue;
              const T* in_row = input.row(n, ci, ih);
              T* out_row = out.row(n, co, oh);
              const int64_t base = kw - pad;
              if (s == 1) {
                for (int64_t ow = ow_lo; ow <= ow_hi; ++ow) {
                  out_row[ow] += wv * in_row[ow + base];
                }
              } else {
                for (int64_t ow = ow_lo; ow <= ow_hi; ++ow) {
                  out_row[ow] += wv * in_row[ow * s + base];
                }
              }
            }
          }
        }
      }
    }
  }
  debug_check_finite(out, "conv2d_forward");
  return out;
}

template <typename T>
struct Conv2dGrads {
  Tensor<T> input;
  Tensor<T> weight;
  std::vector<T> bias;
};

// Gradients w.r.t. input, weight and bias given the upstream gradient.
template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const ConvParams<T>& p,
                               const Tensor<T>& upstream) {
  detail::validate_conv_args(input, p);
  const int64_t k = p.k(), s = p.stride, pad = p.padding;
  const int64_t out_h = conv2d_out_extent(input.h(), k, s, pad);
  const int64_t out_w = conv2d_out_extent(input.w(), k, s, pad);
  if (upstream.n() != input.n() || upstream.c() != p.c_out() ||
      upstream.h() != out_h || upstream.w() != out_w) {
    throw ShapeError("conv2d_backward upstream extents " + upstream.extents_str() +
                     " do not match forward output");
  }

  Conv2dGrads<T> g;
  g.input = Tensor<T>(input.n(), input.c(), input.h(), input.w());
  g.weight = Tensor<T>(p.weight.n(), p.weight.c(), p.weight.h(), p.weight.w());
  if (!p.bias.empty()) g.bias.assign(p.bias.size(), T(0));

  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t co = 0; co < p.c_out(); ++co) {
      if (!p.bias.empty()) {
        const T* up_plane = upstream.row(n, co, 0);
        T acc = T(0);
        for (int64_t i = 0; i < out_h * out_w; ++i) acc += up_plane[i];
        g.bias[static_cast<size_t>(co)] += acc;
      }
      for (int64_t ci = 0; ci < p.c_in(); ++ci) {
        for (int64_t kh = 0; kh < k; ++kh) {
          for (int64_t kw = 0; kw < k; ++kw) {
            const T wv = p.weight(co, ci, kh, kw);
            T wgrad = T(0);
            int64_t ow_lo = 0;
            while (ow_lo * s + kw - pad < 0) ++ow_lo;
            int64_t ow_hi = out_w - 1;
            while (ow_hi >= 0 && ow_hi * s + kw - pad >= input.w()) --ow_hi;
            for (int64_t oh = 0; oh < out_h; ++oh) {
              const int64_t ih = oh * s + kh - pad;
              if (ih < 0 || ih >= input.h()) continue;
              const T* in_row = input.row(n, ci, ih);
              const T* up_row = upstream.row(n, co, oh);
              T* gin_row = g.input.row(n, ci, ih);
              const int64_t base = kw - pad;
              if (s == 1) {
                for (int64_t ow = ow_lo; ow <= ow_hi; ++ow) {
                  wgrad += up_row[ow] * in_row[ow + base];
                  gin_row[ow + base] += wv * up_row[ow];
                }
              } else {
                for (int64_t ow = ow_lo; ow <= ow_hi; ++ow) {
                  wgrad += up_row[ow] * in_row[ow * s + base];
                  gin_row[ow * s + base] += wv * up_row[ow];
                }
              }
            }
            g.weight(co, ci, kh, kw) += wgrad;
          }
        }
      }
    }
  }
  debug_check_finite(g.input, "conv2d_backward/input");
  debug_check_finite(g.weight, "conv2d_backward/weight");
  return g;
}

}  // namespace hrseg
