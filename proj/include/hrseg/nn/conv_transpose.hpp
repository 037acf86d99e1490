#pragma once

#include <string>
#include <vector>

#include "hrseg/core/tensor.hpp"

namespace hrseg {

// Transposed convolution. weight is (C_in, C_out, k, k) so that the forward
// pass over a buffer equals the input-gradient of a conv2d whose weight
// (C_out_conv=C_in, C_in_conv=C_out) shares the same memory layout.
template <typename T>
struct ConvTransposeParams {
  Tensor<T> weight;
  std::vector<T> bias;
  int stride = 1;
  int padding = 0;
  int output_padding = 0;

  int64_t c_in() const { return weight.n(); }
  int64_t c_out() const { return weight.c(); }
  int64_t k() const { return weight.h(); }
};

inline int64_t conv_transpose_out_extent(int64_t in, int64_t k, int64_t stride,
                                         int64_t pad, int64_t out_pad) {
  const int64_t out = (in - 1) * stride - 2 * pad + k + out_pad;
  if (out < 1) {
    throw ShapeError("transposed conv output extent " + std::to_string(out));
  }
  return out;
}

namespace detail {

template <typename T>
void validate_tconv_args(const Tensor<T>& input, const ConvTransposeParams<T>& p) {
  if (input.c() != p.c_in()) {
    throw ShapeError("transposed conv channel mismatch: input has " +
                     std::to_string(input.c()) + ", weight expects " +
                     std::to_string(p.c_in()));
  }
  if (p.stride < 1 || p.padding < 0 || p.output_padding < 0 ||
      p.output_padding >= p.stride) {
    throw ShapeError("transposed conv requires stride >= 1, pad >= 0, "
                     "0 <= output_padding < stride");
  }
  if (!p.bias.empty() && static_cast<int64_t>(p.bias.size()) != p.c_out()) {
    throw ShapeError("transposed conv bias length mismatch");
  }
}

}  // namespace detail

template <typename T>
Tensor<T> conv_transpose_forward(const Tensor<T>& input, const ConvTransposeParams<T>& p) {
  detail::validate_tconv_args(input, p);
  const int64_t k = p.k(), s = p.stride, pad = p.padding;
  const int64_t out_h = conv_transpose_out_extent(input.h(), k, s, pad, p.output_padding);
  const int64_t out_w = conv_transpose_out_extent(input.w(), k, s, pad, p.output_padding);
  Tensor<T> out(input.n(), p.c_out(), out_h, out_w);

  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t ci = 0; ci < p.c_in(); ++ci) {
      for (int64_t co = 0; co < p.c_out(); ++co) {
        for (int64_t kh = 0; kh < k; ++kh) {
          for (int64_t kw = 0; kw < k; ++kw) {
            const T wv = p.weight(ci, co, kh, kw);
            if (wv == T(0)) continue;
            for (int64_t ih = 0; ih < input.h(); ++ih) {
              const int64_t oh = ih * s + kh - pad;
              if (oh < 0 || oh >= out_h) continue;
              const T* in_row = input.row(n, ci, ih);
              T* out_row = out.row(n, co, oh);
              for (int64_t iw = 0; iw < input.w(); ++iw) {
                const int64_t ow = iw * s + kw - pad;
                if (ow < 0 || ow >= out_w) continue;
                out_row[ow] += wv * in_row[iw];
              }
            }
          }
        }
      }
    }
  }
  if (!p.bias.empty()) {
    for (int64_t n = 0; n < out.n(); ++n) {
      for (int64_t co = 0; co < out.c(); ++co) {
        T* plane = out.row(n, co, 0);
        const T b = p.bias[static_cast<size_t>(co)];
        for (int64_t i = 0; i < out_h * out_w; ++i) plane[i] += b;
      }
    }
  }
  debug_check_finite(out, "conv_transpose_forward");
  return out;
}

template <typename T>
struct ConvTransposeGrads {
  Tensor<T> input;
  Tensor<T> weight;
  std::vector<T> bias;
};

template <typename T>
ConvTransposeGrads<T> conv_transpose_backward(const Tensor<T>& input,
                                              const ConvTransposeParams<T>& p,
                                              const Tensor<T>& upstream) {
  detail::validate_tconv_args(input, p);
  const int64_t k = p.k(), s = p.stride, pad = p.padding;
  const int64_t out_h = conv_transpose_out_extent(input.h(), k, s, pad, p.output_padding);
  const int64_t out_w = conv_transpose_out_extent(input.w(), k, s, pad, p.output_padding);
  if (upstream.n() != input.n() || upstream.c() != p.c_out() ||
      upstream.h() != out_h || upstream.w() != out_w) {
    throw ShapeError("conv_transpose_backward upstream extents " +
                     upstream.extents_str() + " do not match forward output");
  }

  ConvTransposeGrads<T> g;
  g.input = Tensor<T>(input.n(), input.c(), input.h(), input.w());
  g.weight = Tensor<T>(p.weight.n(), p.weight.c(), p.weight.h(), p.weight.w());
  if (!p.bias.empty()) g.bias.assign(p.bias.size(), T(0));

  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t ci = 0; ci < p.c_in(); ++ci) {
      for (int64_t co = 0; co < p.c_out(); ++co) {
        for (int64_t kh = 0; kh < k; ++kh) {
          for (int64_t kw = 0; kw < k; ++kw) {
            const T wv = p.weight(ci, co, kh, kw);
            T wgrad = T(0);
            for (int64_t ih = 0; ih < input.h(); ++ih) {
              const int64_t oh = ih * s + kh - pad;
              if (oh < 0 || oh >= out_h) continue;
              const T* in_row = input.row(n, ci, ih);
              const T* up_row = upstream.row(n, co, oh);
              T* gin_row = g.input.row(n, ci, ih);
              for (int64_t iw = 0; iw < input.w(); ++iw) {
                const int64_t ow = iw * s + kw - pad;
                if (ow < 0 || ow >= out_w) continue;
                wgrad += in_row[iw] * up_row[ow];
                gin_row[iw] += wv * up_row[ow];
              }
            }
            g.weight(ci, co, kh, kw) += wgrad;
          }
        }
      }
    }
  }
  if (!p.bias.empty()) {
    for (int64_t n = 0; n < upstream.n(); ++n) {
      for (int64_t co = 0; co < upstream.c(); ++co) {
        const T* plane = upstream.row(n, co, 0);
        T acc = T(0);
        for (int64_t i = 0; i < out_h * out_w; ++i) acc += plane[i];
        g.bias[static_cast<size_t>(co)] += acc;
      }
    }
  }
  debug_check_finite(g.input, "conv_transpose_backward/input");
  debug_check_finite(g.weight, "conv_transpose_backward/weight");
  return g;
}

}  // namespace hrseg
