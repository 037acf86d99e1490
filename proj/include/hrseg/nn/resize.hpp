#pragma once

#include <algorithm>
#include <cmath>

#include "hrseg/core/tensor.hpp"

namespace hrseg {

namespace detail {

// Half-pixel-center source coordinate, clamped to the border.
struct BilinearTap {
  int64_t lo, hi;
  double w_hi;  // weight of hi; lo gets 1 - w_hi
};

inline BilinearTap bilinear_tap(int64_t dst, int64_t in_extent, int64_t out_extent) {
  const double scale = static_cast<double>(in_extent) / static_cast<double>(out_extent);
  double src = (static_cast<double>(dst) + 0.5) * scale - 0.5;
  src = std::clamp(src, 0.0, static_cast<double>(in_extent - 1));
  BilinearTap t;
  t.lo = static_cast<int64_t>(std::floor(src));
  t.hi = std::min(t.lo + 1, in_extent - 1);
  t.w_hi = src - static_cast<double>(t.lo);
  return t;
}

inline int64_t nearest_tap(int64_t dst, int64_t in_extent, int64_t out_extent) {
  const double scale = static_cast<double>(in_extent) / static_cast<double>(out_extent);
  const int64_t src = static_cast<int64_t>(std::floor((static_cast<double>(dst) + 0.5) * scale));
  return std::clamp<int64_t>(src, 0, in_extent - 1);
}

}  // namespace detail

template <typename T>
Tensor<T> bilinear_resize_forward(const Tensor<T>& input, int64_t out_h, int64_t out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("bilinear_resize target extents must be >= 1");
  if (out_h == input.h() && out_w == input.w()) return input;  // exact identity

  Tensor<T> out(input.n(), input.c(), out_h, out_w);
  std::vector<detail::BilinearTap> col(static_cast<size_t>(out_w));
  for (int64_t x = 0; x < out_w; ++x) col[x] = detail::bilinear_tap(x, input.w(), out_w);

  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t c = 0; c < input.c(); ++c) {
      for (int64_t y = 0; y < out_h; ++y) {
        const auto ty = detail::bilinear_tap(y, input.h(), out_h);
        const T* row_lo = input.row(n, c, ty.lo);
        const T* row_hi = input.row(n, c, ty.hi);
        T* out_row = out.row(n, c, y);
        for (int64_t x = 0; x < out_w; ++x) {
          const auto& tx = col[x];
          const double top = (1.0 - tx.w_hi) * row_lo[tx.lo] + tx.w_hi * row_lo[tx.hi];
          const double bot = (1.0 - tx.w_hi) * row_hi[tx.lo] + tx.w_hi * row_hi[tx.hi];
          out_row[x] = static_cast<T>((1.0 - ty.w_hi) * top + ty.w_hi * bot);
        }
      }
    }
  }
  return out;
}

// Scatters the interpolation weights back to the source grid.
template <typename T>
Tensor<T> bilinear_resize_backward(int64_t in_h, int64_t in_w, const Tensor<T>& upstream) {
  Tensor<T> g(upstream.n(), upstream.c(), in_h, in_w);
  if (in_h == upstream.h() && in_w == upstream.w()) {
    for (int64_t i = 0; i < upstream.size(); ++i) g[i] = upstream[i];
    return g;
  }
  std::vector<detail::BilinearTap> col(static_cast<size_t>(upstream.w()));
  for (int64_t x = 0; x < upstream.w(); ++x) col[x] = detail::bilinear_tap(x, in_w, upstream.w());

  for (int64_t n = 0; n < upstream.n(); ++n) {
    for (int64_t c = 0; c < upstream.c(); ++c) {
      for (int64_t y = 0; y < upstream.h(); ++y) {
        const auto ty = detail::bilinear_tap(y, in_h, upstream.h());
        T* g_lo = g.row(n, c, ty.lo);
        T* g_hi = g.row(n, c, ty.hi);
        const T* up_row = upstream.row(n, c, y);
        for (int64_t x = 0; x < upstream.w(); ++x) {
          const auto& tx = col[x];
          const double u = up_row[x];
          g_lo[tx.lo] += static_cast<T>((1.0 - ty.w_hi) * (1.0 - tx.w_hi) * u);
          g_lo[tx.hi] += static_cast<T>((1.0 - ty.w_hi) * tx.w_hi * u);
          g_hi[tx.lo] += static_cast<T>(ty.w_hi * (1.0 - tx.w_hi) * u);
          g_hi[tx.hi] += static_cast<T>(ty.w_hi * tx.w_hi * u);
        }
      }
    }
  }
  return g;
}

// Nearest-neighbour resize; the only resampling ever applied to masks.
template <typename T>
Tensor<T> nearest_resize(const Tensor<T>& input, int64_t out_h, int64_t out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("nearest_resize target extents must be >= 1");
  if (out_h == input.h() && out_w == input.w()) return input;
  Tensor<T> out(input.n(), input.c(), out_h, out_w);
  std::vector<int64_t> col(static_cast<size_t>(out_w));
  for (int64_t x = 0; x < out_w; ++x) col[x] = detail::nearest_tap(x, input.w(), out_w);
  for (int64_t n = 0; n < input.n(); ++n) {
    for (int64_t c = 0; c < input.c(); ++c) {
      for (int64_t y = 0; y < out_h; ++y) {
        const T* in_row = input.row(n, c, detail::nearest_tap(y, input.h(), out_h));
        T* out_row = out.row(n, c, y);
        for (int64_t x = 0; x < out_w; ++x) out_row[x] = in_row[col[x]];
      }
    }
  }
  return out;
}

}  // namespace hrseg
