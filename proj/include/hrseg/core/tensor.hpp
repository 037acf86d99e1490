#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "hrseg/core/errors.hpp"

// Per-element finiteness scans are debug-build instrumentation; they can be
// forced on in optimized builds with -DHRSEG_CHECK_FINITE=1.
#ifndef HRSEG_CHECK_FINITE
#ifdef NDEBUG
#define HRSEG_CHECK_FINITE 0
#else
#define HRSEG_CHECK_FINITE 1
#endif
#endif

namespace hrseg {

// Dense 4-D array in NCHW order, W fastest. The single value type for
// activations, weights and gradients; T is float for training/inference and
// double for gradient checking.
template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>, "Tensor is a real-valued type");

 public:
  Tensor() = default;

  Tensor(int64_t n, int64_t c, int64_t h, int64_t w, T init = T(0))
      : n_(n), c_(c), h_(h), w_(w) {
    if (n < 1 || c < 1 || h < 1 || w < 1) {
      throw ShapeError("tensor extents must all be >= 1, got (" +
                       std::to_string(n) + "," + std::to_string(c) + "," +
                       std::to_string(h) + "," + std::to_string(w) + ")");
    }
    data_.assign(static_cast<size_t>(n * c * h * w), init);
  }

  int64_t n() const { return n_; }
  int64_t c() const { return c_; }
  int64_t h() const { return h_; }
  int64_t w() const { return w_; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  T& operator()(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * c_ + c) * h_ + h) * w_ + w)];
  }
  const T& operator()(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * c_ + c) * h_ + h) * w_ + w)];
  }

  // Pointer to the start of row (n, c, h).
  T* row(int64_t n, int64_t c, int64_t h) {
    return data_.data() + static_cast<size_t>(((n * c_ + c) * h_ + h) * w_);
  }
  const T* row(int64_t n, int64_t c, int64_t h) const {
    return data_.data() + static_cast<size_t>(((n * c_ + c) * h_ + h) * w_);
  }

  bool same_extents(const Tensor& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  std::string extents_str() const {
    return "(" + std::to_string(n_) + "," + std::to_string(c_) + "," +
           std::to_string(h_) + "," + std::to_string(w_) + ")";
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(n_, c_, h_, w_);
    for (int64_t i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool bit_equal(const Tensor& o) const {
    return same_extents(o) && std::equal(data_.begin(), data_.end(), o.data_.begin());
  }

 private:
  int64_t n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<T> data_;
};

template <typename T>
void check_finite(const Tensor<T>& t, const char* where) {
  for (int64_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw NumericError(std::string(where) + ": non-finite value at flat index " +
                         std::to_string(i));
    }
  }
}

template <typename T>
inline void debug_check_finite(const Tensor<T>& t, const char* where) {
#if HRSEG_CHECK_FINITE
  check_finite(t, where);
#else
  (void)t;
  (void)where;
#endif
}

template <typename T>
void require_same_extents(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (!a.same_extents(b)) {
    throw ShapeError(std::string(what) + ": extents mismatch " + a.extents_str() +
                     " vs " + b.extents_str());
  }
}

}  // namespace hrseg
