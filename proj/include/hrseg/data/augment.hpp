#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "hrseg/core/rng.hpp"
#include "hrseg/data/dataset.hpp"
#include "hrseg/nn/resize.hpp"

namespace hrseg {

struct AugmentParams {
  double scale_min = 0.5, scale_max = 2.0;
  int64_t crop_h = 400, crop_w = 400;
  double hflip_prob = 0.5;
  // Photometric strengths; factors are drawn from [1-s, 1+s], each applied
  // with probability 0.5. Strength 0 disables the component entirely.
  double brightness = 0.5, contrast = 0.5, saturation = 0.5;
  std::array<float, 3> mean{0.5f, 0.5f, 0.5f};
  std::array<float, 3> std_dev{0.5f, 0.5f, 0.5f};

  void validate() const {
    if (scale_min > scale_max || scale_min <= 0) {
      throw ConfigError("scale range must satisfy 0 < min <= max");
    }
    if (crop_h < 1 || crop_w < 1) throw ConfigError("crop extents must be >= 1");
    for (double s : {brightness, contrast, saturation}) {
      if (s < 0 || s > 1) throw ConfigError("distortion strengths must be in [0,1]");
    }
    for (float sd : std_dev) {
      if (sd <= 0) throw ConfigError("normalization std must be > 0");
    }
  }
};

namespace detail {

inline void clamp01(Tensor<float>& t) {
  for (int64_t i = 0; i < t.size(); ++i) t[i] = std::clamp(t[i], 0.0f, 1.0f);
}

inline Tensor<float> pad_to(const Tensor<float>& t, int64_t h, int64_t w) {
  if (t.h() >= h && t.w() >= w) return t;
  Tensor<float> out(t.n(), t.c(), std::max(t.h(), h), std::max(t.w(), w));
  for (int64_t n = 0; n < t.n(); ++n) {
    for (int64_t c = 0; c < t.c(); ++c) {
      for (int64_t y = 0; y < t.h(); ++y) {
        const float* src = t.row(n, c, y);
        float* dst = out.row(n, c, y);
        std::copy(src, src + t.w(), dst);
      }
    }
  }
  return out;
}

inline Tensor<float> crop(const Tensor<float>& t, int64_t oy, int64_t ox, int64_t h,
                          int64_t w) {
  Tensor<float> out(t.n(), t.c(), h, w);
  for (int64_t n = 0; n < t.n(); ++n) {
    for (int64_t c = 0; c < t.c(); ++c) {
      for (int64_t y = 0; y < h; ++y) {
        const float* src = t.row(n, c, oy + y) + ox;
        std::copy(src, src + w, out.row(n, c, y));
      }
    }
  }
  return out;
}

inline void hflip(Tensor<float>& t) {
  for (int64_t n = 0; n < t.n(); ++n) {
    for (int64_t c = 0; c < t.c(); ++c) {
      for (int64_t y = 0; y < t.h(); ++y) {
        float* row = t.row(n, c, y);
        std::reverse(row, row + t.w());
      }
    }
  }
}

}  // namespace detail

// Applies, in order: random scale (bilinear image / nearest mask), random
// crop (zero/background padded when smaller), horizontal flip, photometric
// distortion (image only), then normalization. The rng draw order is fixed:
// scale, crop offsets, flip coin, then per-component distortion coins.
inline Sample augment(const Sample& sample, const AugmentParams& params, Rng& rng) {
  params.validate();
  if (sample.image.h() != sample.mask.h() || sample.image.w() != sample.mask.w()) {
    throw ShapeError("augment: image and mask extents differ");
  }

  Sample out;
  out.image = sample.image;
  out.mask = sample.mask;

  const double scale = rng.uniform(params.scale_min, params.scale_max);
  if (scale != 1.0) {
    const int64_t nh = std::max<int64_t>(1, std::llround(out.image.h() * scale));
    const int64_t nw = std::max<int64_t>(1, std::llround(out.image.w() * scale));
    out.image = bilinear_resize_forward(out.image, nh, nw);
    out.mask = nearest_resize(out.mask, nh, nw);
  }

  out.image = detail::pad_to(out.image, params.crop_h, params.crop_w);
  out.mask = detail::pad_to(out.mask, params.crop_h, params.crop_w);
  const int64_t oy = rng.uniform_int(0, out.image.h() - params.crop_h);
  const int64_t ox = rng.uniform_int(0, out.image.w() - params.crop_w);
  if (out.image.h() != params.crop_h || out.image.w() != params.crop_w) {
    out.image = detail::crop(out.image, oy, ox, params.crop_h, params.crop_w);
    out.mask = detail::crop(out.mask, oy, ox, params.crop_h, params.crop_w);
  }

  if (rng.bernoulli(params.hflip_prob)) {
    detail::hflip(out.image);
    detail::hflip(out.mask);
  }

  if (params.brightness > 0 && rng.bernoulli(0.5)) {
    const float f = static_cast<float>(rng.uniform(1 - params.brightness, 1 + params.brightness));
    for (int64_t i = 0; i < out.image.size(); ++i) out.image[i] *= f;
    detail::clamp01(out.image);
  }
  if (params.contrast > 0 && rng.bernoulli(0.5)) {
    const float f = static_cast<float>(rng.uniform(1 - params.contrast, 1 + params.contrast));
    double mean = 0;
    for (int64_t i = 0; i < out.image.size(); ++i) mean += out.image[i];
    const float m = static_cast<float>(mean / static_cast<double>(out.image.size()));
    for (int64_t i = 0; i < out.image.size(); ++i) {
      out.image[i] = m + (out.image[i] - m) * f;
    }
    detail::clamp01(out.image);
  }
  if (params.saturation > 0 && rng.bernoulli(0.5)) {
    const float f = static_cast<float>(rng.uniform(1 - params.saturation, 1 + params.saturation));
    for (int64_t y = 0; y < out.image.h(); ++y) {
      for (int64_t x = 0; x < out.image.w(); ++x) {
        const float luma = 0.299f * out.image(0, 0, y, x) + 0.587f * out.image(0, 1, y, x) +
                           0.114f * out.image(0, 2, y, x);
        for (int64_t c = 0; c < 3; ++c) {
          out.image(0, c, y, x) = luma + (out.image(0, c, y, x) - luma) * f;
        }
      }
    }
    detail::clamp01(out.image);
  }

  for (int64_t c = 0; c < 3; ++c) {
    const float m = params.mean[static_cast<size_t>(c)];
    const float sd = params.std_dev[static_cast<size_t>(c)];
    for (int64_t y = 0; y < out.image.h(); ++y) {
      float* row = out.image.row(0, c, y);
      for (int64_t x = 0; x < out.image.w(); ++x) row[x] = (row[x] - m) / sd;
    }
  }
  return out;
}

// Inference-time preprocessing: normalization only.
inline Tensor<float> normalize_image(const Tensor<float>& image,
                                     const std::array<float, 3>& mean,
                                     const std::array<float, 3>& std_dev) {
  Tensor<float> out = image;
  for (int64_t n = 0; n < out.n(); ++n) {
    for (int64_t c = 0; c < 3; ++c) {
      for (int64_t y = 0; y < out.h(); ++y) {
        float* row = out.row(n, c, y);
        for (int64_t x = 0; x < out.w(); ++x) {
          row[x] = (row[x] - mean[static_cast<size_t>(c)]) / std_dev[static_cast<size_t>(c)];
        }
      }
    }
  }
  return out;
}

}  // namespace hrseg
