#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hrseg/core/rng.hpp"
#include "hrseg/data/dataset.hpp"

namespace hrseg {

namespace detail {

// Coarse value noise sampled bilinearly, plus per-pixel grain.
inline void paint_background(Tensor<float>& image, Rng& rng) {
  const int64_t h = image.h(), w = image.w();
  const int64_t cell = std::max<int64_t>(8, h / 8);
  const int64_t gw = w / cell + 2, gh = h / cell + 2;
  std::vector<float> grid(static_cast<size_t>(gw * gh));
  for (auto& g : grid) g = static_cast<float>(rng.uniform(-1.0, 1.0));

  float base[3];
  const float gray = static_cast<float>(rng.uniform(0.45, 0.7));
  for (int c = 0; c < 3; ++c) {
    base[c] = gray + static_cast<float>(rng.uniform(-0.05, 0.05));
  }
  for (int64_t y = 0; y < h; ++y) {
    const double gy = static_cast<double>(y) / static_cast<double>(cell);
    const int64_t y0 = static_cast<int64_t>(gy);
    const double fy = gy - static_cast<double>(y0);
    for (int64_t x = 0; x < w; ++x) {
      const double gx = static_cast<double>(x) / static_cast<double>(cell);
      const int64_t x0 = static_cast<int64_t>(gx);
      const double fx = gx - static_cast<double>(x0);
      const float* g = grid.data() + y0 * gw + x0;
      const double noise = (1 - fy) * ((1 - fx) * g[0] + fx * g[1]) +
                           fy * ((1 - fx) * g[gw] + fx * g[gw + 1]);
      const float grain = static_cast<float>(rng.uniform(-0.02, 0.02));
      for (int64_t c = 0; c < 3; ++c) {
        image(0, c, y, x) =
            std::clamp(base[c] + 0.08f * static_cast<float>(noise) + grain, 0.0f, 1.0f);
      }
    }
  }
}

// Rasterizes one jagged polyline crack; returns pixels painted. Painting
// stops once budget is exhausted so the total crack fraction stays bounded.
inline int64_t paint_crack(Tensor<float>& image, Tensor<float>& mask, Rng& rng,
                           int64_t budget) {
  const int64_t h = image.h(), w = image.w();
  const int segments = static_cast<int>(rng.uniform_int(6, 14));
  const double seg_len = static_cast<double>(h) / 14.0;
  double x = rng.uniform(0.1, 0.9) * static_cast<double>(w);
  double y = rng.uniform(0.1, 0.9) * static_cast<double>(h);
  double heading = rng.uniform(0.0, 6.283185307179586);

  const double est_len = segments * seg_len;
  // Width 1..5 px, trimmed to the remaining pixel budget; scaled up on large
  // canvases so even a single hairline clears the minimum-fraction check.
  const int64_t min_width = std::max<int64_t>(1, h / 700 + 1);
  int64_t width = rng.uniform_int(1, 5);
  width = std::max(width, min_width);
  width = std::min(width, std::max<int64_t>(1, budget / std::max<int64_t>(1, int64_t(est_len * 1.3))));
  const double radius = static_cast<double>(width) / 2.0;
  const float shade = static_cast<float>(rng.uniform(0.1, 0.35));

  int64_t painted = 0;
  for (int s = 0; s < segments && painted < budget; ++s) {
    heading += rng.uniform(-0.5, 0.5);
    const double len = seg_len * rng.uniform(0.7, 1.3);
    const double dx = std::cos(heading), dy = std::sin(heading);
    const int steps = std::max(1, static_cast<int>(len / 0.4));
    for (int t = 0; t < steps && painted < budget; ++t) {
      x += dx * len / steps;
      y += dy * len / steps;
      x = std::clamp(x, 1.0, static_cast<double>(w - 2));
      y = std::clamp(y, 1.0, static_cast<double>(h - 2));
      const int64_t x_lo = std::max<int64_t>(0, static_cast<int64_t>(x - radius - 1));
      const int64_t x_hi = std::min<int64_t>(w - 1, static_cast<int64_t>(x + radius + 1));
      const int64_t y_lo = std::max<int64_t>(0, static_cast<int64_t>(y - radius - 1));
      const int64_t y_hi = std::min<int64_t>(h - 1, static_cast<int64_t>(y + radius + 1));
      for (int64_t py = y_lo; py <= y_hi && painted < budget; ++py) {
        for (int64_t px = x_lo; px <= x_hi && painted < budget; ++px) {
          const double ddx = static_cast<double>(px) - x;
          const double ddy = static_cast<double>(py) - y;
          if (ddx * ddx + ddy * ddy > radius * radius) continue;
          if (mask(0, 0, py, px) == 1.0f) continue;
          mask(0, 0, py, px) = 1.0f;
          ++painted;
          for (int64_t c = 0; c < 3; ++c) {
            image(0, c, py, px) *= shade;
          }
        }
      }
    }
  }
  return painted;
}

}  // namespace detail

// Deterministic per (seed, index): same arguments always produce byte
// identical PNG pairs.
inline Sample make_synthetic_sample(int64_t size, uint64_t seed, int64_t index) {
  Rng rng(hash_mix(seed, static_cast<uint64_t>(index)));
  Sample s;
  s.image = Tensor<float>(1, 3, size, size);
  s.mask = Tensor<float>(1, 1, size, size);
  detail::paint_background(s.image, rng);

  const int64_t total_px = size * size;
  const int64_t budget = total_px * 8 / 100;
  const int64_t min_px = std::max<int64_t>(1, total_px / 800);  // 0.125%
  int64_t painted = 0;
  const int64_t cracks = rng.uniform_int(1, 3);
  for (int64_t i = 0; i < cracks; ++i) {
    painted += detail::paint_crack(s.image, s.mask, rng, budget - painted);
  }
  for (int guard = 0; painted < min_px && guard < 64; ++guard) {
    painted += detail::paint_crack(s.image, s.mask, rng, budget - painted);
  }
  return s;
}

// Writes count image/mask pairs plus manifest.txt into out_dir.
inline void gen_synthetic(int64_t count, int64_t size, uint64_t seed,
                          const std::string& out_dir) {
  if (count < 1) throw ConfigError("count must be >= 1");
  if (size < 64) throw ConfigError("size must be >= 64");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory '" + out_dir + "'");
  }
  for (int64_t i = 0; i < count; ++i) {
    const Sample s = make_synthetic_sample(size, seed, i);
    write_png(out_dir + "/" + index_name("image", static_cast<int>(i)),
              tensor_to_image(s.image));
    write_mask(out_dir + "/" + index_name("mask", static_cast<int>(i)), s.mask);
  }
  std::ofstream manifest(out_dir + "/manifest.txt", std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest in '" + out_dir + "'");
  manifest << "seed = " << seed << "\n"
           << "count = " << count << "\n"
           << "size = " << size << "\n";
}

}  // namespace hrseg
