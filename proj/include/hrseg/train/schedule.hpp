#pragma once

#include <cmath>
#include <cstdint>

#include "hrseg/core/errors.hpp"

namespace hrseg {

// Poly learning-rate policy with a linear warmup ramp:
//   iter <  warmup: base_lr * (iter + 1) / warmup
//   iter >= warmup: base_lr * (1 - iter / max_iters)^power
inline double poly_lr(int64_t iter, int64_t max_iters, int64_t warmup_iters,
                      double base_lr, double power) {
  if (iter < 0 || iter > max_iters) {
    throw ConfigError("poly_lr iteration out of range");
  }
  if (iter < warmup_iters) {
    return base_lr * static_cast<double>(iter + 1) / static_cast<double>(warmup_iters);
  }
  const double frac = 1.0 - static_cast<double>(iter) / static_cast<double>(max_iters);
  return base_lr * std::pow(frac, power);
}

}  // namespace hrseg
