#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hrseg/core/rng.hpp"
#include "hrseg/core/tensor.hpp"

namespace hrseg {

// One differentiable quantity to validate: a flat view plus where its
// analytic gradient lands in the gradient list.
struct GradCheckVar {
  std::string name;
  double* values = nullptr;
  int64_t count = 0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst;  // "var[index]" of the largest error

  bool within(double tol) const { return max_rel_err < tol; }
};

// Compares analytic gradients against central finite differences (step h) of
// the scalar loss <forward(), G> for a fixed random G. `forward` must read the
// registered variables; `analytic` receives G and returns one flat gradient
// vector per variable, in registration order. Double precision only.
inline GradCheckReport grad_check(
    const std::function<Tensor<double>()>& forward,
    const std::function<std::vector<std::vector<double>>(const Tensor<double>&)>& analytic,
    const std::vector<GradCheckVar>& vars, uint64_t seed, double step = 1e-4) {
  const Tensor<double> out0 = forward();
  Rng rng(hash_mix(seed, 0x67726164ULL));
  Tensor<double> upstream(out0.n(), out0.c(), out0.h(), out0.w());
  for (int64_t i = 0; i < upstream.size(); ++i) upstream[i] = rng.normal();

  const std::vector<std::vector<double>> grads = analytic(upstream);
  if (grads.size() != vars.size()) {
    throw NumericError("grad_check: analytic returned " + std::to_string(grads.size()) +
                       " gradients for " + std::to_string(vars.size()) + " variables");
  }

  auto loss = [&]() {
    const Tensor<double> out = forward();
    double acc = 0.0;
    for (int64_t i = 0; i < out.size(); ++i) acc += out[i] * upstream[i];
    return acc;
  };

  GradCheckReport report;
  for (size_t v = 0; v < vars.size(); ++v) {
    const GradCheckVar& var = vars[v];
    if (static_cast<int64_t>(grads[v].size()) != var.count) {
      throw NumericError("grad_check: gradient size mismatch for " + var.name);
    }
    for (int64_t i = 0; i < var.count; ++i) {
      const double saved = var.values[i];
      var.values[i] = saved + step;
      const double plus = loss();
      var.values[i] = saved - step;
      const double minus = loss();
      var.values[i] = saved;

      const double numeric = (plus - minus) / (2.0 * step);
      const double a = grads[v][static_cast<size_t>(i)];
      if (!std::isfinite(a) || !std::isfinite(numeric)) {
        throw NumericError("grad_check: non-finite gradient for " + var.name + "[" +
                           std::to_string(i) + "]");
      }
      const double rel = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-8);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = var.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

// Fills a tensor with small random values, the standard setup for checks.
inline void randomize(Tensor<double>& t, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
}

}  // namespace hrseg
