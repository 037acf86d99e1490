#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "hrseg/model/plan.hpp"

namespace hrseg {

// Multiply-accumulate count of one convolution, bias ignored:
// C_in * C_out * k * k * W_out * H_out. One MAC counts as one FLOP.
inline uint64_t conv_flops(int64_t c_in, int64_t c_out, int64_t k, int64_t out_h,
                           int64_t out_w) {
  if (c_in < 1 || c_out < 1 || k < 1 || out_h < 1 || out_w < 1) {
    throw ShapeError("conv_flops arguments must all be >= 1");
  }
  return static_cast<uint64_t>(c_in) * static_cast<uint64_t>(c_out) *
         static_cast<uint64_t>(k) * static_cast<uint64_t>(k) *
         static_cast<uint64_t>(out_h) * static_cast<uint64_t>(out_w);
}

struct LayerCost {
  std::string name;
  OpKind kind;
  int c_in = 0, c_out = 0, k = 0, stride = 1;
  double out_h = 0, out_w = 0;  // idealized analytic extents
  uint64_t params = 0;
  double flops = 0;  // 0 for bn/act/resize/fuse and for aux-only layers
  int aux_index = 0;
};

struct ComplexityReport {
  uint64_t params = 0;  // includes aux heads (they live in the checkpoint)
  double flops = 0;     // inference MACs; aux heads excluded
  std::vector<LayerCost> layers;

  double params_millions() const { return static_cast<double>(params) / 1e6; }
  double gflops() const { return flops / 1e9; }
};

// Analytic cost of a model without executing it. Spatial extents follow the
// idealized continuous form of the plan (stride-s conv divides an extent by
// s exactly, clamped at 1; transposed conv multiplies by s), so doubling the
// input extents scales every conv term, and hence the total, by exactly 4.
// Whenever the idealized extents are integral they coincide with the
// executor's, which makes the analytic counts equal the instrumented
// executor's MACs on such inputs.
inline ComplexityReport model_complexity(const ModelConfig& config, int64_t input_h,
                                         int64_t input_w) {
  config.validate();
  if (input_h % 2 != 0 || input_w % 2 != 0) {
    throw ShapeError("model_complexity expects even input extents");
  }
  const LayerPlan plan = build_plan(config, input_h, input_w);

  ComplexityReport report;
  std::vector<double> ideal_h(static_cast<size_t>(plan.num_slots), 0.0);
  std::vector<double> ideal_w(static_cast<size_t>(plan.num_slots), 0.0);
  ideal_h[static_cast<size_t>(plan.input_slot)] = static_cast<double>(input_h);
  ideal_w[static_cast<size_t>(plan.input_slot)] = static_cast<double>(input_w);

  for (const PlanStep& s : plan.steps) {
    const double in_h = ideal_h[static_cast<size_t>(s.in0)];
    const double in_w = ideal_w[static_cast<size_t>(s.in0)];
    LayerCost cost;
    cost.name = s.name;
    cost.kind = s.kind;
    cost.c_in = s.c_in;
    cost.c_out = s.c_out;
    cost.k = s.k;
    cost.stride = s.stride;
    cost.aux_index = s.aux_index;

    double out_h = in_h, out_w = in_w;
    switch (s.kind) {
      case OpKind::conv:
        out_h = std::max(1.0, in_h / s.stride);
        out_w = std::max(1.0, in_w / s.stride);
        cost.params = static_cast<uint64_t>(s.c_out) * static_cast<uint64_t>(s.c_in) *
                      static_cast<uint64_t>(s.k) * static_cast<uint64_t>(s.k) +
                      (s.has_bias ? static_cast<uint64_t>(s.c_out) : 0);
        cost.flops = static_cast<double>(s.c_in) * s.c_out * s.k * s.k * out_h * out_w;
        break;
      case OpKind::tconv:
        out_h = in_h * s.stride;
        out_w = in_w * s.stride;
        cost.params = static_cast<uint64_t>(s.c_out) * static_cast<uint64_t>(s.c_in) *
                      static_cast<uint64_t>(s.k) * static_cast<uint64_t>(s.k) +
                      (s.has_bias ? static_cast<uint64_t>(s.c_out) : 0);
        // Counted at the output extents, like an ordinary conv producing them.
        cost.flops = static_cast<double>(s.c_in) * s.c_out * s.k * s.k * out_h * out_w;
        break;
      case OpKind::bn:
        cost.params = 2 * static_cast<uint64_t>(s.c_out);
        break;
      case OpKind::resize:
        // Targets are integer plan extents (HR or input size); they double
        // exactly with the input, preserving the x4 law downstream.
        out_h = static_cast<double>(s.out_h);
        out_w = static_cast<double>(s.out_w);
        break;
      case OpKind::act:
      case OpKind::fuse:
        break;
    }
    ideal_h[static_cast<size_t>(s.out)] = out_h;
    ideal_w[static_cast<size_t>(s.out)] = out_w;
    cost.out_h = out_h;
    cost.out_w = out_w;

    report.params += cost.params;
    if (s.aux_index > 0) cost.flops = 0;  // aux heads are ignored at inference
    report.flops += cost.flops;
    if (s.kind == OpKind::conv || s.kind == OpKind::tconv || s.kind == OpKind::bn) {
      report.layers.push_back(cost);
    }
  }
  return report;
}

inline std::string complexity_table(const ComplexityReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-14s %-6s %5s %5s %2s %2s %9s %12s %14s\n", "layer",
                "kind", "c_in", "c_out", "k", "s", "out", "params", "flops");
  out += line;
  for (const LayerCost& l : report.layers) {
    const char* kind = l.kind == OpKind::conv ? "conv" : l.kind == OpKind::tconv ? "tconv" : "bn";
    char shape[32];
    std::snprintf(shape, sizeof(shape), "%gx%g", l.out_h, l.out_w);
    std::snprintf(line, sizeof(line), "%-14s %-6s %5d %5d %2d %2d %9s %12llu %14.0f%s\n",
                  l.name.c_str(), kind, l.c_in, l.c_out, l.k, l.stride, shape,
                  static_cast<unsigned long long>(l.params), l.flops,
                  l.aux_index > 0 ? "  (aux)" : "");
    out += line;
  }
  std::snprintf(line, sizeof(line), "params=%.6fM flops=%.6fGFLOPs\n",
                report.params_millions(), report.gflops());
  out += line;
  return out;
}

}  // namespace hrseg
