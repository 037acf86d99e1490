#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrseg/core/errors.hpp"
#include "hrseg/model/config.hpp"
#include "hrseg/nn/activations.hpp"
#include "hrseg/nn/conv2d.hpp"
#include "hrseg/nn/conv_transpose.hpp"

namespace hrseg {

enum class OpKind { conv, tconv, bn, act, resize, fuse };
enum class Role { stem, hr, sg, guide, head, aux };

// One record of the flattened execution plan. Value slots are SSA ids:
// every step reads in0 (and in1 for fuse) and writes a fresh slot.
struct PlanStep {
  OpKind kind = OpKind::conv;
  Role role = Role::stem;
  std::string name;  // learnable-registry prefix for conv/tconv/bn steps

  int in0 = -1, in1 = -1, out = -1;

  // conv / tconv
  int c_in = 0, c_out = 0, k = 0, stride = 1, pad = 0, out_pad = 0;
  bool has_bias = false;

  ActKind act = ActKind::relu;
  Fusion fuse = Fusion::sum;

  int aux_index = 0;  // > 0 when the step only feeds aux head #aux_index

  int64_t out_c = 0, out_h = 0, out_w = 0;  // expected extents per batch item
};

struct LayerPlan {
  std::vector<PlanStep> steps;
  int num_slots = 0;
  int input_slot = 0;
  int primary_out = -1;
  std::vector<int> aux_out;          // one slot per configured aux head
  std::vector<int> aux_blocks;       // block index feeding each aux head
  int64_t input_h = 0, input_w = 0;
  int64_t hr_h = 0, hr_w = 0;
};

namespace detail {

class PlanBuilder {
 public:
  PlanBuilder(const ModelConfig& cfg, int64_t in_h, int64_t in_w) : cfg_(cfg) {
    plan_.input_h = in_h;
    plan_.input_w = in_w;
    plan_.input_slot = new_slot();
    slot_c_.push_back(3);
    slot_h_.push_back(in_h);
    slot_w_.push_back(in_w);
  }

  int conv(Role role, const std::string& name, int in, int c_out, int k, int stride,
           bool bias, int aux_index = 0) {
    PlanStep s;
    s.kind = OpKind::conv;
    s.role = role;
    s.name = name;
    s.in0 = in;
    s.c_in = static_cast<int>(slot_c_[in]);
    s.c_out = c_out;
    s.k = k;
    s.stride = stride;
    s.pad = (k - 1) / 2;
    s.has_bias = bias;
    s.aux_index = aux_index;
    s.out_c = c_out;
    s.out_h = conv2d_out_extent(slot_h_[in], k, stride, s.pad);
    s.out_w = conv2d_out_extent(slot_w_[in], k, stride, s.pad);
    return push(s);
  }

  int tconv(Role role, const std::string& name, int in, int c_out, int k, int stride,
            int out_pad, bool bias, int aux_index = 0) {
    PlanStep s;
    s.kind = OpKind::tconv;
    s.role = role;
    s.name = name;
    s.in0 = in;
    s.c_in = static_cast<int>(slot_c_[in]);
    s.c_out = c_out;
    s.k = k;
    s.stride = stride;
    s.pad = (k - 1) / 2;
    s.out_pad = out_pad;
    s.has_bias = bias;
    s.aux_index = aux_index;
    s.out_c = c_out;
    s.out_h = conv_transpose_out_extent(slot_h_[in], k, stride, s.pad, out_pad);
    s.out_w = conv_transpose_out_extent(slot_w_[in], k, stride, s.pad, out_pad);
    return push(s);
  }

  int bn(Role role, const std::string& name, int in, int aux_index = 0) {
    PlanStep s;
    s.kind = OpKind::bn;
    s.role = role;
    s.name = name;
    s.in0 = in;
    s.c_in = s.c_out = static_cast<int>(slot_c_[in]);
    s.aux_index = aux_index;
    s.out_c = slot_c_[in];
    s.out_h = slot_h_[in];
    s.out_w = slot_w_[in];
    return push(s);
  }

  int act(Role role, int in, ActKind kind, int aux_index = 0) {
    PlanStep s;
    s.kind = OpKind::act;
    s.role = role;
    s.in0 = in;
    s.act = kind;
    s.aux_index = aux_index;
    s.out_c = slot_c_[in];
    s.out_h = slot_h_[in];
    s.out_w = slot_w_[in];
    return push(s);
  }

  int resize(Role role, int in, int64_t out_h, int64_t out_w, int aux_index = 0) {
    PlanStep s;
    s.kind = OpKind::resize;
    s.role = role;
    s.in0 = in;
    s.aux_index = aux_index;
    s.out_c = slot_c_[in];
    s.out_h = out_h;
    s.out_w = out_w;
    return push(s);
  }

  int fuse(int hr_in, int guide_in, Fusion mode) {
    PlanStep s;
    s.kind = OpKind::fuse;
    s.role = Role::hr;
    s.in0 = hr_in;
    s.in1 = guide_in;
    s.fuse = mode;
    s.out_c = slot_c_[hr_in];
    s.out_h = slot_h_[hr_in];
    s.out_w = slot_w_[hr_in];
    return push(s);
  }

  // Conv-BN-ReLU, the paper's "Conv2d".
  int conv_bn_relu(Role role, const std::string& name, int in, int c_out, int k, int stride,
                   int aux_index = 0) {
    int s = conv(role, name, in, c_out, k, stride, /*bias=*/false, aux_index);
    s = bn(role, name, s, aux_index);
    return act(role, s, ActKind::relu, aux_index);
  }

  // Single-step head: 3x3 Conv-BN-ReLU to 2*base, 1x1 prediction conv, then
  // bilinear straight to the target size.
  int single_step_head(Role role, const std::string& name, int in, int64_t target_h,
                       int64_t target_w, int aux_index = 0) {
    int s = conv_bn_relu(role, name + ".mid", in, 2 * cfg_.base, 3, 1, aux_index);
    s = conv(role, name + ".pred", s, cfg_.num_classes, 1, 1, /*bias=*/true, aux_index);
    return resize(role, s, target_h, target_w, aux_index);
  }

  LayerPlan build() {
    const ModelConfig& c = cfg_;
    c.validate();
    const int64_t min_side = 4 * c.hr_down;
    if (plan_.input_h < min_side || plan_.input_w < min_side) {
      throw ShapeError("input extents must be >= " + std::to_string(min_side) +
                       " for hr_resolution " + hr_resolution_str(c.hr_down));
    }

    // Stem: stride product equals hr_down, all at base channels.
    std::vector<int> stem_strides;
    if (c.hr_down == 2) stem_strides = {2, 1};
    else if (c.hr_down == 4) stem_strides = {2, 2};
    else stem_strides = {2, 2, 2};
    int cur = plan_.input_slot;
    for (size_t i = 0; i < stem_strides.size(); ++i) {
      cur = conv_bn_relu(Role::stem, "stem" + std::to_string(i + 1), cur, c.base, 3,
                         stem_strides[i]);
    }
    plan_.hr_h = slot_h_[cur];
    plan_.hr_w = slot_w_[cur];

    int hr = cur;        // fused high-resolution feature
    int sg_chain = cur;  // previous block's final SG feature (single guidance)

    for (int j = 1; j <= c.num_blocks; ++j) {
      const std::string bp = "b" + std::to_string(j);
      int sg = (c.guidance == Guidance::multi) ? hr : sg_chain;
      for (int i = 1; i <= c.layers_per_block; ++i) {
        const std::string li = std::to_string(i);
        const int hr_next = conv_bn_relu(Role::hr, bp + ".hr" + li, hr, c.base, 3, 1);
        if (c.guidance == Guidance::none) {
          hr = hr_next;
          continue;
        }
        // SG channels double per block (single) or per layer (multi).
        int sg_out, sg_stride;
        if (c.guidance == Guidance::single) {
          sg_out = c.base << j;
          sg_stride = (i == 1) ? 2 : 1;
        } else {
          sg_out = c.base << i;
          sg_stride = 2;
        }
        sg = conv_bn_relu(Role::sg, bp + ".sg" + li, sg, sg_out, 3, sg_stride);

        // Guidance: upsample to HR size, adjust channels, activate, fuse.
        int gsl = resize(Role::guide, sg, plan_.hr_h, plan_.hr_w);
        gsl = conv(Role::guide, bp + ".g" + li, gsl, c.base, 1, 1, /*bias=*/false);
        gsl = bn(Role::guide, bp + ".g" + li, gsl);
        gsl = act(Role::guide, gsl,
                  c.fusion == Fusion::sum ? ActKind::relu : ActKind::sigmoid);
        hr = fuse(hr_next, gsl, c.fusion);
      }
      if (c.guidance == Guidance::single) sg_chain = sg;
      if (c.has_aux(j)) {
        plan_.aux_blocks.push_back(j);
        const int aux_index = static_cast<int>(plan_.aux_blocks.size());
        plan_.aux_out.push_back(single_step_head(
            Role::aux, "aux" + std::to_string(j), hr, plan_.input_h, plan_.input_w,
            aux_index));
      }
    }

    if (c.head == HeadMode::single_step) {
      plan_.primary_out =
          single_step_head(Role::head, "head", hr, plan_.input_h, plan_.input_w);
    } else {
      int s = tconv(Role::head, "head.up", hr, c.base, 3, 2, 1, /*bias=*/false);
      s = bn(Role::head, "head.up", s);
      s = act(Role::head, s, ActKind::relu);
      s = conv(Role::head, "head.pred", s, c.num_classes, 3, 1, /*bias=*/true);
      plan_.primary_out = resize(Role::head, s, plan_.input_h, plan_.input_w);
    }

    // The HR path keeps one resolution throughout.
    for (const PlanStep& s : plan_.steps) {
      if (s.role == Role::hr && (s.out_h != plan_.hr_h || s.out_w != plan_.hr_w)) {
        throw ShapeError("HR-path step '" + s.name + "' leaves the HR resolution: " +
                         std::to_string(s.out_h) + "x" + std::to_string(s.out_w) +
                         " != " + std::to_string(plan_.hr_h) + "x" +
                         std::to_string(plan_.hr_w));
      }
    }
    plan_.num_slots = static_cast<int>(slot_c_.size());
    return std::move(plan_);
  }

 private:
  int new_slot() {
    return static_cast<int>(slot_c_.size());
  }

  int push(PlanStep s) {
    s.out = static_cast<int>(slot_c_.size());
    slot_c_.push_back(s.out_c);
    slot_h_.push_back(s.out_h);
    slot_w_.push_back(s.out_w);
    plan_.steps.push_back(s);
    return s.out;
  }

  const ModelConfig& cfg_;
  LayerPlan plan_;
  std::vector<int64_t> slot_c_, slot_h_, slot_w_;
};

}  // namespace detail

inline LayerPlan build_plan(const ModelConfig& config, int64_t input_h, int64_t input_w) {
  detail::PlanBuilder b(config, input_h, input_w);
  return b.build();
}

}  // namespace hrseg
