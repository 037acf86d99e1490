#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hrseg/core/rng.hpp"
#include "hrseg/core/tensor.hpp"
#include "hrseg/model/config.hpp"
#include "hrseg/model/plan.hpp"
#include "hrseg/nn/activations.hpp"
#include "hrseg/nn/batchnorm.hpp"
#include "hrseg/nn/conv2d.hpp"
#include "hrseg/nn/conv_transpose.hpp"
#include "hrseg/nn/fuse.hpp"
#include "hrseg/nn/resize.hpp"

namespace hrseg {

enum class RunMode { train, infer };

template <typename T>
struct ForwardResult {
  Tensor<T> primary;
  std::vector<Tensor<T>> aux;  // one per configured aux head in train mode
};

// Executor-side multiply-accumulate probe: each conv/tconv layer contributes
// c_in * c_out * k^2 * out_h * out_w taken from the tensor it just produced.
struct MacCounter {
  std::map<std::string, uint64_t> per_layer;
  uint64_t total = 0;

  void add(const std::string& name, uint64_t macs) {
    per_layer[name] += macs;
    total += macs;
  }
};

// Reference to one learnable span inside the model.
template <typename T>
struct LearnableRef {
  std::string name;
  T* data = nullptr;
  int64_t count = 0;
  bool weight_decay = false;  // conv/tconv weights only
};

// Named view over every persistent tensor (learnables + BN running stats),
// in plan order; the checkpoint serializes exactly this sequence.
template <typename T>
struct RegistryView {
  std::string name;
  std::vector<uint32_t> extents;
  T* data = nullptr;
  int64_t count = 0;
};

template <typename T>
class Model {
 public:
  Model() = default;

  // Builds parameters from the structural plan with kaiming-normal conv
  // weights (std = sqrt(2 / (C_in * k * k)), per-name seeded), zero biases,
  // BN gamma=1 / beta=0.
  static Model build(const ModelConfig& config, uint64_t seed) {
    config.validate();
    Model m;
    m.config_ = config;
    const int64_t ref = 8 * config.hr_down;  // structure is size-independent
    m.param_plan_ = build_plan(config, ref, ref);
    for (const PlanStep& s : m.param_plan_.steps) {
      if (s.kind == OpKind::conv) {
        ConvParams<T> p;
        p.weight = Tensor<T>(s.c_out, s.c_in, s.k, s.k);
        if (s.has_bias) p.bias.assign(static_cast<size_t>(s.c_out), T(0));
        p.stride = s.stride;
        p.padding = s.pad;
        init_kaiming(p.weight, s.c_in, s.k, seed, s.name);
        m.convs_.emplace(s.name, std::move(p));
      } else if (s.kind == OpKind::tconv) {
        ConvTransposeParams<T> p;
        p.weight = Tensor<T>(s.c_in, s.c_out, s.k, s.k);
        if (s.has_bias) p.bias.assign(static_cast<size_t>(s.c_out), T(0));
        p.stride = s.stride;
        p.padding = s.pad;
        p.output_padding = s.out_pad;
        init_kaiming(p.weight, s.c_in, s.k, seed, s.name);
        m.tconvs_.emplace(s.name, std::move(p));
      } else if (s.kind == OpKind::bn) {
        m.bns_.emplace(s.name, BatchNormState<T>(s.c_out));
      }
    }
    return m;
  }

  const ModelConfig& config() const { return config_; }

  const LayerPlan& plan_for(int64_t h, int64_t w) const {
    if (!runtime_plan_ || runtime_plan_->input_h != h || runtime_plan_->input_w != w) {
      runtime_plan_ = build_plan(config_, h, w);
    }
    return *runtime_plan_;
  }

  ForwardResult<T> forward(const Tensor<T>& batch, RunMode mode, MacCounter* macs = nullptr) {
    if (batch.c() != 3) {
      throw ShapeError("model input must have 3 channels, got " + batch.extents_str());
    }
    const LayerPlan& plan = plan_for(batch.h(), batch.w());
    std::vector<Tensor<T>> slots(static_cast<size_t>(plan.num_slots));
    std::vector<BnCache<T>> bn_caches(plan.steps.size());
    slots[static_cast<size_t>(plan.input_slot)] = batch;

    for (size_t si = 0; si < plan.steps.size(); ++si) {
      const PlanStep& s = plan.steps[si];
      if (mode == RunMode::infer && s.aux_index > 0) continue;  // aux heads detached
      const Tensor<T>& in = slots[static_cast<size_t>(s.in0)];
      Tensor<T> out;
      switch (s.kind) {
        case OpKind::conv:
          out = conv2d_forward(in, convs_.at(s.name));
          break;
        case OpKind::tconv:
          out = conv_transpose_forward(in, tconvs_.at(s.name));
          break;
        case OpKind::bn:
          out = batchnorm_forward(in, bns_.at(s.name),
                                  mode == RunMode::train ? BnMode::train : BnMode::infer,
                                  mode == RunMode::train ? &bn_caches[si] : nullptr);
          break;
        case OpKind::act:
          out = activation_forward(in, s.act);
          break;
        case OpKind::resize:
          out = bilinear_resize_forward(in, s.out_h, s.out_w);
          break;
        case OpKind::fuse:
          out = fuse_forward(in, slots[static_cast<size_t>(s.in1)], s.fuse);
          break;
      }
      if (out.c() != s.out_c || out.h() != s.out_h || out.w() != s.out_w) {
        throw StateError("plan mismatch at step '" + s.name + "': produced " +
                         out.extents_str());
      }
      if (macs && (s.kind == OpKind::conv || s.kind == OpKind::tconv)) {
        macs->add(s.name, static_cast<uint64_t>(s.c_in) * static_cast<uint64_t>(s.c_out) *
                              static_cast<uint64_t>(s.k) * static_cast<uint64_t>(s.k) *
                              static_cast<uint64_t>(out.h()) * static_cast<uint64_t>(out.w()) *
                              static_cast<uint64_t>(out.n()));
      }
      slots[static_cast<size_t>(s.out)] = std::move(out);
    }

    ForwardResult<T> r;
    r.primary = slots[static_cast<size_t>(plan.primary_out)];
    if (mode == RunMode::train) {
      for (int slot : plan.aux_out) r.aux.push_back(slots[static_cast<size_t>(slot)]);
      cache_slots_ = std::move(slots);
      cache_bn_ = std::move(bn_caches);
      cache_plan_ = plan;
      has_cache_ = true;
    }
    return r;
  }

  // Accumulates gradients for every learnable from the primary and aux
  // upstream gradients; consumes the caches of the last train-mode forward.
  void backward(const Tensor<T>& grad_primary, const std::vector<Tensor<T>>& grad_aux) {
    if (!has_cache_) throw StateError("backward without a preceding train-mode forward");
    const LayerPlan& plan = cache_plan_;
    if (grad_aux.size() != plan.aux_out.size()) {
      throw ShapeError("backward expects " + std::to_string(plan.aux_out.size()) +
                       " aux gradients, got " + std::to_string(grad_aux.size()));
    }
    zero_grads();

    std::vector<Tensor<T>> slot_grads(static_cast<size_t>(plan.num_slots));
    auto accumulate = [&](int slot, Tensor<T>&& g) {
      Tensor<T>& dst = slot_grads[static_cast<size_t>(slot)];
      if (dst.empty()) {
        dst = std::move(g);
      } else {
        require_same_extents(dst, g, "slot gradient");
        for (int64_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
      }
    };

    {
      const Tensor<T>& primary = cache_slots_[static_cast<size_t>(plan.primary_out)];
      require_same_extents(primary, grad_primary, "grad_primary");
      accumulate(plan.primary_out, Tensor<T>(grad_primary));
      for (size_t i = 0; i < grad_aux.size(); ++i) {
        const Tensor<T>& aux = cache_slots_[static_cast<size_t>(plan.aux_out[i])];
        require_same_extents(aux, grad_aux[i], "grad_aux");
        accumulate(plan.aux_out[i], Tensor<T>(grad_aux[i]));
      }
    }

    for (size_t idx = plan.steps.size(); idx-- > 0;) {
      const PlanStep& s = plan.steps[idx];
      Tensor<T>& up = slot_grads[static_cast<size_t>(s.out)];
      if (up.empty()) continue;
      const Tensor<T>& in = cache_slots_[static_cast<size_t>(s.in0)];
      switch (s.kind) {
        case OpKind::conv: {
          auto g = conv2d_backward(in, convs_.at(s.name), up);
          add_weight_grad(s.name + ".w", g.weight);
          if (!g.bias.empty()) add_vector_grad(s.name + ".b", g.bias);
          accumulate(s.in0, std::move(g.input));
          break;
        }
        case OpKind::tconv: {
          auto g = conv_transpose_backward(in, tconvs_.at(s.name), up);
          add_weight_grad(s.name + ".w", g.weight);
          if (!g.bias.empty()) add_vector_grad(s.name + ".b", g.bias);
          accumulate(s.in0, std::move(g.input));
          break;
        }
        case OpKind::bn: {
          auto g = batchnorm_backward(in, bns_.at(s.name), cache_bn_[idx], up);
          add_vector_grad(s.name + ".bn.g", g.gamma);
          add_vector_grad(s.name + ".bn.b", g.beta);
          accumulate(s.in0, std::move(g.input));
          break;
        }
        case OpKind::act: {
          if (s.act == ActKind::relu) {
            accumulate(s.in0, relu_backward(in, up));
          } else {
            accumulate(s.in0,
                       sigmoid_backward(cache_slots_[static_cast<size_t>(s.out)], up));
          }
          break;
        }
        case OpKind::resize: {
          accumulate(s.in0, bilinear_resize_backward(in.h(), in.w(), up));
          break;
        }
        case OpKind::fuse: {
          auto [gh, gs] = fuse_backward(in, cache_slots_[static_cast<size_t>(s.in1)],
                                        s.fuse, up);
          accumulate(s.in0, std::move(gh));
          accumulate(s.in1, std::move(gs));
          break;
        }
      }
      up = Tensor<T>();  // released; every consumer already ran
    }

    cache_slots_.clear();
    cache_bn_.clear();
    has_cache_ = false;
  }

  // Learnables in plan order: conv/tconv weight (+bias), BN gamma/beta.
  std::vector<LearnableRef<T>> learnables() {
    std::vector<LearnableRef<T>> refs;
    for (const PlanStep& s : param_plan_.steps) {
      if (s.kind == OpKind::conv || s.kind == OpKind::tconv) {
        Tensor<T>& w = weight_of(s);
        refs.push_back({s.name + ".w", w.data(), w.size(), true});
        std::vector<T>& b = bias_of(s);
        if (!b.empty()) {
          refs.push_back({s.name + ".b", b.data(), static_cast<int64_t>(b.size()), false});
        }
      } else if (s.kind == OpKind::bn) {
        BatchNormState<T>& bn = bns_.at(s.name);
        refs.push_back({s.name + ".bn.g", bn.gamma.data(),
                        static_cast<int64_t>(bn.gamma.size()), false});
        refs.push_back({s.name + ".bn.b", bn.beta.data(),
                        static_cast<int64_t>(bn.beta.size()), false});
      }
    }
    return refs;
  }

  // Gradient span for a learnable name; empty until backward has run.
  std::vector<T>* gradient(const std::string& name) {
    auto it = grads_.find(name);
    return it == grads_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, std::vector<T>>& gradients() const { return grads_; }

  // Persistent named tensors in canonical (plan) order.
  std::vector<RegistryView<T>> registry() {
    std::vector<RegistryView<T>> views;
    auto add4 = [&](const std::string& name, Tensor<T>& t) {
      views.push_back({name,
                       {static_cast<uint32_t>(t.n()), static_cast<uint32_t>(t.c()),
                        static_cast<uint32_t>(t.h()), static_cast<uint32_t>(t.w())},
                       t.data(),
                       t.size()});
    };
    auto add1 = [&](const std::string& name, std::vector<T>& v) {
      views.push_back({name, {static_cast<uint32_t>(v.size())}, v.data(),
                       static_cast<int64_t>(v.size())});
    };
    for (const PlanStep& s : param_plan_.steps) {
      if (s.kind == OpKind::conv || s.kind == OpKind::tconv) {
        add4(s.name + ".w", weight_of(s));
        std::vector<T>& b = bias_of(s);
        if (!b.empty()) add1(s.name + ".b", b);
      } else if (s.kind == OpKind::bn) {
        BatchNormState<T>& bn = bns_.at(s.name);
        add1(s.name + ".bn.g", bn.gamma);
        add1(s.name + ".bn.b", bn.beta);
        add1(s.name + ".bn.rm", bn.running_mean);
        add1(s.name + ".bn.rv", bn.running_var);
      }
    }
    return views;
  }

  bool has_cache() const { return has_cache_; }

 private:
  static void init_kaiming(Tensor<T>& w, int64_t c_in, int64_t k, uint64_t seed,
                           const std::string& name) {
    const double std_dev = std::sqrt(2.0 / static_cast<double>(c_in * k * k));
    Rng rng(hash_mix(seed, hash_str(name)));
    for (int64_t i = 0; i < w.size(); ++i) {
      w[i] = static_cast<T>(rng.normal(0.0, std_dev));
    }
  }

  Tensor<T>& weight_of(const PlanStep& s) {
    return s.kind == OpKind::conv ? convs_.at(s.name).weight : tconvs_.at(s.name).weight;
  }
  std::vector<T>& bias_of(const PlanStep& s) {
    return s.kind == OpKind::conv ? convs_.at(s.name).bias : tconvs_.at(s.name).bias;
  }

  void zero_grads() {
    grads_.clear();
    for (const PlanStep& s : param_plan_.steps) {
      if (s.kind == OpKind::conv || s.kind == OpKind::tconv) {
        grads_[s.name + ".w"].assign(static_cast<size_t>(weight_of(s).size()), T(0));
        if (!bias_of(s).empty()) {
          grads_[s.name + ".b"].assign(bias_of(s).size(), T(0));
        }
      } else if (s.kind == OpKind::bn) {
        const BatchNormState<T>& bn = bns_.at(s.name);
        grads_[s.name + ".bn.g"].assign(bn.gamma.size(), T(0));
        grads_[s.name + ".bn.b"].assign(bn.beta.size(), T(0));
      }
    }
  }

  void add_weight_grad(const std::string& key, const Tensor<T>& g) {
    std::vector<T>& dst = grads_.at(key);
    for (int64_t i = 0; i < g.size(); ++i) dst[static_cast<size_t>(i)] += g[i];
  }
  void add_vector_grad(const std::string& key, const std::vector<T>& g) {
    std::vector<T>& dst = grads_.at(key);
    for (size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }

  ModelConfig config_;
  LayerPlan param_plan_;
  mutable std::optional<LayerPlan> runtime_plan_;

  std::map<std::string, ConvParams<T>> convs_;
  std::map<std::string, ConvTransposeParams<T>> tconvs_;
  std::map<std::string, BatchNormState<T>> bns_;

  std::map<std::string, std::vector<T>> grads_;
  std::vector<Tensor<T>> cache_slots_;
  std::vector<BnCache<T>> cache_bn_;
  LayerPlan cache_plan_;
  bool has_cache_ = false;

  template <typename U>
  friend class ModelAccess;
};

// Test/checkpoint access to the parameter stores without widening the
// public surface.
template <typename T>
class ModelAccess {
 public:
  explicit ModelAccess(Model<T>& m) : m_(m) {}
  std::map<std::string, ConvParams<T>>& convs() { return m_.convs_; }
  std::map<std::string, ConvTransposeParams<T>>& tconvs() { return m_.tconvs_; }
  std::map<std::string, BatchNormState<T>>& bns() { return m_.bns_; }
  const LayerPlan& param_plan() { return m_.param_plan_; }

 private:
  Model<T>& m_;
};

}  // namespace hrseg
