#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "hrseg/core/rng.hpp"
#include "hrseg/data/augment.hpp"
#include "hrseg/data/dataset.hpp"
#include "hrseg/model/checkpoint.hpp"
#include "hrseg/model/model.hpp"
#include "hrseg/nn/sgd.hpp"
#include "hrseg/nn/softmax_ce.hpp"
#include "hrseg/train/ohem.hpp"
#include "hrseg/train/schedule.hpp"

namespace hrseg {

struct TrainConfig {
  int64_t max_iters = 100000;
  int64_t warmup_iters = 2000;
  double base_lr = 0.01;
  double lr_power = 0.9;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int64_t batch_size = 32;
  double alpha = 0.5;  // aux-loss weight
  OhemConfig ohem;     // min_kept is per 400x400 image, scaled by pixel ratio
  uint64_t seed = 0;
  int64_t checkpoint_interval = 0;  // 0: only the final checkpoint

  void validate() const {
    if (warmup_iters < 0 || (max_iters > 0 && warmup_iters >= max_iters)) {
      throw ConfigError("require 0 <= warmup_iters < max_iters");
    }
    if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (base_lr <= 0) throw ConfigError("base_lr must be > 0");
    if (lr_power <= 0) throw ConfigError("lr_power must be > 0");
    if (alpha < 0) throw ConfigError("alpha must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (ohem.prob_thresh <= 0 || ohem.prob_thresh > 1) {
      throw ConfigError("ohem prob_thresh must be in (0,1]");
    }
    if (ohem.min_kept < 1) throw ConfigError("ohem min_kept must be >= 1");
  }
};

// Eq-style composite loss: L_t = L_p + alpha * sum(L_i).
inline double total_loss(double primary, const std::vector<double>& aux, double alpha) {
  double s = 0;
  for (double a : aux) s += a;
  return primary + alpha * s;
}

struct IterationRecord {
  int64_t iter = 0;
  double lr = 0;
  double total = 0;
  double primary = 0;
  std::vector<double> aux;
};

struct TrainResult {
  std::vector<IterationRecord> history;
  std::string last_checkpoint;
};

using ProgressSink = std::function<void(const IterationRecord&)>;

namespace detail {

// Per-epoch Fisher-Yates shuffle; the order is a pure function of
// (seed, epoch), independent of any other rng consumption.
inline std::vector<int64_t> epoch_order(int64_t count, uint64_t seed, int64_t epoch) {
  std::vector<int64_t> order(static_cast<size_t>(count));
  std::iota(order.begin(), order.end(), int64_t{0});
  Rng rng(hash_mix(seed, hash_mix(0x65706f6368ULL, static_cast<uint64_t>(epoch))));
  for (int64_t i = count - 1; i > 0; --i) {
    const int64_t j = rng.uniform_int(0, i);
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
  }
  return order;
}

}  // namespace detail

class Trainer {
 public:
  Trainer(Model<float>& model, TrainConfig cfg, AugmentParams aug)
      : model_(model), cfg_(std::move(cfg)), aug_(std::move(aug)) {
    cfg_.validate();
    aug_.validate();
    for (auto& ref : model_.learnables()) {
      velocities_[ref.name].assign(static_cast<size_t>(ref.count), 0.0f);
    }
  }

  int64_t start_iter = 0;  // nonzero when resuming

  std::map<std::string, std::vector<float>>& velocities() { return velocities_; }

  // One optimization step on an assembled batch; returns the loss record.
  IterationRecord step(int64_t iter, const Tensor<float>& images, const Tensor<float>& labels) {
    const double lr = poly_lr(iter, cfg_.max_iters, cfg_.warmup_iters, cfg_.base_lr,
                              cfg_.lr_power);
    auto out = model_.forward(images, RunMode::train);

    const int64_t pixels = images.n() * images.h() * images.w();
    OhemConfig ohem = cfg_.ohem;
    ohem.min_kept = std::max<int64_t>(
        1, static_cast<int64_t>(std::llround(static_cast<double>(cfg_.ohem.min_kept) *
                                             static_cast<double>(pixels) /
                                             (400.0 * 400.0))));

    IterationRecord rec;
    rec.iter = iter;
    rec.lr = lr;

    auto reduce = [&](const Tensor<float>& logits) {
      auto ce = softmax_ce_per_pixel(logits, labels);
      OhemResult<float> red = cfg_.ohem.enabled ? ohem_reduce(ce.per_pixel_loss,
                                                              ce.true_class_prob, ohem)
                                                : mean_reduce(ce.per_pixel_loss);
      // Mean over the kept pixels: each selected pixel carries weight 1/kept.
      Tensor<float> weights = red.mask;
      const float inv = 1.0f / static_cast<float>(red.kept);
      for (int64_t i = 0; i < weights.size(); ++i) weights[i] *= inv;
      return std::pair<double, Tensor<float>>(red.loss,
                                              softmax_ce_backward(logits, labels, weights));
    };

    auto [primary_loss, grad_primary] = reduce(out.primary);
    rec.primary = primary_loss;
    std::vector<Tensor<float>> grad_aux;
    for (const Tensor<float>& aux_logits : out.aux) {
      auto [aux_loss, g] = reduce(aux_logits);
      rec.aux.push_back(aux_loss);
      for (int64_t i = 0; i < g.size(); ++i) g[i] *= static_cast<float>(cfg_.alpha);
      grad_aux.push_back(std::move(g));
    }
    rec.total = total_loss(rec.primary, rec.aux, cfg_.alpha);
    if (!std::isfinite(rec.total)) {
      throw NumericError("non-finite loss at iteration " + std::to_string(iter));
    }

    model_.backward(grad_primary, grad_aux);
    for (auto& ref : model_.learnables()) {
      std::vector<float>* grad = model_.gradient(ref.name);
      std::vector<float>& vel = velocities_.at(ref.name);
      sgd_momentum_step(std::span<float>(ref.data, static_cast<size_t>(ref.count)),
                        std::span<const float>(grad->data(), grad->size()),
                        std::span<float>(vel.data(), vel.size()), static_cast<float>(lr),
                        static_cast<float>(cfg_.momentum),
                        ref.weight_decay ? static_cast<float>(cfg_.weight_decay) : 0.0f);
    }
    return rec;
  }

  // Full loop over a dataset directory: shuffle per epoch, augment, step,
  // checkpoint. checkpoint_dir may be empty to skip snapshots.
  TrainResult run(const Dataset& dataset, const std::string& checkpoint_dir,
                  const ProgressSink& sink = {}) {
    TrainResult result;
    if (dataset.size() < 1) throw DataError("training dataset is empty");
    if (cfg_.batch_size > dataset.size()) {
      throw ConfigError("batch_size " + std::to_string(cfg_.batch_size) +
                        " exceeds dataset size " + std::to_string(dataset.size()));
    }

    std::vector<Sample> pool;
    pool.reserve(static_cast<size_t>(dataset.size()));
    for (int64_t i = 0; i < dataset.size(); ++i) pool.push_back(dataset.load(i));

    const int64_t batches_per_epoch = dataset.size() / cfg_.batch_size;  // partial dropped
    std::vector<int64_t> order;
    for (int64_t iter = start_iter; iter < cfg_.max_iters; ++iter) {
      const int64_t cursor = iter % batches_per_epoch;
      if (cursor == 0 || order.empty()) {
        order = detail::epoch_order(dataset.size(), cfg_.seed, iter / batches_per_epoch);
      }

      Tensor<float> images(cfg_.batch_size, 3, aug_.crop_h, aug_.crop_w);
      Tensor<float> labels(cfg_.batch_size, 1, aug_.crop_h, aug_.crop_w);
      for (int64_t b = 0; b < cfg_.batch_size; ++b) {
        const int64_t src = order[static_cast<size_t>(cursor * cfg_.batch_size + b)];
        Rng aug_rng(hash_mix(cfg_.seed, hash_mix(0x617567ULL,
                                                 static_cast<uint64_t>(iter * 8192 + b))));
        Sample s = augment(pool[static_cast<size_t>(src)], aug_, aug_rng);
        std::copy(s.image.data(), s.image.data() + s.image.size(),
                  images.data() + b * s.image.size());
        std::copy(s.mask.data(), s.mask.data() + s.mask.size(),
                  labels.data() + b * s.mask.size());
      }

      IterationRecord rec = step(iter, images, labels);
      if (sink) sink(rec);
      result.history.push_back(std::move(rec));

      const bool last = iter + 1 == cfg_.max_iters;
      if (!checkpoint_dir.empty() &&
          (last || (cfg_.checkpoint_interval > 0 && (iter + 1) % cfg_.checkpoint_interval == 0))) {
        char name[64];
        std::snprintf(name, sizeof(name), "/ckpt_%06lld.hrseg",
                      static_cast<long long>(iter + 1));
        result.last_checkpoint = checkpoint_dir + name;
        CheckpointExtras extras;
        extras.velocities = velocities_;
        extras.iter = iter + 1;
        extras.norm_mean = aug_.mean;
        extras.norm_std = aug_.std_dev;
        save_checkpoint(model_, result.last_checkpoint, &extras);
      }
    }
    return result;
  }

 private:
  Model<float>& model_;
  TrainConfig cfg_;
  AugmentParams aug_;
  std::map<std::string, std::vector<float>> velocities_;
};

}  // namespace hrseg
