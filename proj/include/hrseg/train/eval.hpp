#pragma once

#include <array>

#include "hrseg/data/augment.hpp"
#include "hrseg/data/dataset.hpp"
#include "hrseg/metrics/confusion.hpp"
#include "hrseg/model/model.hpp"

namespace hrseg {

// Inference over a dataset at native image size (normalization only),
// accumulating one global confusion matrix.
inline MetricsReport evaluate(Model<float>& model, const Dataset& data,
                              const std::array<float, 3>& mean,
                              const std::array<float, 3>& std_dev) {
  ConfusionMatrix cm;
  for (int64_t i = 0; i < data.size(); ++i) {
    const Sample s = data.load(i);
    const Tensor<float> input = normalize_image(s.image, mean, std_dev);
    auto out = model.forward(input, RunMode::infer);
    update(cm, argmax_classes(out.primary), s.mask);
  }
  return compute(cm);
}

}  // namespace hrseg
