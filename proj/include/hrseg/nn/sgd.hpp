#pragma once

#include <span>
#include <string>

#include "hrseg/core/tensor.hpp"

namespace hrseg {

// g' = grad + weight_decay * param
// velocity = momentum * velocity + g'
// param = param - lr * velocity
template <typename T>
void sgd_momentum_step(std::span<T> param, std::span<const T> grad, std::span<T> velocity,
                       T lr, T momentum, T weight_decay) {
  if (param.size() != grad.size() || param.size() != velocity.size()) {
    throw ShapeError("sgd_momentum_step extent mismatch: param " +
                     std::to_string(param.size()) + ", grad " + std::to_string(grad.size()) +
                     ", velocity " + std::to_string(velocity.size()));
  }
  for (size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i] + weight_decay * param[i];
    velocity[i] = momentum * velocity[i] + g;
    param[i] -= lr * velocity[i];
  }
}

template <typename T>
void sgd_momentum_step(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& velocity,
                       T lr, T momentum, T weight_decay) {
  require_same_extents(param, grad, "sgd_momentum_step");
  require_same_extents(param, velocity, "sgd_momentum_step");
  sgd_momentum_step(std::span<T>(param.data(), static_cast<size_t>(param.size())),
                    std::span<const T>(grad.data(), static_cast<size_t>(grad.size())),
                    std::span<T>(velocity.data(), static_cast<size_t>(velocity.size())),
                    lr, momentum, weight_decay);
}

}  // namespace hrseg
