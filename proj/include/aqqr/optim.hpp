#pragma once

#include <vector>

#include "aqqr/tensor.hpp"

namespace aqqr {

/// Adam with bias correction. Moment buffers are keyed by parameter order,
/// so the same parameter list must be passed to every step.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One Adam update over params (grads must be populated); zeroes grads after.
void adam_step(std::vector<Tensor>& params, AdamState& state);

/// Multiplicative step decay: rate(e) = base_rate * gamma^floor(e / step_size).
struct StepSchedule {
  int step_size = 3;
  double gamma = 0.7;
  double base_rate = 1e-3;

  double rate(int epoch) const;
};

}  // namespace aqqr
