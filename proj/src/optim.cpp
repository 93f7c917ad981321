#include "aqqr/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace aqqr {

void adam_step(std::vector<Tensor>& params, AdamState& state) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].size(), 0.0);
      state.v[i].assign(params[i].size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter count changed between steps");
  }
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    if (!p.has_grad()) {
      throw std::runtime_error("adam_step: missing grad for parameter " + std::to_string(i) +
                               " " + shape_str(p.shape()));
    }
    if (state.m[i].size() != p.size()) {
      throw std::invalid_argument("adam_step: moment size mismatch for parameter " +
                                  std::to_string(i));
    }
    auto& vals = p.values();
    auto& g = p.grad();
    for (std::size_t k = 0; k < vals.size(); ++k) {
      state.m[i][k] = state.beta1 * state.m[i][k] + (1.0 - state.beta1) * g[k];
      state.v[i][k] = state.beta2 * state.v[i][k] + (1.0 - state.beta2) * g[k] * g[k];
      const double mhat = state.m[i][k] / bc1;
      const double vhat = state.v[i][k] / bc2;
      vals[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
    p.zero_grad();
  }
}

double StepSchedule::rate(int epoch) const {
  if (epoch < 0) throw std::invalid_argument("StepSchedule: negative epoch");
  const int k = epoch / step_size;
  return base_rate * std::pow(gamma, static_cast<double>(k));
}

}  // namespace aqqr
