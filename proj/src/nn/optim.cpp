#include "eegdiff/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace eegdiff::nn {

void adam_step(std::span<const NamedTensor> params, AdamState& state) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.names.push_back(p.name);
      state.first_moment.emplace_back(p.tensor.numel(), 0.0);
      state.second_moment.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].tensor.has_grad()) {
      throw std::invalid_argument("adam_step: parameter '" + params[i].name + "' has no gradient");
    }
    if (state.first_moment[i].size() != params[i].tensor.numel()) {
      throw std::invalid_argument("adam_step: moment shape mismatch for '" + params[i].name + "'");
    }
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i].tensor;
    auto w = p.mutable_data();
    const auto g = p.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double lr_schedule(double initial_lr, int epoch, int halve_every) {
  if (halve_every < 1) throw std::invalid_argument("lr_schedule: halve_every must be >= 1");
  if (epoch < 0) throw std::invalid_argument("lr_schedule: epoch must be >= 0");
  return initial_lr * std::pow(0.5, epoch / halve_every);
}

}  // namespace eegdiff::nn
