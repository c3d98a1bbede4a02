#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/nn/layers.hpp"

namespace eegdiff::nn {

struct AdamState {
  std::int64_t step_count = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Per parameter, in the order of the parameter list; sized on first step.
  std::vector<std::string> names;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// One bias-corrected Adam update. Gradients are read, not cleared.
// Throws if a parameter never received a gradient.
void adam_step(std::span<const NamedTensor> params, AdamState& state);

// initial_lr * 0.5^floor(epoch / halve_every)
double lr_schedule(double initial_lr, int epoch, int halve_every);

}  // namespace eegdiff::nn
