#pragma once

#include <vector>

#include "eegdiff/nn/tensor.hpp"

namespace eegdiff::diffusion {

// Timesteps are 0-based: index t here is step t+1 of the usual 1..T notation.
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
};

// Linear betas from beta_start to beta_end inclusive.
NoiseSchedule build_schedule(int T, double beta_start, double beta_end);

// x_t = sqrt(alpha_t) x_{t-1} + sqrt(1 - alpha_t) noise
nn::Tensor forward_diffuse_step(const nn::Tensor& x_prev, int t, const NoiseSchedule& schedule,
                                const nn::Tensor& noise);

// x_t = sqrt(alpha_bar_t) x_0 + sqrt(1 - alpha_bar_t) noise
nn::Tensor forward_diffuse_closed(const nn::Tensor& x0, int t, const NoiseSchedule& schedule,
                                  const nn::Tensor& noise);

}  // namespace eegdiff::diffusion
