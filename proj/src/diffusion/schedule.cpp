#include "eegdiff/diffusion/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace eegdiff::diffusion {

namespace {

void check_args(const nn::Tensor& x, int t, const NoiseSchedule& s, const nn::Tensor& noise, const char* op) {
  if (t < 0 || t >= s.T) {
    throw std::invalid_argument(std::string(op) + ": timestep " + std::to_string(t) + " outside [0, " +
                                std::to_string(s.T) + ")");
  }
  if (x.shape() != noise.shape()) {
    throw std::invalid_argument(std::string(op) + ": noise shape " + nn::shape_str(noise.shape()) +
                                " != input shape " + nn::shape_str(x.shape()));
  }
}

nn::Tensor combine(const nn::Tensor& x, double a, const nn::Tensor& noise, double b) {
  std::vector<double> out(x.numel());
  const auto xv = x.data();
  const auto nv = noise.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * xv[i] + b * nv[i];
  return nn::Tensor::from(x.shape(), std::move(out));
}

}  // namespace

NoiseSchedule build_schedule(int T, double beta_start, double beta_end) {
  if (T < 2) throw std::invalid_argument("build_schedule: T must be >= 2, got " + std::to_string(T));
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw std::invalid_argument("build_schedule: need 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.T = T;
  s.beta.resize(static_cast<std::size_t>(T));
  s.alpha.resize(s.beta.size());
  s.alpha_bar.resize(s.beta.size());
  const double step = (beta_end - beta_start) / (T - 1);
  double prod = 1.0;
  for (int t = 0; t < T; ++t) {
    const auto i = static_cast<std::size_t>(t);
    s.beta[i] = t == T - 1 ? beta_end : beta_start + step * t;
    s.alpha[i] = 1.0 - s.beta[i];
    prod *= s.alpha[i];
    s.alpha_bar[i] = prod;
  }
  return s;
}

nn::Tensor forward_diffuse_step(const nn::Tensor& x_prev, int t, const NoiseSchedule& schedule,
                                const nn::Tensor& noise) {
  check_args(x_prev, t, schedule, noise, "forward_diffuse_step");
  const auto i = static_cast<std::size_t>(t);
  return combine(x_prev, std::sqrt(schedule.alpha[i]), noise, std::sqrt(1.0 - schedule.alpha[i]));
}

nn::Tensor forward_diffuse_closed(const nn::Tensor& x0, int t, const NoiseSchedule& schedule,
                                  const nn::Tensor& noise) {
  check_args(x0, t, schedule, noise, "forward_diffuse_closed");
  const auto i = static_cast<std::size_t>(t);
  return combine(x0, std::sqrt(schedule.alpha_bar[i]), noise, std::sqrt(1.0 - schedule.alpha_bar[i]));
}

}  // namespace eegdiff::diffusion
