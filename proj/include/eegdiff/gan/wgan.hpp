#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/data/montage.hpp"
#include "eegdiff/data/recording.hpp"
#include "eegdiff/nn/layers.hpp"
#include "eegdiff/nn/optim.hpp"
#include "eegdiff/rng.hpp"

namespace eegdiff::gan {

struct GanConfig {
  std::size_t signal_length = 512;
  std::size_t n_condition = 2;
  std::size_t latent_channels = 1;  // noise channels appended to the condition
  std::size_t width = 64;
  std::size_t kernel = 5;
  double leaky_slope = 0.2;
  double gp_weight = 10.0;
  int n_critic = 5;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
};

// Scores candidate targets x [B, 1, L] under condition [B, n_condition, L].
class Critic {
 public:
  virtual ~Critic() = default;
  // One score per item, shape [B].
  virtual nn::Tensor score(const nn::Tensor& x, const nn::Tensor& condition) = 0;
  // Directional derivative of score along v with respect to x, [B]. Must be
  // differentiable in the critic parameters.
  virtual nn::Tensor score_jvp(const nn::Tensor& x, const nn::Tensor& condition, const nn::Tensor& v) = 0;
};

// Three stride-2 convolutions with leaky ReLU, then a linear head.
class ConvCritic final : public Critic {
 public:
  ConvCritic(const GanConfig& config, Rng rng);
  nn::Tensor score(const nn::Tensor& x, const nn::Tensor& condition) override;
  nn::Tensor score_jvp(const nn::Tensor& x, const nn::Tensor& condition, const nn::Tensor& v) override;
  nn::ParamSet param_set() const;

 private:
  nn::Tensor input(const nn::Tensor& x, const nn::Tensor& condition) const;
  GanConfig config_;
  std::array<nn::Conv1d, 3> convs_;
  nn::Linear head_;
};

// [condition; latent] -> target via three same-length convolutions.
class Generator {
 public:
  Generator(const GanConfig& config, Rng rng);
  // condition [B, n_condition, L], latent [B, latent_channels, L] -> [B, 1, L]
  nn::Tensor forward(const nn::Tensor& condition, const nn::Tensor& latent) const;
  nn::Tensor sample_latent(std::size_t batch, std::size_t length, std::span<Rng> rngs) const;
  nn::ParamSet param_set() const;
  const GanConfig& config() const { return config_; }

 private:
  GanConfig config_;
  std::array<nn::Conv1d, 3> convs_;
};

struct GanPair {
  GanPair(const GanConfig& config, std::uint64_t seed);
  GanConfig config;
  Generator generator;
  ConvCritic critic;
  nn::AdamState generator_opt, critic_opt;
};

struct GradientPenalty {
  double value = 0.0;
  // Scalar whose gradient in the critic parameters equals the penalty's.
  nn::Tensor objective;
};

// mean_b (|grad_x critic(x_hat_b)| - 1)^2 at x_hat = u real + (1 - u) fake,
// u ~ U(0, 1) per item. Throws NumericError on a non-finite gradient.
GradientPenalty gradient_penalty(Critic& critic, const nn::Tensor& real, const nn::Tensor& fake,
                                 const nn::Tensor& condition, Rng& rng);

// -mean(critic(G(condition, z))) with gradients flowing into the generator.
nn::Tensor generator_loss(const Generator& generator, Critic& critic, const nn::Tensor& condition,
                          const nn::Tensor& latent);

struct StepLosses {
  double critic_loss = 0.0;   // last critic iteration
  double generator_loss = 0.0;
  double wasserstein = 0.0;   // mean real score - mean fake score, last critic iteration
};

// n_critic critic updates on the batch with fresh latents, then one
// generator update. target [B, 1, L], condition [B, n_condition, L].
StepLosses wgan_gp_train_step(const nn::Tensor& target, const nn::Tensor& condition, GanPair& pair, Rng& rng);

struct GanTrainConfig {
  int epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

struct GanHistory {
  std::vector<StepLosses> steps;
};

GanHistory train_wgan(std::span<const data::Epoch> epochs, const std::string& target,
                      const std::array<std::string, 2>& inputs, GanPair& pair, const GanTrainConfig& config,
                      const std::function<void(int epoch, const StepLosses& last)>& on_epoch = {});

// One generator per item so results do not depend on batching. Returns [B, 1, L].
nn::Tensor wgan_generate(const nn::Tensor& condition, const Generator& generator, std::span<Rng> rngs);

using GeneratorMap = std::map<std::string, const Generator*>;

// Same contract as the diffusion reconstruction: every table target is
// replaced, conditioning reads measured channels, per (target, epoch) streams.
std::vector<data::Epoch> reconstruct_channels(std::span<const data::Epoch> epochs,
                                              const data::AdjacencyTable& table, const GeneratorMap& generators,
                                              std::uint64_t seed, std::size_t batch_size = 64);

}  // namespace eegdiff::gan
