#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/data/montage.hpp"
#include "eegdiff/data/recording.hpp"
#include "eegdiff/diffusion/denoiser.hpp"
#include "eegdiff/diffusion/schedule.hpp"
#include "eegdiff/nn/optim.hpp"
#include "eegdiff/rng.hpp"

namespace eegdiff::diffusion {

enum class SamplerVariant {
  stochastic,           // adds sigma_t z with sigma_t^2 = beta_t for t > 0
  paper_deterministic,  // mean update only
};

SamplerVariant parse_variant(const std::string& name);
std::string variant_name(SamplerVariant v);

struct ReconstructionJob {
  std::string target;
  std::array<std::string, 2> inputs;
  NoiseSchedule schedule;
  NoisePredictor* model = nullptr;
};

// Target rows [B, 1, L] and condition rows [B, 2, L] of an epoch batch.
struct ChannelBatch {
  nn::Tensor target;
  nn::Tensor condition;
};

// Throws DataError naming the first channel missing from an epoch.
ChannelBatch gather_channels(std::span<const data::Epoch> epochs, const std::string& target,
                             const std::array<std::string, 2>& inputs);
// Condition rows only.
nn::Tensor gather_condition(std::span<const data::Epoch> epochs, const std::array<std::string, 2>& inputs);

// One noise-prediction loss evaluation with gradients populated on the
// model parameters. The caller owns zeroing gradients and the optimizer.
double ddpm_train_step(const ChannelBatch& batch, const ReconstructionJob& job, Rng& rng);
double ddpm_train_step(std::span<const data::Epoch> batch, const ReconstructionJob& job, Rng& rng);

struct DdpmTrainConfig {
  int epochs = 200;
  std::size_t batch_size = 32;
  double lr = 1e-4;
  int halve_every = 20;
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> step_loss;
  std::vector<double> epoch_loss;  // mean over the epoch's steps
};

// Shuffled mini-batch Adam training with the halving schedule.
TrainHistory train_ddpm(std::span<const data::Epoch> epochs, const ReconstructionJob& job,
                        ConditionalDenoiser& model, nn::AdamState& optimizer, const DdpmTrainConfig& config,
                        const std::function<void(int epoch, double loss)>& on_epoch = {});

// Reverse process for a batch of conditions [B, 2, L], one generator per
// item so results do not depend on batching. Returns [B, 1, L]. Throws
// NumericError naming the timestep if a value becomes non-finite.
nn::Tensor ddpm_sample(const nn::Tensor& condition, NoisePredictor& model, const NoiseSchedule& schedule,
                       std::span<Rng> rngs, SamplerVariant variant);
// Single condition [2, L] -> [1, L].
nn::Tensor ddpm_sample(const nn::Tensor& condition, const ReconstructionJob& job, Rng& rng,
                       SamplerVariant variant);

using ModelMap = std::map<std::string, NoisePredictor*>;

// Replace every table target with its sampled reconstruction. Conditioning
// always reads the measured input channels. Each (target, epoch) pair gets
// its own generator derived from the seed.
std::vector<data::Epoch> reconstruct_channels(std::span<const data::Epoch> epochs,
                                              const data::AdjacencyTable& table, const ModelMap& models,
                                              const NoiseSchedule& schedule, std::uint64_t seed,
                                              SamplerVariant variant, std::size_t batch_size = 32);

}  // namespace eegdiff::diffusion
