#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eegdiff/nn/layers.hpp"

namespace eegdiff::diffusion {

// Anything that predicts the noise in x_t given the conditioning channels.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  // x_t [B, 1, L], condition [B, n_condition, L], one timestep per item.
  // Returns the predicted noise [B, 1, L].
  virtual nn::Tensor predict(const nn::Tensor& x_t, const nn::Tensor& condition, std::span<const int> t,
                             nn::Mode mode) = 0;
};

struct UNetConfig {
  std::vector<std::size_t> widths{32, 64, 128};
  std::size_t time_embed_dim = 64;
  std::size_t n_condition = 2;
  std::size_t kernel = 3;
};

// 1D U-Net over [noisy target; conditions]. Each encoder level is a
// conv-BN-ReLU block (kept as the skip) followed by a stride-2 conv-BN-ReLU;
// the decoder mirrors it with stride-2 transposed convolutions and skip
// concatenation. The projected sinusoidal time embedding is added to the
// output of the first encoder block.
class ConditionalDenoiser final : public NoisePredictor {
 public:
  ConditionalDenoiser(const UNetConfig& config, std::uint64_t seed);

  nn::Tensor predict(const nn::Tensor& x_t, const nn::Tensor& condition, std::span<const int> t,
                     nn::Mode mode) override;

  const UNetConfig& config() const { return config_; }
  // Trainable tensors plus batch-norm running statistics.
  nn::ParamSet param_set() const;
  // Input length must be divisible by this.
  std::size_t length_multiple() const { return std::size_t{1} << config_.widths.size(); }

 private:
  struct ConvBlock {
    nn::Conv1d conv;
    nn::BatchNorm1d bn;
    nn::Tensor forward(const nn::Tensor& x, nn::Mode mode) { return nn::relu(bn.forward(conv.forward(x), mode)); }
  };
  struct UpBlock {
    nn::ConvTranspose1d up;
    nn::BatchNorm1d bn;
  };

  UNetConfig config_;
  std::vector<ConvBlock> enc_, down_, dec_;
  std::vector<UpBlock> up_;
  ConvBlock mid_;
  nn::Linear time_proj_;
  nn::Conv1d head_;
};

}  // namespace eegdiff::diffusion
