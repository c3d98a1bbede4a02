#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "eegdiff/nn/ops.hpp"
#include "eegdiff/nn/tensor.hpp"
#include "eegdiff/rng.hpp"

namespace eegdiff::nn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// A layer's trainable tensors under short names ("weight", "bias", ...).
// Gradients live on the tensors themselves, so shapes always mirror.
struct LayerParams {
  std::string identifier;
  std::vector<NamedTensor> weights;

  const Tensor& get(std::string_view name) const;
  // Undefined tensor if absent.
  Tensor find(std::string_view name) const;
};

// Everything a model persists: trainable parameters and running buffers,
// under fully qualified names ("enc1.conv.weight").
struct ParamSet {
  std::vector<NamedTensor> params;
  std::vector<NamedTensor> buffers;

  void add(const LayerParams& layer);
  void add_buffer(std::string name, Tensor t) { buffers.push_back({std::move(name), std::move(t)}); }
  void append(const ParamSet& other);
  std::size_t parameter_count() const;
};

void zero_grad(std::span<const NamedTensor> params);

enum class Mode { train, eval };

// Uniform in +-sqrt(1 / fan_in).
Tensor init_uniform(Shape shape, std::size_t fan_in, Rng& rng);

Tensor conv1d(const Tensor& input, const LayerParams& params, std::size_t stride, std::size_t padding);
Tensor conv_transpose1d(const Tensor& input, const LayerParams& params, std::size_t stride,
                        std::size_t padding);

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(std::string id, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride, std::size_t padding, Rng& rng, bool bias = true);
  Tensor forward(const Tensor& x) const;
  // Same weights, no bias: the map's derivative applied to a tangent.
  Tensor forward_linear_part(const Tensor& x) const;
  const LayerParams& params() const { return params_; }
  LayerParams& params() { return params_; }

 private:
  LayerParams params_;
  std::size_t stride_ = 1, padding_ = 0;
};

class ConvTranspose1d {
 public:
  ConvTranspose1d() = default;
  ConvTranspose1d(std::string id, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, std::size_t padding, Rng& rng);
  Tensor forward(const Tensor& x) const;
  const LayerParams& params() const { return params_; }

 private:
  LayerParams params_;
  std::size_t stride_ = 1, padding_ = 0;
};

class Linear {
 public:
  Linear() = default;
  Linear(std::string id, std::size_t in_features, std::size_t out_features, Rng& rng, bool bias = true);
  Tensor forward(const Tensor& x) const;
  Tensor forward_linear_part(const Tensor& x) const;
  const LayerParams& params() const { return params_; }
  LayerParams& params() { return params_; }

 private:
  LayerParams params_;
};

// Running statistics start at mean 0, variance 1, so eval mode before any
// training step normalises with those defaults.
class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  BatchNorm1d(std::string id, std::size_t channels, double momentum = 0.1, double eps = 1e-5);

  // Train mode uses batch statistics and updates the running ones
  // (unbiased variance, exponential momentum).
  Tensor forward(const Tensor& x, Mode mode);
  const LayerParams& params() const { return params_; }
  void collect(ParamSet& set) const;
  const Tensor& running_mean() const { return running_mean_; }
  const Tensor& running_var() const { return running_var_; }

 private:
  LayerParams params_;
  Tensor running_mean_, running_var_;
  double momentum_ = 0.1, eps_ = 1e-5;
};

// emb[i] = sin(t / max_period^(2i/dim)), emb[dim/2 + i] = cos(same).
Tensor sinusoidal_embedding(std::int64_t t, std::size_t dim, double max_period = 10000.0);
// Rows for each timestep: [B, dim].
Tensor sinusoidal_embedding(std::span<const int> timesteps, std::size_t dim, double max_period = 10000.0);

}  // namespace eegdiff::nn
