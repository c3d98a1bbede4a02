#include "eegdiff/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace eegdiff::nn {

const Tensor& LayerParams::get(std::string_view name) const {
  for (const auto& w : weights) {
    if (w.name == name) return w.tensor;
  }
  throw std::invalid_argument("layer '" + identifier + "' has no parameter '" + std::string(name) + "'");
}

Tensor LayerParams::find(std::string_view name) const {
  for (const auto& w : weights) {
    if (w.name == name) return w.tensor;
  }
  return {};
}

void ParamSet::add(const LayerParams& layer) {
  for (const auto& w : layer.weights) params.push_back({layer.identifier + "." + w.name, w.tensor});
}

void ParamSet::append(const ParamSet& other) {
  params.insert(params.end(), other.params.begin(), other.params.end());
  buffers.insert(buffers.end(), other.buffers.begin(), other.buffers.end());
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

void zero_grad(std::span<const NamedTensor> params) {
  for (auto p : params) p.tensor.zero_grad();
}

Tensor init_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor conv1d(const Tensor& input, const LayerParams& params, std::size_t stride, std::size_t padding) {
  return conv1d(input, params.get("weight"), params.find("bias"), stride, padding);
}

Tensor conv_transpose1d(const Tensor& input, const LayerParams& params, std::size_t stride,
                        std::size_t padding) {
  return conv_transpose1d(input, params.get("weight"), params.find("bias"), stride, padding);
}

Conv1d::Conv1d(std::string id, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t stride, std::size_t padding, Rng& rng, bool bias)
    : stride_(stride), padding_(padding) {
  params_.identifier = std::move(id);
  const auto fan_in = in_channels * kernel;
  params_.weights.push_back({"weight", init_uniform({out_channels, in_channels, kernel}, fan_in, rng)});
  if (bias) params_.weights.push_back({"bias", init_uniform({out_channels}, fan_in, rng)});
}

Tensor Conv1d::forward(const Tensor& x) const { return conv1d(x, params_, stride_, padding_); }

Tensor Conv1d::forward_linear_part(const Tensor& x) const {
  return nn::conv1d(x, params_.get("weight"), Tensor{}, stride_, padding_);
}

ConvTranspose1d::ConvTranspose1d(std::string id, std::size_t in_channels, std::size_t out_channels,
                                 std::size_t kernel, std::size_t stride, std::size_t padding, Rng& rng)
    : stride_(stride), padding_(padding) {
  params_.identifier = std::move(id);
  const auto fan_in = in_channels * kernel;
  params_.weights.push_back({"weight", init_uniform({in_channels, out_channels, kernel}, fan_in, rng)});
  params_.weights.push_back({"bias", init_uniform({out_channels}, fan_in, rng)});
}

Tensor ConvTranspose1d::forward(const Tensor& x) const {
  return conv_transpose1d(x, params_, stride_, padding_);
}

Linear::Linear(std::string id, std::size_t in_features, std::size_t out_features, Rng& rng, bool bias) {
  params_.identifier = std::move(id);
  params_.weights.push_back({"weight", init_uniform({out_features, in_features}, in_features, rng)});
  if (bias) params_.weights.push_back({"bias", init_uniform({out_features}, in_features, rng)});
}

Tensor Linear::forward(const Tensor& x) const {
  return linear(x, params_.get("weight"), params_.find("bias"));
}

Tensor Linear::forward_linear_part(const Tensor& x) const { return linear(x, params_.get("weight"), Tensor{}); }

BatchNorm1d::BatchNorm1d(std::string id, std::size_t channels, double momentum, double eps)
    : running_mean_(Tensor::zeros({channels})),
      running_var_(Tensor::full({channels}, 1.0)),
      momentum_(momentum),
      eps_(eps) {
  params_.identifier = std::move(id);
  params_.weights.push_back({"weight", Tensor::full({channels}, 1.0, true)});
  params_.weights.push_back({"bias", Tensor::zeros({channels}, true)});
}

Tensor BatchNorm1d::forward(const Tensor& x, Mode mode) {
  const auto& gamma = params_.get("weight");
  const auto& beta = params_.get("bias");
  if (mode == Mode::eval) {
    return batch_norm_eval(x, gamma, beta, running_mean_.data(), running_var_.data(), eps_);
  }
  std::vector<double> mu, var;
  auto y = batch_norm_train(x, gamma, beta, eps_, &mu, &var);
  const double n = static_cast<double>(x.dim(0) * x.dim(2));
  auto rm = running_mean_.mutable_data();
  auto rv = running_var_.mutable_data();
  for (std::size_t c = 0; c < mu.size(); ++c) {
    rm[c] = (1.0 - momentum_) * rm[c] + momentum_ * mu[c];
    rv[c] = (1.0 - momentum_) * rv[c] + momentum_ * var[c] * n / (n - 1.0);
  }
  return y;
}

void BatchNorm1d::collect(ParamSet& set) const {
  set.add(params_);
  set.add_buffer(params_.identifier + ".running_mean", running_mean_);
  set.add_buffer(params_.identifier + ".running_var", running_var_);
}

Tensor sinusoidal_embedding(std::int64_t t, std::size_t dim, double max_period) {
  const int ts[1] = {static_cast<int>(t)};
  auto e = sinusoidal_embedding(std::span<const int>(ts), dim, max_period);
  return Tensor::from({dim}, std::vector<double>(e.data().begin(), e.data().end()));
}

Tensor sinusoidal_embedding(std::span<const int> timesteps, std::size_t dim, double max_period) {
  if (dim == 0 || dim % 2 != 0) {
    throw std::invalid_argument("sinusoidal_embedding: dim must be even and positive, got " + std::to_string(dim));
  }
  const std::size_t half = dim / 2;
  std::vector<double> v(timesteps.size() * dim);
  for (std::size_t b = 0; b < timesteps.size(); ++b) {
    if (timesteps[b] < 0) throw std::invalid_argument("sinusoidal_embedding: negative timestep");
    for (std::size_t i = 0; i < half; ++i) {
      const double arg = static_cast<double>(timesteps[b]) /
                         std::pow(max_period, 2.0 * static_cast<double>(i) / static_cast<double>(dim));
      v[b * dim + i] = std::sin(arg);
      v[b * dim + half + i] = std::cos(arg);
    }
  }
  return Tensor::from({timesteps.size(), dim}, std::move(v));
}

}  // namespace eegdiff::nn
