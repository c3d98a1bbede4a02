#pragma once

#include <span>
#include <vector>

#include "eegdiff/nn/tensor.hpp"

namespace eegdiff::nn {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double negative_slope);
// Constant tensor of local slopes (1 or negative_slope) of leaky_relu at a.
Tensor leaky_relu_slopes(const Tensor& a, double negative_slope);

Tensor reshape(const Tensor& a, Shape shape);

// Concatenate along axis 1 ([B, C_i, ...] -> [B, sum C_i, ...]).
Tensor concat_channels(std::span<const Tensor> parts);

// x [B, C_in, L] with weight [C_out, C_in, K] and optional bias [C_out].
// Cross-correlation; L_out = (L + 2 pad - K) / stride + 1.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding);

// x [B, C_in, L] with weight [C_in, C_out, K]; adjoint of conv1d.
// L_out = (L - 1) stride - 2 pad + K.
Tensor conv_transpose1d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        std::size_t stride, std::size_t padding);

// x [B, F_in], weight [F_out, F_in], optional bias [F_out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Training-mode batch normalisation over (batch, length) for x [B, C, L].
// Batch mean and biased variance are written to the out-params.
Tensor batch_norm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                        std::vector<double>* batch_mean, std::vector<double>* batch_var);
// Inference-mode normalisation with fixed statistics.
Tensor batch_norm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       std::span<const double> mean, std::span<const double> var, double eps);

// x [B, C, L] + e [B, C] broadcast over L.
Tensor add_channel_broadcast(const Tensor& x, const Tensor& e);

// Non-overlapping max pooling along L; trailing remainder dropped.
Tensor max_pool1d(const Tensor& x, std::size_t kernel);
// [B, C, L] -> [B, C]
Tensor global_avg_pool(const Tensor& x);

// Mean squared difference, scalar.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

// Row softmax of [B, K].
Tensor softmax(const Tensor& logits);
// Mean negative log-likelihood of integer labels under softmax(logits).
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace eegdiff::nn
