#include "eegdiff/diffusion/denoiser.hpp"

#include <stdexcept>
#include <string>

namespace eegdiff::diffusion {

using nn::Tensor;

ConditionalDenoiser::ConditionalDenoiser(const UNetConfig& config, std::uint64_t seed) : config_(config) {
  if (config_.widths.empty()) throw std::invalid_argument("unet: need at least one level");
  if (config_.kernel % 2 == 0) throw std::invalid_argument("unet: kernel must be odd");
  Rng rng(seed);
  const std::size_t k = config_.kernel, pad = k / 2;
  const std::size_t depth = config_.widths.size();
  std::size_t in = config_.n_condition + 1;
  for (std::size_t i = 0; i < depth; ++i) {
    const auto w = config_.widths[i];
    const auto id = "enc" + std::to_string(i);
    enc_.push_back({nn::Conv1d(id + ".conv", in, w, k, 1, pad, rng, false), nn::BatchNorm1d(id + ".bn", w)});
    down_.push_back({nn::Conv1d(id + ".down", w, w, k, 2, pad, rng, false), nn::BatchNorm1d(id + ".down_bn", w)});
    in = w;
  }
  const auto deepest = config_.widths.back();
  mid_ = {nn::Conv1d("mid.conv", deepest, deepest, k, 1, pad, rng, false), nn::BatchNorm1d("mid.bn", deepest)};
  time_proj_ = nn::Linear("time.proj", config_.time_embed_dim, config_.widths.front(), rng);

  up_.resize(depth);
  dec_.resize(depth);
  std::size_t ch = deepest;
  for (std::size_t j = depth; j-- > 0;) {
    const auto w = config_.widths[j];
    const auto out = j == 0 ? w : config_.widths[j - 1];
    const auto id = "dec" + std::to_string(j);
    up_[j] = {nn::ConvTranspose1d(id + ".up", ch, w, 4, 2, 1, rng), nn::BatchNorm1d(id + ".up_bn", w)};
    dec_[j] = {nn::Conv1d(id + ".conv", 2 * w, out, k, 1, pad, rng, false), nn::BatchNorm1d(id + ".bn", out)};
    ch = out;
  }
  head_ = nn::Conv1d("head", config_.widths.front(), 1, 1, 1, 0, rng);
}

Tensor ConditionalDenoiser::predict(const Tensor& x_t, const Tensor& condition, std::span<const int> t,
                                    nn::Mode mode) {
  if (x_t.rank() != 3 || x_t.dim(1) != 1) {
    throw std::invalid_argument("unet: x_t must be [B,1,L], got " + nn::shape_str(x_t.shape()));
  }
  if (condition.rank() != 3 || condition.dim(0) != x_t.dim(0) || condition.dim(1) != config_.n_condition ||
      condition.dim(2) != x_t.dim(2)) {
    throw std::invalid_argument("unet: condition " + nn::shape_str(condition.shape()) + " does not match x_t " +
                                nn::shape_str(x_t.shape()));
  }
  if (t.size() != x_t.dim(0)) throw std::invalid_argument("unet: need one timestep per batch item");
  if (x_t.dim(2) % length_multiple() != 0) {
    throw std::invalid_argument("unet: length " + std::to_string(x_t.dim(2)) + " not divisible by " +
                                std::to_string(length_multiple()));
  }

  Tensor h = nn::concat_channels(std::vector<Tensor>{x_t, condition});
  const Tensor emb = time_proj_.forward(nn::sinusoidal_embedding(t, config_.time_embed_dim));
  std::vector<Tensor> skips;
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    h = enc_[i].forward(h, mode);
    if (i == 0) h = nn::add_channel_broadcast(h, emb);
    skips.push_back(h);
    h = down_[i].forward(h, mode);
  }
  h = mid_.forward(h, mode);
  for (std::size_t j = enc_.size(); j-- > 0;) {
    h = nn::relu(up_[j].bn.forward(up_[j].up.forward(h), mode));
    h = nn::concat_channels(std::vector<Tensor>{h, skips[j]});
    h = dec_[j].forward(h, mode);
  }
  return head_.forward(h);
}

nn::ParamSet ConditionalDenoiser::param_set() const {
  nn::ParamSet set;
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    set.add(enc_[i].conv.params());
    enc_[i].bn.collect(set);
    set.add(down_[i].conv.params());
    down_[i].bn.collect(set);
  }
  set.add(mid_.conv.params());
  mid_.bn.collect(set);
  set.add(time_proj_.params());
  for (std::size_t j = enc_.size(); j-- > 0;) {
    set.add(up_[j].up.params());
    up_[j].bn.collect(set);
    set.add(dec_[j].conv.params());
    dec_[j].bn.collect(set);
  }
  set.add(head_.params());
  return set;
}

}  // namespace eegdiff::diffusion
