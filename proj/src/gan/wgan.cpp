#include "eegdiff/gan/wgan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eegdiff/diffusion/ddpm.hpp"
#include "eegdiff/errors.hpp"

namespace eegdiff::gan {

using nn::Tensor;

namespace {

std::size_t strided_length(std::size_t L, std::size_t k, std::size_t pad) { return (L + 2 * pad - k) / 2 + 1; }

void check_pair_shapes(const Tensor& x, const Tensor& condition, std::size_t n_condition) {
  if (x.rank() != 3 || x.dim(1) != 1) throw std::invalid_argument("critic: x must be [B,1,L], got " + nn::shape_str(x.shape()));
  if (condition.rank() != 3 || condition.dim(0) != x.dim(0) || condition.dim(1) != n_condition ||
      condition.dim(2) != x.dim(2)) {
    throw std::invalid_argument("critic: condition " + nn::shape_str(condition.shape()) + " does not match " +
                                nn::shape_str(x.shape()));
  }
}

nn::AdamState make_adam(const GanConfig& c) {
  nn::AdamState s;
  s.lr = c.lr;
  s.beta1 = c.beta1;
  s.beta2 = c.beta2;
  return s;
}

Tensor detached(const Tensor& t) { return Tensor::from(t.shape(), {t.data().begin(), t.data().end()}); }

}  // namespace

ConvCritic::ConvCritic(const GanConfig& config, Rng rng) : config_(config) {
  const std::size_t k = config.kernel, pad = k / 2, w = config.width;
  if (k % 2 == 0) throw std::invalid_argument("critic: kernel must be odd");
  std::size_t in = config.n_condition + 1, L = config.signal_length;
  for (std::size_t i = 0; i < 3; ++i) {
    convs_[i] = nn::Conv1d("critic.conv" + std::to_string(i), in, w, k, 2, pad, rng);
    in = w;
    L = strided_length(L, k, pad);
  }
  head_ = nn::Linear("critic.head", w * L, 1, rng);
}

Tensor ConvCritic::input(const Tensor& x, const Tensor& condition) const {
  check_pair_shapes(x, condition, config_.n_condition);
  if (x.dim(2) != config_.signal_length) {
    throw std::invalid_argument("critic: expected length " + std::to_string(config_.signal_length) + ", got " +
                                std::to_string(x.dim(2)));
  }
  return nn::concat_channels(std::vector<Tensor>{condition, x});
}

Tensor ConvCritic::score(const Tensor& x, const Tensor& condition) {
  Tensor h = input(x, condition);
  for (const auto& conv : convs_) h = nn::leaky_relu(conv.forward(h), config_.leaky_slope);
  const std::size_t B = h.dim(0);
  return nn::reshape(head_.forward(nn::reshape(h, {B, h.numel() / B})), {B});
}

Tensor ConvCritic::score_jvp(const Tensor& x, const Tensor& condition, const Tensor& v) {
  if (v.shape() != x.shape()) throw std::invalid_argument("critic: tangent shape must match x");
  Tensor h = input(x, condition);
  Tensor dh = nn::concat_channels(std::vector<Tensor>{Tensor::zeros(condition.shape()), v});
  for (const auto& conv : convs_) {
    const Tensor a = conv.forward(h);
    dh = nn::mul(conv.forward_linear_part(dh), nn::leaky_relu_slopes(a, config_.leaky_slope));
    h = nn::leaky_relu(a, config_.leaky_slope);
  }
  const std::size_t B = dh.dim(0);
  return nn::reshape(head_.forward_linear_part(nn::reshape(dh, {B, dh.numel() / B})), {B});
}

nn::ParamSet ConvCritic::param_set() const {
  nn::ParamSet set;
  for (const auto& c : convs_) set.add(c.params());
  set.add(head_.params());
  return set;
}

Generator::Generator(const GanConfig& config, Rng rng) : config_(config) {
  const std::size_t k = config.kernel, pad = k / 2, w = config.width;
  if (k % 2 == 0) throw std::invalid_argument("generator: kernel must be odd");
  convs_[0] = nn::Conv1d("gen.conv0", config.n_condition + config.latent_channels, w, k, 1, pad, rng);
  convs_[1] = nn::Conv1d("gen.conv1", w, w, k, 1, pad, rng);
  convs_[2] = nn::Conv1d("gen.conv2", w, 1, k, 1, pad, rng);
}

Tensor Generator::forward(const Tensor& condition, const Tensor& latent) const {
  if (condition.rank() != 3 || condition.dim(1) != config_.n_condition) {
    throw std::invalid_argument("generator: condition must be [B," + std::to_string(config_.n_condition) +
                                ",L], got " + nn::shape_str(condition.shape()));
  }
  if (latent.rank() != 3 || latent.dim(0) != condition.dim(0) || latent.dim(1) != config_.latent_channels ||
      latent.dim(2) != condition.dim(2)) {
    throw std::invalid_argument("generator: latent " + nn::shape_str(latent.shape()) + " does not match condition");
  }
  Tensor h = nn::concat_channels(std::vector<Tensor>{condition, latent});
  h = nn::leaky_relu(convs_[0].forward(h), config_.leaky_slope);
  h = nn::leaky_relu(convs_[1].forward(h), config_.leaky_slope);
  return convs_[2].forward(h);
}

Tensor Generator::sample_latent(std::size_t batch, std::size_t length, std::span<Rng> rngs) const {
  if (rngs.size() != batch) throw std::invalid_argument("generator: need one generator per batch item");
  const std::size_t per = config_.latent_channels * length;
  std::vector<double> z(batch * per);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < per; ++i) z[b * per + i] = rngs[b].normal();
  return Tensor::from({batch, config_.latent_channels, length}, std::move(z));
}

nn::ParamSet Generator::param_set() const {
  nn::ParamSet set;
  for (const auto& c : convs_) set.add(c.params());
  return set;
}

GanPair::GanPair(const GanConfig& c, std::uint64_t seed)
    : config(c),
      generator(c, Rng::derive(seed, 1)),
      critic(c, Rng::derive(seed, 2)),
      generator_opt(make_adam(c)),
      critic_opt(make_adam(c)) {}

GradientPenalty gradient_penalty(Critic& critic, const Tensor& real, const Tensor& fake, const Tensor& condition,
                                 Rng& rng) {
  if (real.shape() != fake.shape()) {
    throw std::invalid_argument("gradient_penalty: real " + nn::shape_str(real.shape()) + " vs fake " +
                                nn::shape_str(fake.shape()));
  }
  if (real.rank() < 1 || real.dim(0) == 0) throw std::invalid_argument("gradient_penalty: empty batch");
  const std::size_t B = real.dim(0), per = real.numel() / B;
  std::vector<double> xh(real.numel());
  for (std::size_t b = 0; b < B; ++b) {
    const double u = rng.uniform();
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) xh[i] = u * real.data()[i] + (1.0 - u) * fake.data()[i];
  }
  const Tensor x_hat = Tensor::from(real.shape(), xh, true);
  const auto grads = nn::gradients_of(nn::sum(critic.score(x_hat, condition)), std::vector<Tensor>{x_hat});
  const auto& g = grads[0];

  GradientPenalty gp;
  std::vector<double> coef(B);
  for (std::size_t b = 0; b < B; ++b) {
    double sq = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) sq += g[i] * g[i];
    if (!std::isfinite(sq)) throw NumericError("gradient_penalty: non-finite critic gradient");
    const double norm = std::sqrt(sq);
    gp.value += (norm - 1.0) * (norm - 1.0);
    // d/dtheta (|g| - 1)^2 = 2 (|g| - 1) / |g| * g . d(g)/dtheta
    coef[b] = norm > 0.0 ? 2.0 * (norm - 1.0) / norm / static_cast<double>(B) : 0.0;
  }
  gp.value /= static_cast<double>(B);
  const Tensor jvp = critic.score_jvp(Tensor::from(real.shape(), std::move(xh)), condition,
                                      Tensor::from(real.shape(), g));
  gp.objective = nn::sum(nn::mul(jvp, Tensor::from({B}, std::move(coef))));
  return gp;
}

Tensor generator_loss(const Generator& generator, Critic& critic, const Tensor& condition, const Tensor& latent) {
  return nn::scale(nn::mean(critic.score(generator.forward(condition, latent), condition)), -1.0);
}

StepLosses wgan_gp_train_step(const Tensor& target, const Tensor& condition, GanPair& pair, Rng& rng) {
  if (pair.config.n_critic < 1) throw std::invalid_argument("wgan: n_critic must be >= 1");
  const std::size_t B = target.dim(0), L = target.dim(2);
  const auto critic_params = pair.critic.param_set().params;
  const auto gen_params = pair.generator.param_set().params;
  auto latent = [&] {
    return Tensor::from({B, pair.config.latent_channels, L}, rng.normal_vector(B * pair.config.latent_channels * L));
  };

  StepLosses out;
  for (int i = 0; i < pair.config.n_critic; ++i) {
    Tensor fake;
    {
      nn::NoGradGuard no_grad;
      fake = detached(pair.generator.forward(condition, latent()));
    }
    const Tensor real_score = nn::mean(pair.critic.score(target, condition));
    const Tensor fake_score = nn::mean(pair.critic.score(fake, condition));
    const auto gp = gradient_penalty(pair.critic, target, fake, condition, rng);
    const Tensor loss = nn::add(nn::sub(fake_score, real_score), nn::scale(gp.objective, pair.config.gp_weight));
    nn::zero_grad(critic_params);
    nn::backward(loss);
    nn::adam_step(critic_params, pair.critic_opt);
    out.wasserstein = real_score.item() - fake_score.item();
    out.critic_loss = -out.wasserstein + pair.config.gp_weight * gp.value;
    if (!std::isfinite(out.critic_loss)) throw NumericError("wgan: non-finite critic loss");
  }

  const Tensor gl = generator_loss(pair.generator, pair.critic, condition, latent());
  nn::zero_grad(gen_params);
  nn::backward(gl);
  nn::adam_step(gen_params, pair.generator_opt);
  out.generator_loss = gl.item();
  if (!std::isfinite(out.generator_loss)) throw NumericError("wgan: non-finite generator loss");
  return out;
}

GanHistory train_wgan(std::span<const data::Epoch> epochs, const std::string& target,
                      const std::array<std::string, 2>& inputs, GanPair& pair, const GanTrainConfig& config,
                      const std::function<void(int, const StepLosses&)>& on_epoch) {
  if (epochs.empty()) throw std::invalid_argument("train_wgan: no training epochs");
  if (config.batch_size == 0) throw std::invalid_argument("train_wgan: batch_size must be >= 1");
  const auto all = diffusion::gather_channels(epochs, target, inputs);
  const std::size_t N = epochs.size(), L = all.target.dim(2), C = all.condition.dim(1);
  GanHistory hist;
  Rng step_rng = Rng::derive(config.seed, 0x6A4);
  std::vector<std::size_t> order(N);
  for (int ep = 0; ep < config.epochs; ++ep) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = Rng::derive(config.seed, static_cast<std::uint64_t>(ep));
    shuffle_rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < N; start += config.batch_size) {
      const std::size_t B = std::min(config.batch_size, N - start);
      std::vector<double> tv(B * L), cv(B * C * L);
      for (std::size_t b = 0; b < B; ++b) {
        const auto src = order[start + b];
        std::copy_n(all.target.data().begin() + static_cast<std::ptrdiff_t>(src * L), L,
                    tv.begin() + static_cast<std::ptrdiff_t>(b * L));
        std::copy_n(all.condition.data().begin() + static_cast<std::ptrdiff_t>(src * C * L), C * L,
                    cv.begin() + static_cast<std::ptrdiff_t>(b * C * L));
      }
      hist.steps.push_back(wgan_gp_train_step(Tensor::from({B, 1, L}, std::move(tv)),
                                              Tensor::from({B, C, L}, std::move(cv)), pair, step_rng));
    }
    if (on_epoch) on_epoch(ep, hist.steps.back());
  }
  return hist;
}

Tensor wgan_generate(const Tensor& condition, const Generator& generator, std::span<Rng> rngs) {
  if (condition.rank() != 3) throw std::invalid_argument("wgan_generate: condition must be [B,C,L]");
  nn::NoGradGuard no_grad;
  const std::size_t B = condition.dim(0), L = condition.dim(2);
  const Tensor out = generator.forward(condition, generator.sample_latent(B, L, rngs));
  for (double v : out.data()) {
    if (!std::isfinite(v)) throw NumericError("wgan_generate: non-finite generator output");
  }
  return detached(out);
}

std::vector<data::Epoch> reconstruct_channels(std::span<const data::Epoch> epochs,
                                              const data::AdjacencyTable& table, const GeneratorMap& generators,
                                              std::uint64_t seed, std::size_t batch_size) {
  for (const auto& entry : table.entries()) {
    auto it = generators.find(entry.target);
    if (it == generators.end() || !it->second) {
      throw std::invalid_argument("reconstruct_channels: no generator for target '" + entry.target + "'");
    }
  }
  if (batch_size == 0) throw std::invalid_argument("reconstruct_channels: batch_size must be >= 1");
  std::vector<data::Epoch> out(epochs.begin(), epochs.end());
  if (epochs.empty()) return out;
  const std::size_t L = epochs[0].samples.cols();
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& entry = table.entries()[k];
    const Generator& gen = *generators.at(entry.target);
    for (std::size_t start = 0; start < epochs.size(); start += batch_size) {
      const std::size_t B = std::min(batch_size, epochs.size() - start);
      const Tensor cond = diffusion::gather_condition(epochs.subspan(start, B), entry.inputs);
      std::vector<Rng> rngs;
      for (std::size_t b = 0; b < B; ++b) {
        rngs.push_back(Rng::derive(seed, (static_cast<std::uint64_t>(k) << 32) | (start + b)));
      }
      const Tensor x = wgan_generate(cond, gen, rngs);
      for (std::size_t b = 0; b < B; ++b) {
        auto& e = out[start + b];
        auto row = e.samples.row(e.channel_index(entry.target));
        std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(b * L), L, row.begin());
      }
    }
  }
  return out;
}

}  // namespace eegdiff::gan
