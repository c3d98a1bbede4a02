#include "eegdiff/diffusion/ddpm.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eegdiff/errors.hpp"

namespace eegdiff::diffusion {

using nn::Tensor;

SamplerVariant parse_variant(const std::string& name) {
  if (name == "stochastic") return SamplerVariant::stochastic;
  if (name == "paper_deterministic") return SamplerVariant::paper_deterministic;
  throw ConfigError("unknown sampler variant '" + name + "' (stochastic | paper_deterministic)");
}

std::string variant_name(SamplerVariant v) {
  return v == SamplerVariant::stochastic ? "stochastic" : "paper_deterministic";
}

namespace {

void copy_rows(std::span<const data::Epoch> epochs, const std::vector<std::string>& channels,
               std::vector<double>& out) {
  if (epochs.empty()) throw std::invalid_argument("gather_channels: empty batch");
  const std::size_t L = epochs[0].samples.cols();
  out.assign(epochs.size() * channels.size() * L, 0.0);
  double* dst = out.data();
  for (const auto& e : epochs) {
    if (e.samples.cols() != L) throw std::invalid_argument("gather_channels: epochs differ in length");
    for (const auto& ch : channels) {
      const auto row = e.samples.row(e.channel_index(ch));
      std::copy(row.begin(), row.end(), dst);
      dst += L;
    }
  }
}

}  // namespace

ChannelBatch gather_channels(std::span<const data::Epoch> epochs, const std::string& target,
                             const std::array<std::string, 2>& inputs) {
  std::vector<double> t, c;
  copy_rows(epochs, {target}, t);
  copy_rows(epochs, {inputs[0], inputs[1]}, c);
  const std::size_t B = epochs.size(), L = epochs[0].samples.cols();
  return {Tensor::from({B, 1, L}, std::move(t)), Tensor::from({B, 2, L}, std::move(c))};
}

Tensor gather_condition(std::span<const data::Epoch> epochs, const std::array<std::string, 2>& inputs) {
  std::vector<double> c;
  copy_rows(epochs, {inputs[0], inputs[1]}, c);
  return Tensor::from({epochs.size(), 2, epochs[0].samples.cols()}, std::move(c));
}

double ddpm_train_step(const ChannelBatch& batch, const ReconstructionJob& job, Rng& rng) {
  if (!job.model) throw std::invalid_argument("ddpm_train_step: job has no model");
  const auto& s = job.schedule;
  const std::size_t B = batch.target.dim(0), L = batch.target.dim(2);
  std::vector<int> t(B);
  for (auto& ti : t) ti = static_cast<int>(rng.below(static_cast<std::uint64_t>(s.T)));
  auto eps = rng.normal_vector(B * L);
  std::vector<double> xt(B * L);
  const auto x0 = batch.target.data();
  for (std::size_t b = 0; b < B; ++b) {
    const double ab = s.alpha_bar[static_cast<std::size_t>(t[b])];
    const double a = std::sqrt(ab), n = std::sqrt(1.0 - ab);
    for (std::size_t i = b * L; i < (b + 1) * L; ++i) xt[i] = a * x0[i] + n * eps[i];
  }
  const Tensor noise = Tensor::from({B, 1, L}, std::move(eps));
  const Tensor pred = job.model->predict(Tensor::from({B, 1, L}, std::move(xt)), batch.condition, t, nn::Mode::train);
  const Tensor loss = nn::mse_loss(pred, noise);
  nn::backward(loss);
  return loss.item();
}

double ddpm_train_step(std::span<const data::Epoch> batch, const ReconstructionJob& job, Rng& rng) {
  return ddpm_train_step(gather_channels(batch, job.target, job.inputs), job, rng);
}

TrainHistory train_ddpm(std::span<const data::Epoch> epochs, const ReconstructionJob& job,
                        ConditionalDenoiser& model, nn::AdamState& optimizer, const DdpmTrainConfig& config,
                        const std::function<void(int, double)>& on_epoch) {
  if (epochs.empty()) throw std::invalid_argument("train_ddpm: no training epochs");
  if (config.batch_size == 0) throw std::invalid_argument("train_ddpm: batch_size must be >= 1");
  ReconstructionJob j = job;
  j.model = &model;
  const auto params = model.param_set().params;
  // resolve all channels once up front so a bad label fails before training
  const ChannelBatch all = gather_channels(epochs, job.target, job.inputs);
  const std::size_t N = epochs.size(), L = all.target.dim(2);

  TrainHistory hist;
  Rng step_rng = Rng::derive(config.seed, 0xD1FF);
  std::vector<std::size_t> order(N);
  for (int ep = 0; ep < config.epochs; ++ep) {
    optimizer.lr = nn::lr_schedule(config.lr, ep, config.halve_every);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = Rng::derive(config.seed, static_cast<std::uint64_t>(ep));
    shuffle_rng.shuffle(order.begin(), order.end());
    double total = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < N; start += config.batch_size) {
      const std::size_t B = std::min(config.batch_size, N - start);
      if (B < 2 && N >= 2) continue;  // batch norm needs more than one item
      std::vector<double> tv(B * L), cv(B * 2 * L);
      for (std::size_t b = 0; b < B; ++b) {
        const auto src = order[start + b];
        std::copy_n(all.target.data().begin() + static_cast<std::ptrdiff_t>(src * L), L, tv.begin() + static_cast<std::ptrdiff_t>(b * L));
        std::copy_n(all.condition.data().begin() + static_cast<std::ptrdiff_t>(src * 2 * L), 2 * L,
                    cv.begin() + static_cast<std::ptrdiff_t>(b * 2 * L));
      }
      ChannelBatch batch{Tensor::from({B, 1, L}, std::move(tv)), Tensor::from({B, 2, L}, std::move(cv))};
      nn::zero_grad(params);
      const double loss = ddpm_train_step(batch, j, step_rng);
      nn::adam_step(params, optimizer);
      hist.step_loss.push_back(loss);
      total += loss;
      ++steps;
    }
    hist.epoch_loss.push_back(steps ? total / steps : 0.0);
    if (on_epoch) on_epoch(ep, hist.epoch_loss.back());
  }
  return hist;
}

Tensor ddpm_sample(const Tensor& condition, NoisePredictor& model, const NoiseSchedule& schedule,
                   std::span<Rng> rngs, SamplerVariant variant) {
  if (condition.rank() != 3) throw std::invalid_argument("ddpm_sample: condition must be [B,C,L]");
  const std::size_t B = condition.dim(0), L = condition.dim(2);
  if (rngs.size() != B) throw std::invalid_argument("ddpm_sample: need one generator per batch item");
  nn::NoGradGuard no_grad;
  std::vector<double> x(B * L);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i = 0; i < L; ++i) x[b * L + i] = rngs[b].normal();
  std::vector<int> ts(B);
  for (int t = schedule.T - 1; t >= 0; --t) {
    const auto ti = static_cast<std::size_t>(t);
    std::fill(ts.begin(), ts.end(), t);
    const Tensor eps = model.predict(Tensor::from({B, 1, L}, x), condition, ts, nn::Mode::eval);
    const auto e = eps.data();
    const double coef = schedule.beta[ti] / std::sqrt(1.0 - schedule.alpha_bar[ti]);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(schedule.alpha[ti]);
    const bool add_noise = variant == SamplerVariant::stochastic && t > 0;
    const double sigma = std::sqrt(schedule.beta[ti]);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t i = b * L; i < (b + 1) * L; ++i) {
        x[i] = inv_sqrt_alpha * (x[i] - coef * e[i]);
        if (add_noise) x[i] += sigma * rngs[b].normal();
        if (!std::isfinite(x[i])) {
          throw NumericError("ddpm_sample: non-finite value at timestep " + std::to_string(t));
        }
      }
    }
  }
  return Tensor::from({B, 1, L}, std::move(x));
}

Tensor ddpm_sample(const Tensor& condition, const ReconstructionJob& job, Rng& rng, SamplerVariant variant) {
  if (!job.model) throw std::invalid_argument("ddpm_sample: job has no model");
  if (condition.rank() != 2) throw std::invalid_argument("ddpm_sample: condition must be [C,L]");
  const std::size_t C = condition.dim(0), L = condition.dim(1);
  const Tensor c = Tensor::from({1, C, L}, std::vector<double>(condition.data().begin(), condition.data().end()));
  std::vector<Rng> rngs{rng};
  Tensor out = ddpm_sample(c, *job.model, job.schedule, rngs, variant);
  rng = rngs[0];
  return Tensor::from({1, L}, std::vector<double>(out.data().begin(), out.data().end()));
}

std::vector<data::Epoch> reconstruct_channels(std::span<const data::Epoch> epochs,
                                              const data::AdjacencyTable& table, const ModelMap& models,
                                              const NoiseSchedule& schedule, std::uint64_t seed,
                                              SamplerVariant variant, std::size_t batch_size) {
  for (const auto& entry : table.entries()) {
    auto it = models.find(entry.target);
    if (it == models.end() || !it->second) {
      throw std::invalid_argument("reconstruct_channels: no model for target '" + entry.target + "'");
    }
  }
  if (batch_size == 0) throw std::invalid_argument("reconstruct_channels: batch_size must be >= 1");
  std::vector<data::Epoch> out(epochs.begin(), epochs.end());
  if (epochs.empty()) return out;
  const std::size_t L = epochs[0].samples.cols();
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& entry = table.entries()[k];
    NoisePredictor& model = *models.at(entry.target);
    for (std::size_t start = 0; start < epochs.size(); start += batch_size) {
      const std::size_t B = std::min(batch_size, epochs.size() - start);
      const auto chunk = epochs.subspan(start, B);
      const Tensor cond = gather_condition(chunk, entry.inputs);
      std::vector<Rng> rngs;
      for (std::size_t b = 0; b < B; ++b) {
        rngs.push_back(Rng::derive(seed, (static_cast<std::uint64_t>(k) << 32) | (start + b)));
      }
      const Tensor x = ddpm_sample(cond, model, schedule, rngs, variant);
      for (std::size_t b = 0; b < B; ++b) {
        auto& e = out[start + b];
        auto row = e.samples.row(e.channel_index(entry.target));
        std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(b * L), L, row.begin());
      }
    }
  }
  return out;
}

}  // namespace eegdiff::diffusion
