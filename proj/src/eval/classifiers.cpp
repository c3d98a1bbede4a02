#include "eegdiff/eval/classifiers.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "eegdiff/errors.hpp"
#include "eegdiff/nn/optim.hpp"

namespace eegdiff::eval {

using nn::Tensor;

namespace {

void require_two_classes(std::span<const data::Epoch> train, const std::string& who) {
  if (train.empty()) throw std::invalid_argument(who + ": empty training set");
  for (const auto& e : train) {
    if (e.label < 0) throw std::invalid_argument(who + ": negative label");
    if (e.label != train[0].label) return;
  }
  throw std::invalid_argument(who + ": training set holds only class " + std::to_string(train[0].label));
}

Tensor stack_epochs(std::span<const data::Epoch> epochs, std::size_t begin, std::size_t count,
                    std::span<const std::size_t> order = {}) {
  const auto& first = epochs[0].samples;
  const std::size_t C = first.rows(), L = first.cols();
  std::vector<double> v;
  v.reserve(count * C * L);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& s = epochs[order.empty() ? begin + i : order[begin + i]].samples;
    if (s.rows() != C || s.cols() != L) throw std::invalid_argument("classifier: epochs differ in shape");
    v.insert(v.end(), s.values().begin(), s.values().end());
  }
  return Tensor::from({count, C, L}, std::move(v));
}

}  // namespace

void KnnClassifier::fit(std::span<const data::Epoch> train) {
  if (train.empty()) throw std::invalid_argument("knn: empty training set");
  const auto x = flatten_epochs(train);
  scaler_ = Standardizer::fit(x);
  train_ = scaler_->apply(x);
  labels_ = labels_of(train);
}

std::vector<int> KnnClassifier::predict(std::span<const data::Epoch> test) {
  if (!scaler_) throw std::logic_error("knn: predict before fit");
  return knn_classify(train_, labels_, scaler_->apply(flatten_epochs(test)), k_);
}

void LogRegClassifier::fit(std::span<const data::Epoch> train) {
  require_two_classes(train, "logreg");
  const auto x = flatten_epochs(train);
  scaler_ = Standardizer::fit(x);
  model_ = LogisticRegression::train(scaler_->apply(x), labels_of(train), config_);
}

std::vector<int> LogRegClassifier::predict(std::span<const data::Epoch> test) {
  if (!model_) throw std::logic_error("logreg: predict before fit");
  return model_->predict(scaler_->apply(flatten_epochs(test)));
}

void NetClassifier::fit(std::span<const data::Epoch> train) {
  require_two_classes(train, name());
  if (config_.batch_size == 0) throw std::invalid_argument(name() + ": batch_size must be >= 1");
  channels_ = train[0].samples.rows();
  length_ = train[0].samples.cols();
  int n_classes = 0;
  for (const auto& e : train) n_classes = std::max(n_classes, e.label + 1);
  Rng init = Rng::derive(config_.seed, 0xC1A5);
  build(channels_, length_, n_classes, init);
  built_ = true;

  const auto params = param_set().params;
  nn::AdamState opt;
  opt.lr = config_.lr;
  const std::size_t N = train.size();
  std::vector<std::size_t> order(N);
  losses_.clear();
  for (int ep = 0; ep < config_.epochs; ++ep) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = Rng::derive(config_.seed, static_cast<std::uint64_t>(ep));
    shuffle.shuffle(order.begin(), order.end());
    double total = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < N; start += config_.batch_size) {
      const std::size_t B = std::min(config_.batch_size, N - start);
      if (B < 2 && N >= 2) continue;
      const Tensor x = stack_epochs(train, start, B, order);
      std::vector<int> y(B);
      for (std::size_t b = 0; b < B; ++b) y[b] = train[order[start + b]].label;
      nn::zero_grad(params);
      const Tensor loss = nn::cross_entropy(logits(x, nn::Mode::train), y);
      nn::backward(loss);
      nn::adam_step(params, opt);
      total += loss.item();
      ++steps;
    }
    losses_.push_back(steps ? total / steps : 0.0);
  }
}

Tensor NetClassifier::predict_proba(std::span<const data::Epoch> test) {
  if (!built_) throw std::logic_error(name() + ": predict before fit");
  if (test.empty()) return Tensor::zeros({0});
  if (test[0].samples.rows() != channels_ || test[0].samples.cols() != length_) {
    throw std::invalid_argument(name() + ": test epochs do not match the training shape");
  }
  nn::NoGradGuard no_grad;
  std::vector<double> rows;
  std::size_t K = 0;
  for (std::size_t start = 0; start < test.size(); start += 64) {
    const std::size_t B = std::min<std::size_t>(64, test.size() - start);
    const Tensor p = nn::softmax(logits(stack_epochs(test, start, B), nn::Mode::eval));
    K = p.dim(1);
    rows.insert(rows.end(), p.data().begin(), p.data().end());
  }
  return Tensor::from({test.size(), K}, std::move(rows));
}

std::vector<int> NetClassifier::predict(std::span<const data::Epoch> test) {
  const Tensor p = predict_proba(test);
  std::vector<int> y;
  if (test.empty()) return y;
  const std::size_t K = p.dim(1);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto row = p.data().subspan(i * K, K);
    y.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return y;
}

void CnnClassifier::build(std::size_t channels, std::size_t length, int n_classes, Rng& rng) {
  if (length < 16) throw std::invalid_argument("cnn: epochs shorter than 16 samples");
  conv1_ = nn::Conv1d("cnn.conv1", channels, 32, 15, 1, 7, rng);
  conv2_ = nn::Conv1d("cnn.conv2", 32, 32, 7, 1, 3, rng);
  hidden_ = nn::Linear("cnn.hidden", 32, 32, rng);
  dense_ = nn::Linear("cnn.dense", 32, static_cast<std::size_t>(n_classes), rng);
}

Tensor CnnClassifier::logits(const Tensor& x, nn::Mode) {
  Tensor h = nn::max_pool1d(nn::relu(conv1_.forward(x)), 4);
  h = nn::max_pool1d(nn::relu(conv2_.forward(h)), 4);
  return dense_.forward(nn::relu(hidden_.forward(nn::global_avg_pool(h))));
}

nn::ParamSet CnnClassifier::param_set() const {
  nn::ParamSet set;
  set.add(conv1_.params());
  set.add(conv2_.params());
  set.add(hidden_.params());
  set.add(dense_.params());
  return set;
}

void UNetClassifier::build(std::size_t channels, std::size_t length, int n_classes, Rng& rng) {
  const std::vector<std::size_t> widths{16, 32};
  const std::size_t k = 7, pad = 3;
  if (length % 4 != 0) throw std::invalid_argument("unet: epoch length must be divisible by 4");
  enc_.clear();
  down_.clear();
  std::size_t in = channels;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const auto id = "unet.enc" + std::to_string(i);
    enc_.push_back({nn::Conv1d(id + ".conv", in, widths[i], k, 1, pad, rng, false), nn::BatchNorm1d(id + ".bn", widths[i])});
    down_.push_back({nn::Conv1d(id + ".down", widths[i], widths[i], k, 2, pad, rng, false),
                     nn::BatchNorm1d(id + ".down_bn", widths[i])});
    in = widths[i];
  }
  mid_ = {nn::Conv1d("unet.mid.conv", in, in, k, 1, pad, rng, false), nn::BatchNorm1d("unet.mid.bn", in)};
  up_.assign(widths.size(), {});
  dec_.assign(widths.size(), {});
  std::size_t ch = in;
  for (std::size_t j = widths.size(); j-- > 0;) {
    const auto id = "unet.dec" + std::to_string(j);
    const auto out = j == 0 ? widths[0] : widths[j - 1];
    up_[j] = nn::ConvTranspose1d(id + ".up", ch, widths[j], 4, 2, 1, rng);
    dec_[j] = {nn::Conv1d(id + ".conv", 2 * widths[j], out, k, 1, pad, rng, false), nn::BatchNorm1d(id + ".bn", out)};
    ch = out;
  }
  head_ = nn::Linear("unet.head", ch, static_cast<std::size_t>(n_classes), rng);
}

Tensor UNetClassifier::logits(const Tensor& x, nn::Mode mode) {
  auto block = [&](Block& b, const Tensor& h) { return nn::relu(b.bn.forward(b.conv.forward(h), mode)); };
  Tensor h = x;
  std::vector<Tensor> skips;
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    h = block(enc_[i], h);
    skips.push_back(h);
    h = block(down_[i], h);
  }
  h = block(mid_, h);
  for (std::size_t j = enc_.size(); j-- > 0;) {
    h = nn::relu(up_[j].forward(h));
    h = block(dec_[j], nn::concat_channels(std::vector<Tensor>{h, skips[j]}));
  }
  return head_.forward(nn::global_avg_pool(h));
}

nn::ParamSet UNetClassifier::param_set() const {
  nn::ParamSet set;
  auto add = [&](const Block& b) {
    set.add(b.conv.params());
    b.bn.collect(set);
  };
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    add(enc_[i]);
    add(down_[i]);
  }
  add(mid_);
  for (std::size_t j = enc_.size(); j-- > 0;) {
    set.add(up_[j].params());
    add(dec_[j]);
  }
  set.add(head_.params());
  return set;
}

ClassifierFactory classifier_factory(const std::string& name, const ClassifierConfig& config) {
  if (name == "knn") return [k = config.knn_k] { return std::make_unique<KnnClassifier>(k); };
  if (name == "logreg") return [c = config.logreg] { return std::make_unique<LogRegClassifier>(c); };
  if (name == "cnn") return [c = config.net] { return std::make_unique<CnnClassifier>(c); };
  if (name == "unet") return [c = config.net] { return std::make_unique<UNetClassifier>(c); };
  throw ConfigError("unknown classifier '" + name + "' (knn | logreg | cnn | unet)");
}

}  // namespace eegdiff::eval
