#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/data/recording.hpp"
#include "eegdiff/eval/features.hpp"
#include "eegdiff/nn/layers.hpp"

namespace eegdiff::eval {

class EpochClassifier {
 public:
  virtual ~EpochClassifier() = default;
  virtual std::string name() const = 0;
  // Throws on an empty set, mixed shapes, or a single class.
  virtual void fit(std::span<const data::Epoch> train) = 0;
  virtual std::vector<int> predict(std::span<const data::Epoch> test) = 0;
};

struct NetTrainConfig {
  int epochs = 10;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct ClassifierConfig {
  std::size_t knn_k = 5;
  LogRegConfig logreg;
  NetTrainConfig net;
};

// Flattened epochs, z-scored with training statistics.
class KnnClassifier final : public EpochClassifier {
 public:
  explicit KnnClassifier(std::size_t k) : k_(k) {}
  std::string name() const override { return "knn"; }
  void fit(std::span<const data::Epoch> train) override;
  std::vector<int> predict(std::span<const data::Epoch> test) override;

 private:
  std::size_t k_;
  std::optional<Standardizer> scaler_;
  FeatureMatrix train_;
  std::vector<int> labels_;
};

class LogRegClassifier final : public EpochClassifier {
 public:
  explicit LogRegClassifier(LogRegConfig config) : config_(config) {}
  std::string name() const override { return "logreg"; }
  void fit(std::span<const data::Epoch> train) override;
  std::vector<int> predict(std::span<const data::Epoch> test) override;

 private:
  LogRegConfig config_;
  std::optional<Standardizer> scaler_;
  std::optional<LogisticRegression> model_;
};

// Shared mini-batch Adam loop for the network classifiers.
class NetClassifier : public EpochClassifier {
 public:
  explicit NetClassifier(NetTrainConfig config) : config_(config) {}
  void fit(std::span<const data::Epoch> train) override;
  std::vector<int> predict(std::span<const data::Epoch> test) override;
  // Softmax rows [B, n_classes] in eval mode.
  nn::Tensor predict_proba(std::span<const data::Epoch> test);
  std::vector<double> epoch_losses() const { return losses_; }

 protected:
  virtual void build(std::size_t channels, std::size_t length, int n_classes, Rng& rng) = 0;
  virtual nn::Tensor logits(const nn::Tensor& x, nn::Mode mode) = 0;
  virtual nn::ParamSet param_set() const = 0;

 private:
  NetTrainConfig config_;
  std::size_t channels_ = 0, length_ = 0;
  bool built_ = false;
  std::vector<double> losses_;
};

// conv-ReLU-maxpool twice, average over time, two dense layers.
class CnnClassifier final : public NetClassifier {
 public:
  explicit CnnClassifier(NetTrainConfig config) : NetClassifier(config) {}
  std::string name() const override { return "cnn"; }

 protected:
  void build(std::size_t channels, std::size_t length, int n_classes, Rng& rng) override;
  nn::Tensor logits(const nn::Tensor& x, nn::Mode mode) override;
  nn::ParamSet param_set() const override;

 private:
  nn::Conv1d conv1_, conv2_;
  nn::Linear hidden_, dense_;
};

// Two-level encoder-decoder with skip concatenation, global average
// pooling over time, dense head.
class UNetClassifier final : public NetClassifier {
 public:
  explicit UNetClassifier(NetTrainConfig config) : NetClassifier(config) {}
  std::string name() const override { return "unet"; }

 protected:
  void build(std::size_t channels, std::size_t length, int n_classes, Rng& rng) override;
  nn::Tensor logits(const nn::Tensor& x, nn::Mode mode) override;
  nn::ParamSet param_set() const override;

 private:
  struct Block {
    nn::Conv1d conv;
    nn::BatchNorm1d bn;
  };
  std::vector<Block> enc_, down_, dec_;
  std::vector<nn::ConvTranspose1d> up_;
  Block mid_;
  nn::Linear head_;
};

using ClassifierFactory = std::function<std::unique_ptr<EpochClassifier>()>;

inline const std::vector<std::string> kClassifierNames = {"knn", "logreg", "cnn", "unet"};

// Throws ConfigError for an unknown name.
ClassifierFactory classifier_factory(const std::string& name, const ClassifierConfig& config);

}  // namespace eegdiff::eval
