#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eegdiff/data/recording.hpp"
#include "eegdiff/rng.hpp"

namespace eegdiff::eval {

// Dense row-major sample matrix, one feature vector per row.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
};

// Each epoch flattened channel-major. Throws if shapes differ.
FeatureMatrix flatten_epochs(std::span<const data::Epoch> epochs);
std::vector<int> labels_of(std::span<const data::Epoch> epochs);

// Per-feature z-scoring with statistics from the fitting set. Constant
// features keep scale 1.
class Standardizer {
 public:
  static Standardizer fit(const FeatureMatrix& x);
  FeatureMatrix apply(const FeatureMatrix& x) const;

 private:
  std::vector<double> mean_, inv_sd_;
};

// Majority label among the k nearest training rows by Euclidean distance
// (distance ties resolved by training index). Count ties go to the class
// with the smallest mean distance among its neighbours, then the lowest id.
std::vector<int> knn_classify(const FeatureMatrix& train, std::span<const int> train_labels, const FeatureMatrix& test,
                              std::size_t k);

struct LogRegConfig {
  int max_iter = 1000;  // passes over the shuffled training set
  double l2 = 1e-4;
  double lr = 0.01;     // lr / sqrt(1 + pass)
  std::uint64_t seed = 0;
};

// Multinomial logistic regression trained by per-sample SGD on softmax
// cross-entropy plus l2 |W|^2 / 2 (bias unregularised).
class LogisticRegression {
 public:
  static LogisticRegression train(const FeatureMatrix& x, std::span<const int> labels, const LogRegConfig& config);
  // Row-wise class probabilities [rows x n_classes].
  FeatureMatrix predict_proba(const FeatureMatrix& x) const;
  std::vector<int> predict(const FeatureMatrix& x) const;
  int n_classes() const { return n_classes_; }
  const std::vector<double>& weights() const { return w_; }  // [n_classes x cols]
  const std::vector<double>& bias() const { return b_; }

 private:
  void scores(std::span<const double> x, std::span<double> out) const;
  int n_classes_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> w_, b_;
};

}  // namespace eegdiff::eval
