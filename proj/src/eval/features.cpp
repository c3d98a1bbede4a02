#include "eegdiff/eval/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace eegdiff::eval {

FeatureMatrix flatten_epochs(std::span<const data::Epoch> epochs) {
  FeatureMatrix m;
  if (epochs.empty()) return m;
  const auto& first = epochs[0].samples;
  m.rows = epochs.size();
  m.cols = first.rows() * first.cols();
  m.values.reserve(m.rows * m.cols);
  for (const auto& e : epochs) {
    if (e.samples.rows() != first.rows() || e.samples.cols() != first.cols()) {
      throw std::invalid_argument("flatten_epochs: epochs differ in shape");
    }
    m.values.insert(m.values.end(), e.samples.values().begin(), e.samples.values().end());
  }
  return m;
}

std::vector<int> labels_of(std::span<const data::Epoch> epochs) {
  std::vector<int> y;
  for (const auto& e : epochs) y.push_back(e.label);
  return y;
}

Standardizer Standardizer::fit(const FeatureMatrix& x) {
  if (x.rows == 0) throw std::invalid_argument("Standardizer: empty fitting set");
  Standardizer s;
  s.mean_.assign(x.cols, 0.0);
  s.inv_sd_.assign(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) s.mean_[c] += row[c];
  }
  for (auto& m : s.mean_) m /= static_cast<double>(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) s.inv_sd_[c] += (row[c] - s.mean_[c]) * (row[c] - s.mean_[c]);
  }
  for (auto& v : s.inv_sd_) {
    const double sd = std::sqrt(v / static_cast<double>(x.rows));
    v = sd > 0.0 ? 1.0 / sd : 1.0;
  }
  return s;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& x) const {
  if (x.cols != mean_.size()) throw std::invalid_argument("Standardizer: feature count mismatch");
  FeatureMatrix out = x;
  for (std::size_t r = 0; r < out.rows; ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < out.cols; ++c) row[c] = (row[c] - mean_[c]) * inv_sd_[c];
  }
  return out;
}

std::vector<int> knn_classify(const FeatureMatrix& train, std::span<const int> train_labels, const FeatureMatrix& test,
                              std::size_t k) {
  if (train.rows == 0) throw std::invalid_argument("knn_classify: empty training set");
  if (train_labels.size() != train.rows) throw std::invalid_argument("knn_classify: label count mismatch");
  if (k == 0 || k > train.rows) {
    throw std::invalid_argument("knn_classify: k=" + std::to_string(k) + " outside [1, " + std::to_string(train.rows) + "]");
  }
  if (test.rows > 0 && test.cols != train.cols) throw std::invalid_argument("knn_classify: feature count mismatch");
  const int n_classes = *std::max_element(train_labels.begin(), train_labels.end()) + 1;

  std::vector<int> out;
  out.reserve(test.rows);
  std::vector<std::pair<double, std::size_t>> dist(train.rows);
  std::vector<int> count(static_cast<std::size_t>(n_classes));
  std::vector<double> dsum(static_cast<std::size_t>(n_classes));
  for (std::size_t q = 0; q < test.rows; ++q) {
    const auto x = test.row(q);
    for (std::size_t i = 0; i < train.rows; ++i) {
      const auto t = train.row(i);
      double s = 0.0;
      for (std::size_t c = 0; c < train.cols; ++c) s += (x[c] - t[c]) * (x[c] - t[c]);
      dist[i] = {std::sqrt(s), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::fill(count.begin(), count.end(), 0);
    std::fill(dsum.begin(), dsum.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const auto lbl = static_cast<std::size_t>(train_labels[dist[j].second]);
      ++count[lbl];
      dsum[lbl] += dist[j].first;
    }
    int best = -1;
    for (int c = 0; c < n_classes; ++c) {
      const auto i = static_cast<std::size_t>(c);
      if (count[i] == 0) continue;
      if (best < 0) {
        best = c;
        continue;
      }
      const auto b = static_cast<std::size_t>(best);
      if (count[i] > count[b] || (count[i] == count[b] && dsum[i] / count[i] < dsum[b] / count[b])) best = c;
    }
    out.push_back(best);
  }
  return out;
}

LogisticRegression LogisticRegression::train(const FeatureMatrix& x, std::span<const int> labels,
                                             const LogRegConfig& config) {
  if (x.rows == 0 || labels.size() != x.rows) throw std::invalid_argument("logistic_regression: bad training set");
  if (config.max_iter < 1) throw std::invalid_argument("logistic_regression: max_iter must be >= 1");
  for (int y : labels) {
    if (y < 0) throw std::invalid_argument("logistic_regression: negative label");
  }
  const int n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  if (std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels[0]; })) {
    throw std::invalid_argument("logistic_regression: need at least 2 classes, got only class " +
                                std::to_string(labels[0]));
  }
  LogisticRegression m;
  m.n_classes_ = n_classes;
  m.cols_ = x.cols;
  const auto K = static_cast<std::size_t>(n_classes);
  m.w_.assign(K * x.cols, 0.0);
  m.b_.assign(K, 0.0);

  Rng rng(config.seed);
  std::vector<std::size_t> order(x.rows);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> p(K);
  for (int pass = 0; pass < config.max_iter; ++pass) {
    const double eta = config.lr / std::sqrt(1.0 + pass);
    const double shrink = std::max(0.0, 1.0 - eta * config.l2);
    rng.shuffle(order.begin(), order.end());
    for (std::size_t i : order) {
      const auto xi = x.row(i);
      m.scores(xi, p);
      const double top = *std::max_element(p.begin(), p.end());
      double z = 0.0;
      for (auto& v : p) z += (v = std::exp(v - top));
      for (auto& v : p) v /= z;
      p[static_cast<std::size_t>(labels[i])] -= 1.0;
      for (std::size_t k = 0; k < K; ++k) {
        double* w = m.w_.data() + k * x.cols;
        const double g = eta * p[k];
        for (std::size_t c = 0; c < x.cols; ++c) w[c] = shrink * w[c] - g * xi[c];
        m.b_[k] -= g;
      }
    }
  }
  return m;
}

void LogisticRegression::scores(std::span<const double> x, std::span<double> out) const {
  for (std::size_t k = 0; k < static_cast<std::size_t>(n_classes_); ++k) {
    const double* w = w_.data() + k * cols_;
    double s = b_[k];
    for (std::size_t c = 0; c < cols_; ++c) s += w[c] * x[c];
    out[k] = s;
  }
}

FeatureMatrix LogisticRegression::predict_proba(const FeatureMatrix& x) const {
  if (x.rows > 0 && x.cols != cols_) throw std::invalid_argument("logistic_regression: feature count mismatch");
  const auto K = static_cast<std::size_t>(n_classes_);
  FeatureMatrix out{x.rows, K, std::vector<double>(x.rows * K)};
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto p = out.row(r);
    scores(x.row(r), p);
    const double top = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (auto& v : p) z += (v = std::exp(v - top));
    for (auto& v : p) v /= z;
  }
  return out;
}

std::vector<int> LogisticRegression::predict(const FeatureMatrix& x) const {
  const auto proba = predict_proba(x);
  std::vector<int> y;
  for (std::size_t r = 0; r < proba.rows; ++r) {
    const auto p = proba.row(r);
    y.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
  }
  return y;
}

}  // namespace eegdiff::eval
