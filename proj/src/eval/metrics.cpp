#include "eegdiff/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace eegdiff::eval {

namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t min, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": length mismatch " + std::to_string(a) + " vs " +
                                std::to_string(b));
  }
  if (a < min) throw std::invalid_argument(std::string(what) + ": need at least " + std::to_string(min) + " values");
}

}  // namespace

double mse(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size(), 1, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size(), 2, "pearson");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw std::invalid_argument("pearson: constant input has no correlation");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                                       int n_classes) {
  check_lengths(y_true.size(), y_pred.size(), 0, "confusion_matrix");
  const auto n = static_cast<std::size_t>(n_classes);
  std::vector<std::vector<std::size_t>> m(n, std::vector<std::size_t>(n, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= n_classes || y_pred[i] < 0 || y_pred[i] >= n_classes) {
      throw std::invalid_argument("confusion_matrix: label out of range at index " + std::to_string(i));
    }
    ++m[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  }
  return m;
}

ClassificationScores classification_report(std::span<const int> y_true, std::span<const int> y_pred) {
  check_lengths(y_true.size(), y_pred.size(), 1, "classification_report");
  int n_classes = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_pred[i] < 0) throw std::invalid_argument("classification_report: negative label");
    n_classes = std::max({n_classes, y_true[i] + 1, y_pred[i] + 1});
  }
  const auto m = confusion_matrix(y_true, y_pred, n_classes);
  const double total = static_cast<double>(y_true.size());
  ClassificationScores s;
  for (int c = 0; c < n_classes; ++c) {
    const auto k = static_cast<std::size_t>(c);
    std::size_t support = 0, predicted = 0;
    for (int j = 0; j < n_classes; ++j) {
      support += m[k][static_cast<std::size_t>(j)];
      predicted += m[static_cast<std::size_t>(j)][k];
    }
    const double tp = static_cast<double>(m[k][k]);
    s.accuracy += tp;
    if (support == 0) continue;
    const double precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    const double recall = tp / static_cast<double>(support);
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    const double w = static_cast<double>(support) / total;
    s.precision += w * precision;
    s.recall += w * recall;
    s.f1 += w * f1;
  }
  s.accuracy /= total;
  return s;
}

}  // namespace eegdiff::eval
