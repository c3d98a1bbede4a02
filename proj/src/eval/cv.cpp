#include "eegdiff/eval/cv.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace eegdiff::eval {

std::vector<int> stratified_folds(std::span<const int> labels, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw std::invalid_argument("stratified_folds: need at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [c, idx] : by_class) {
    if (idx.size() < static_cast<std::size_t>(n_folds)) {
      throw std::invalid_argument("stratified_folds: class " + std::to_string(c) + " has " +
                                  std::to_string(idx.size()) + " samples, fewer than " + std::to_string(n_folds) +
                                  " folds");
    }
  }
  std::vector<int> fold(labels.size(), -1);
  std::size_t deal = 0;
  for (auto& [c, idx] : by_class) {
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(c));
    rng.shuffle(idx.begin(), idx.end());
    for (std::size_t i : idx) fold[i] = static_cast<int>(deal++ % static_cast<std::size_t>(n_folds));
  }
  return fold;
}

CvResult cross_validate(std::span<const data::Epoch> epochs, const ClassifierFactory& factory, int n_folds,
                        std::uint64_t seed) {
  return cross_validate(epochs, epochs, factory, n_folds, seed);
}

CvResult cross_validate(std::span<const data::Epoch> train_pool, std::span<const data::Epoch> test_pool,
                        const ClassifierFactory& factory, int n_folds, std::uint64_t seed) {
  if (train_pool.size() != test_pool.size()) throw std::invalid_argument("cross_validate: pools differ in size");
  const auto labels = labels_of(train_pool);
  for (std::size_t i = 0; i < test_pool.size(); ++i) {
    if (test_pool[i].label != labels[i]) {
      throw std::invalid_argument("cross_validate: pools disagree on the label of epoch " + std::to_string(i));
    }
  }
  const auto fold = stratified_folds(labels, n_folds, seed);
  CvResult r;
  for (int f = 0; f < n_folds; ++f) {
    std::vector<data::Epoch> train, test;
    for (std::size_t i = 0; i < fold.size(); ++i) {
      if (fold[i] == f) {
        test.push_back(test_pool[i]);
      } else {
        train.push_back(train_pool[i]);
      }
    }
    auto clf = factory();
    clf->fit(train);
    const auto pred = clf->predict(test);
    const auto truth = labels_of(test);
    const auto scores = classification_report(truth, pred);
    r.fold_scores.push_back(scores);
    r.fold_accuracies.push_back(scores.accuracy);
  }
  const double k = static_cast<double>(n_folds);
  for (const auto& s : r.fold_scores) {
    r.mean_scores.accuracy += s.accuracy / k;
    r.mean_scores.precision += s.precision / k;
    r.mean_scores.recall += s.recall / k;
    r.mean_scores.f1 += s.f1 / k;
  }
  r.mean_accuracy = r.mean_scores.accuracy;
  return r;
}

}  // namespace eegdiff::eval
