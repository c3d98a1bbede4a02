#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eegdiff/data/recording.hpp"
#include "eegdiff/eval/classifiers.hpp"
#include "eegdiff/eval/metrics.hpp"

namespace eegdiff::eval {

// Fold id per sample. Each class is shuffled with its own stream and dealt
// round-robin, continuing the deal across classes, so per-class fold counts
// are within one of proportional and fold sizes within one of each other.
// Throws if any present class has fewer than n_folds samples.
std::vector<int> stratified_folds(std::span<const int> labels, int n_folds, std::uint64_t seed);

struct CvResult {
  std::vector<double> fold_accuracies;
  std::vector<ClassificationScores> fold_scores;
  double mean_accuracy = 0.0;
  ClassificationScores mean_scores;  // fold average
};

// Stratified k-fold evaluation; a fresh classifier per fold.
CvResult cross_validate(std::span<const data::Epoch> epochs, const ClassifierFactory& factory, int n_folds,
                        std::uint64_t seed);
// Train on train_pool and test on test_pool, with folds drawn over the
// shared index set. Pools must be aligned epoch by epoch (same labels).
CvResult cross_validate(std::span<const data::Epoch> train_pool, std::span<const data::Epoch> test_pool,
                        const ClassifierFactory& factory, int n_folds, std::uint64_t seed);

}  // namespace eegdiff::eval
