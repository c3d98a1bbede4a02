#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace eegdiff::eval {

// Mean squared difference. Throws on empty or unequal lengths.
double mse(std::span<const double> a, std::span<const double> b);

// Pearson correlation. Throws on fewer than two samples, unequal lengths,
// or a constant argument.
double pearson(std::span<const double> a, std::span<const double> b);

struct ClassificationScores {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// counts[true][pred] over classes 0..n_classes-1.
std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                                       int n_classes);

// Accuracy plus per-class precision, recall and F1 averaged with weights
// equal to each class's support in y_true. A class never predicted has
// precision 0; a class with precision and recall both 0 has F1 0.
ClassificationScores classification_report(std::span<const int> y_true, std::span<const int> y_pred);

}  // namespace eegdiff::eval
