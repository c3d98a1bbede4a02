#include "eegdiff/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "eegdiff/rng.hpp"

namespace eegdiff::data {

std::vector<std::size_t> largest_remainder_allocation(std::span<const std::size_t> class_counts,
                                                      double fraction) {
  const std::size_t n_total = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(n_total) * fraction));
  std::vector<std::size_t> alloc(class_counts.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    const double quota = static_cast<double>(class_counts[c]) * fraction;
    alloc[c] = static_cast<std::size_t>(std::floor(quota));
    assigned += alloc[c];
    remainders.emplace_back(quota - std::floor(quota), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i) {
    const auto c = remainders[i].second;
    if (alloc[c] < class_counts[c]) {
      ++alloc[c];
      ++assigned;
    }
  }
  return alloc;
}

DatasetSplit split_dataset(std::span<const int> labels, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw std::invalid_argument("split_dataset: train_frac must be in (0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> counts;
  for (const auto& [label, idx] : by_class) {
    if (idx.size() < 2) {
      throw std::invalid_argument("split_dataset: class " + std::to_string(label) + " has " +
                                  std::to_string(idx.size()) + " epoch(s), need >= 2");
    }
    counts.push_back(idx.size());
  }
  const auto alloc = largest_remainder_allocation(counts, train_frac);

  DatasetSplit split;
  split.seed = seed;
  std::size_t k = 0;
  for (auto& [label, idx] : by_class) {
    auto rng = Rng::derive(seed, static_cast<std::uint64_t>(label));
    rng.shuffle(idx.begin(), idx.end());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      (j < alloc[k] ? split.train_indices : split.test_indices).push_back(idx[j]);
    }
    ++k;
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  return split;
}

std::vector<int> labels_of(std::span<const Epoch> epochs) {
  std::vector<int> labels;
  labels.reserve(epochs.size());
  for (const auto& e : epochs) labels.push_back(e.label);
  return labels;
}

DatasetSplit split_dataset(std::span<const Epoch> epochs, double train_frac, std::uint64_t seed) {
  const auto labels = labels_of(epochs);
  return split_dataset(std::span<const int>(labels), train_frac, seed);
}

}  // namespace eegdiff::data
