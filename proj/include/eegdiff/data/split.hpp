#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eegdiff/data/recording.hpp"

namespace eegdiff::data {

struct DatasetSplit {
  std::vector<std::size_t> train_indices;  // ascending
  std::vector<std::size_t> test_indices;   // ascending
  std::uint64_t seed = 0;
};

// Largest-remainder allocation of `total` items across classes with the
// given counts. Remainder ties go to the lower class id.
std::vector<std::size_t> largest_remainder_allocation(std::span<const std::size_t> class_counts,
                                                      double fraction);

// Stratified split: per-class train counts by largest remainder, then a
// seeded shuffle within each class. Needs >= 2 epochs per class present.
DatasetSplit split_dataset(std::span<const int> labels, double train_frac, std::uint64_t seed);
DatasetSplit split_dataset(std::span<const Epoch> epochs, double train_frac, std::uint64_t seed);

std::vector<int> labels_of(std::span<const Epoch> epochs);

template <typename T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(items[i]);
  return out;
}

}  // namespace eegdiff::data
