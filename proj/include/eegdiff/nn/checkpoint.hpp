#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/nn/layers.hpp"
#include "eegdiff/nn/optim.hpp"

namespace eegdiff::nn {

// Checkpoint layout (little-endian):
//   "EDNN" | u16 version=1 | u32 count
//   count x (u16 name length, name, u8 rank, u32 dims[rank], f32 data)
//   optional: "OPT1" | i64 step_count | f64 lr | u32 count | tensors as
//   above named "<param>.m" / "<param>.v"
struct StoredTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  std::vector<StoredTensor> tensors;
  std::optional<AdamState> optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const ParamSet& model,
                     const AdamState* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copy stored values into the model's parameters and buffers by name.
// Every model tensor must be present with a matching shape.
void restore(const Checkpoint& ckpt, const ParamSet& model);

}  // namespace eegdiff::nn
