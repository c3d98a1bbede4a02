#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "eegdiff/data/recording.hpp"

namespace eegdiff::data {

struct ScalpPosition {
  double x = 0.0;  // left (-) to right (+)
  double y = 0.0;  // posterior (-) to anterior (+)
};

// 32-channel 10-20 montage (the BCI Competition III-V electrode set),
// with approximate 2D azimuthal positions on the unit head disc.
const ChannelNames& montage_channels();
std::optional<ScalpPosition> montage_position(const std::string& label);

struct AdjacencyEntry {
  std::string target;
  std::array<std::string, 2> inputs;

  bool operator==(const AdjacencyEntry&) const = default;
};

// Target channel <- two measured input channels.
class AdjacencyTable {
 public:
  AdjacencyTable() = default;
  // Validates: labels in montage, no duplicate target.
  explicit AdjacencyTable(std::vector<AdjacencyEntry> entries,
                          const ChannelNames& montage = montage_channels());

  // The eight frontal/temporal reconstruction scenarios.
  static AdjacencyTable standard();

  const std::vector<AdjacencyEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const AdjacencyEntry* find(const std::string& target) const;

  // Restrict to targets whose three labels all exist in `channels`.
  AdjacencyTable restricted_to(const ChannelNames& channels) const;

 private:
  std::vector<AdjacencyEntry> entries_;
};

inline const std::array<const char*, 4> kMotorImageryClasses = {"left_hand", "right_hand", "feet",
                                                                "tongue"};

}  // namespace eegdiff::data
