#include "eegdiff/data/montage.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "eegdiff/errors.hpp"

namespace eegdiff::data {

namespace {

struct MontageSite {
  const char* label;
  ScalpPosition pos;
};

constexpr MontageSite kSites[] = {
    {"Fp1", {-0.30, 0.92}}, {"AF3", {-0.32, 0.74}}, {"F7", {-0.75, 0.54}},
    {"F3", {-0.40, 0.50}},  {"FC1", {-0.24, 0.24}}, {"FC5", {-0.70, 0.26}},
    {"T7", {-0.92, 0.00}},  {"C3", {-0.46, 0.00}},  {"CP1", {-0.24, -0.24}},
    {"CP5", {-0.70, -0.26}}, {"P7", {-0.75, -0.54}}, {"P3", {-0.40, -0.50}},
    {"Pz", {0.00, -0.46}},  {"PO3", {-0.32, -0.74}}, {"O1", {-0.30, -0.92}},
    {"Oz", {0.00, -0.95}},  {"O2", {0.30, -0.92}},  {"PO4", {0.32, -0.74}},
    {"P4", {0.40, -0.50}},  {"P8", {0.75, -0.54}},  {"CP6", {0.70, -0.26}},
    {"CP2", {0.24, -0.24}}, {"C4", {0.46, 0.00}},   {"T8", {0.92, 0.00}},
    {"FC6", {0.70, 0.26}},  {"FC2", {0.24, 0.24}},  {"F4", {0.40, 0.50}},
    {"F8", {0.75, 0.54}},   {"AF4", {0.32, 0.74}},  {"Fp2", {0.30, 0.92}},
    {"Fz", {0.00, 0.46}},   {"Cz", {0.00, 0.00}},
};

}  // namespace

const ChannelNames& montage_channels() {
  static const ChannelNames names = [] {
    ChannelNames n;
    for (const auto& s : kSites) n.emplace_back(s.label);
    return n;
  }();
  return names;
}

std::optional<ScalpPosition> montage_position(const std::string& label) {
  for (const auto& s : kSites) {
    if (label == s.label) return s.pos;
  }
  return std::nullopt;
}

AdjacencyTable::AdjacencyTable(std::vector<AdjacencyEntry> entries, const ChannelNames& montage)
    : entries_(std::move(entries)) {
  auto known = [&](const std::string& l) {
    return std::find(montage.begin(), montage.end(), l) != montage.end();
  };
  std::set<std::string> targets;
  for (const auto& e : entries_) {
    for (const auto* l : {&e.target, &e.inputs[0], &e.inputs[1]}) {
      if (!known(*l)) throw DataError("adjacency: label '" + *l + "' not in montage");
    }
    if (e.inputs[0] == e.target || e.inputs[1] == e.target || e.inputs[0] == e.inputs[1]) {
      throw DataError("adjacency: degenerate row for target '" + e.target + "'");
    }
    if (!targets.insert(e.target).second) {
      throw DataError("adjacency: target '" + e.target + "' appears twice");
    }
  }
}

AdjacencyTable AdjacencyTable::standard() {
  return AdjacencyTable({
      {"AF3", {"Fp1", "F3"}},
      {"AF4", {"Fp2", "F4"}},
      {"F7", {"FC5", "F3"}},
      {"F8", {"T8", "F4"}},
      {"Fp1", {"AF3", "F3"}},
      {"Fp2", {"AF4", "F4"}},
      {"T7", {"C3", "CP1"}},
      {"T8", {"C4", "CP2"}},
  });
}

const AdjacencyEntry* AdjacencyTable::find(const std::string& target) const {
  for (const auto& e : entries_) {
    if (e.target == target) return &e;
  }
  return nullptr;
}

AdjacencyTable AdjacencyTable::restricted_to(const ChannelNames& channels) const {
  auto has = [&](const std::string& l) {
    return std::find(channels.begin(), channels.end(), l) != channels.end();
  };
  std::vector<AdjacencyEntry> kept;
  for (const auto& e : entries_) {
    if (has(e.target) && has(e.inputs[0]) && has(e.inputs[1])) kept.push_back(e);
  }
  AdjacencyTable t;
  t.entries_ = std::move(kept);
  return t;
}

}  // namespace eegdiff::data
