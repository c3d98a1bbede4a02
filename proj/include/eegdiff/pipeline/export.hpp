#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eegdiff/data/recording.hpp"

namespace eegdiff::pipeline {

struct SignalWindow {
  double start_s = 6.0;
  double end_s = 12.0;
};

struct ComparisonExport {
  std::vector<std::filesystem::path> csv_files;
  std::vector<std::filesystem::path> svg_files;
};

// Per channel: <prefix>_<channel>.csv with columns time_s,real,synthetic and
// an SVG overlay (real solid, synthetic dashed). Both traces are smoothed by
// a centred moving average of smoothing_s seconds (0 disables) before the
// window is cut. The SVG carries the provenance string in a comment.
ComparisonExport export_signal_comparison(const data::Recording& real, const data::Recording& synthetic,
                                          const std::vector<std::string>& channels, SignalWindow window,
                                          double smoothing_s, const std::filesystem::path& out_dir,
                                          const std::string& prefix, const std::string& provenance);

}  // namespace eegdiff::pipeline
