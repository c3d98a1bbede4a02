#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/data/recording.hpp"

namespace eegdiff::dsp {

// Per-channel standardisation over time (population standard deviation).
// Throws std::invalid_argument naming the first constant channel.
data::Recording zscore_channels(const data::Recording& rec);

struct ArtifactAnnotation {
  std::string channel;
  std::size_t start_sample = 0;  // inclusive
  std::size_t end_sample = 0;    // exclusive
  std::string kind = "muscle";
  double zscore_peak = 0.0;
};

struct MuscleDetectorOptions {
  double z_threshold = 4.0;
  double band_low_hz = 20.0;
  double band_high_hz = 140.0;
  double smoothing_s = 0.1;
};

// High-frequency envelope detector: per channel band-pass 20-140 Hz, take
// |x| smoothed by a centred moving average, z-score it and report maximal
// runs above the threshold. Output is sorted by channel order then start.
std::vector<ArtifactAnnotation> annotate_muscle_artifacts(const data::Recording& rec,
                                                          const MuscleDetectorOptions& options);
std::vector<ArtifactAnnotation> annotate_muscle_artifacts(const data::Recording& rec,
                                                          double z_threshold);

// Centred moving average with shrinking windows at the edges.
std::vector<double> moving_average(std::span<const double> x, std::size_t window);

// Markers whose [start, start + epoch_len) overlaps no annotation.
std::vector<data::Marker> drop_annotated_epochs(std::span<const data::Marker> markers,
                                                std::size_t epoch_len,
                                                std::span<const ArtifactAnnotation> annotations);

// Markers whose epoch has no sample with |value| above max_abs.
std::vector<data::Marker> drop_high_amplitude_epochs(const data::Recording& rec,
                                                     std::span<const data::Marker> markers,
                                                     std::size_t epoch_len, double max_abs);

// csv: channel,start_sample,end_sample,kind,zscore_peak
void save_annotations(const std::filesystem::path& path,
                      std::span<const ArtifactAnnotation> annotations);

}  // namespace eegdiff::dsp
