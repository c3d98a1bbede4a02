#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegdiff/data/recording.hpp"

namespace eegdiff::data {

enum class RecordingFormat { eegb, csv };

RecordingFormat parse_format(const std::string& name);

// eegb v1 layout (all little-endian):
//   "EEGB" | u16 version=1 | u16 n_channels | u32 n_samples | f32 fs
//   per channel: u8 name length, ASCII name
//   f32 samples, channel-major
// Samples are stored as f32; doubles written here are narrowed.
void save_recording(const std::filesystem::path& path, const Recording& rec);

// csv: header "t,<ch1>,<ch2>,...", first column ignored. The sampling rate
// is not stored in csv files and must be supplied for that format.
Recording load_recording(const std::filesystem::path& path, RecordingFormat format,
                         std::optional<double> csv_sampling_rate_hz = std::nullopt);

// Marker csv: header "start_sample,label".
std::vector<Marker> load_markers(const std::filesystem::path& path);
void save_markers(const std::filesystem::path& path, std::span<const Marker> markers);

}  // namespace eegdiff::data
