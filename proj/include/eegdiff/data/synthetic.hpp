#pragma once

#include <cstdint>
#include <vector>

#include "eegdiff/data/recording.hpp"

namespace eegdiff::data {

inline constexpr double kSyntheticSamplingRate = 512.0;
inline constexpr std::size_t kSyntheticEpochLength = 512;

struct SyntheticOptions {
  // Amplitude of the class oscillation relative to unit-scale background.
  double signal_amplitude = 2.0;
  double background_amplitude = 1.0;
  double sensor_noise_amplitude = 0.15;
  int n_background_sources = 10;
  // Background spectrum is flat below this frequency, 1/f above.
  double noise_knee_hz = 4.0;
  // Oscillation phase: a class-specific offset plus one of n evenly
  // spaced modes, jittered uniformly by +-phase_jitter radians. Two
  // opposite modes give each class a zero mean.
  int n_phase_modes = 2;
  double phase_jitter = 0.6;
};

// Desk-scale motor-imagery stand-in. Class c carries an oscillation at
// 8 + 2c Hz with a bimodal phase, projected onto the scalp by a
// class-specific dipole pattern, on top of spatially mixed 1/f background
// sources and independent sensor noise. Channels follow the 32-channel
// montage (generic labels beyond 32). Epochs are grouped by class.
std::vector<Epoch> make_synthetic_dataset(int n_epochs_per_class, int n_classes, int n_channels,
                                          std::uint64_t seed,
                                          const SyntheticOptions& options = {});

}  // namespace eegdiff::data
