#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "eegdiff/data/recording.hpp"

namespace eegdiff::dsp {

// `order` is the order of the band-pass filter itself (twice the order of
// the low-pass prototype), so it must be even.
struct BandpassSpec {
  double low_hz = 8.0;
  double high_hz = 30.0;
  int order = 4;
  double sampling_rate_hz = 512.0;

  void validate() const;
};

// One biquad: b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};
};

class SosFilter {
 public:
  SosFilter() = default;
  explicit SosFilter(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

  const std::vector<Biquad>& sections() const { return sections_; }
  int order() const { return static_cast<int>(2 * sections_.size()); }

  // Causal filtering from zero initial state, in place.
  void apply(std::span<double> x) const;

  // Complex response at normalised angular frequency w (radians/sample).
  std::complex<double> response(double w) const;

 private:
  std::vector<Biquad> sections_;
};

// Butterworth band-pass via analog prototype, low-pass to band-pass
// transform and prewarped bilinear transform. Unit gain at band centre.
SosFilter design_butterworth_bandpass(const BandpassSpec& spec);

// Zero-phase forward-backward filtering with odd reflection padding of
// 3 x order samples at both ends. Needs x.size() > 3 x order.
std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x);

// Per-channel zero-phase band-pass of a whole recording.
data::Recording butterworth_bandpass(const data::Recording& rec, const BandpassSpec& spec);

}  // namespace eegdiff::dsp
