#include "eegdiff/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eegdiff/data/montage.hpp"
#include "eegdiff/rng.hpp"

namespace eegdiff::data {

namespace {

constexpr std::size_t kLen = kSyntheticEpochLength;
constexpr int kMaxNoiseHz = 200;

struct Dipole {
  ScalpPosition pos;
  double depth;
  double mx, my, mz;  // moment; z is radial
};

ScalpPosition channel_position(int i, const std::string& label) {
  if (auto p = montage_position(label)) return *p;
  // generic extra channels on a spiral inside the head disc
  const double r = 0.2 + 0.7 * std::fmod(0.618034 * i, 1.0);
  const double a = 2.399963 * i;
  return {r * std::cos(a), r * std::sin(a)};
}

// Scalp potential of a current dipole below the surface, normalised so the
// largest magnitude across channels is 1.
std::vector<double> lead_field(const Dipole& d, const std::vector<ScalpPosition>& sites) {
  std::vector<double> v(sites.size());
  double peak = 0.0;
  for (std::size_t c = 0; c < sites.size(); ++c) {
    const double dx = sites[c].x - d.pos.x;
    const double dy = sites[c].y - d.pos.y;
    const double dz = d.depth;
    const double r2 = dx * dx + dy * dy + dz * dz;
    v[c] = (dx * d.mx + dy * d.my + dz * d.mz) / (r2 * std::sqrt(r2));
    peak = std::max(peak, std::abs(v[c]));
  }
  for (auto& x : v) x /= peak;
  return v;
}

class PinkNoise {
 public:
  explicit PinkNoise(double knee_hz) : cos_(kLen), sin_(kLen), gain_(kMaxNoiseHz + 1, 0.0) {
    for (std::size_t n = 0; n < kLen; ++n) {
      cos_[n] = std::cos(2.0 * M_PI * static_cast<double>(n) / kLen);
      sin_[n] = std::sin(2.0 * M_PI * static_cast<double>(n) / kLen);
    }
    double total = 0.0;
    for (int f = 1; f <= kMaxNoiseHz; ++f) {
      gain_[f] = 1.0 / std::max(static_cast<double>(f), knee_hz);
      total += gain_[f];
    }
    for (auto& g : gain_) g = std::sqrt(g / total);
  }

  // Unit-variance (in expectation) series with power flat below the knee
  // and 1/f above it up to 200 Hz, on the 1 Hz grid of a 1 s epoch.
  void draw(Rng& rng, std::vector<double>& out) const {
    out.assign(kLen, 0.0);
    for (int f = 1; f <= kMaxNoiseHz; ++f) {
      const double g = gain_[f];
      const double a = g * rng.normal();
      const double b = g * rng.normal();
      std::size_t idx = 0;
      for (std::size_t n = 0; n < kLen; ++n) {
        out[n] += a * cos_[idx] + b * sin_[idx];
        idx += static_cast<std::size_t>(f);
        if (idx >= kLen) idx -= kLen;
      }
    }
  }

 private:
  std::vector<double> cos_, sin_, gain_;
};

}  // namespace

std::vector<Epoch> make_synthetic_dataset(int n_epochs_per_class, int n_classes, int n_channels,
                                          std::uint64_t seed, const SyntheticOptions& options) {
  if (n_epochs_per_class < 1 || n_classes < 1 || n_channels < 1) {
    throw std::invalid_argument("make_synthetic_dataset: all counts must be >= 1");
  }
  if (options.n_phase_modes < 1) throw std::invalid_argument("make_synthetic_dataset: n_phase_modes must be >= 1");
  const auto& montage = montage_channels();
  auto names = std::make_shared<ChannelNames>();
  std::vector<ScalpPosition> sites;
  for (int i = 0; i < n_channels; ++i) {
    names->push_back(i < static_cast<int>(montage.size()) ? montage[static_cast<std::size_t>(i)]
                                                          : "X" + std::to_string(i + 1));
    sites.push_back(channel_position(i, names->back()));
  }
  std::shared_ptr<const ChannelNames> shared_names = names;

  // Fixed per dataset: background source geometry.
  Rng layout = Rng::derive(seed, 0xB6);
  std::vector<std::vector<double>> background_fields;
  for (int k = 0; k < options.n_background_sources; ++k) {
    const double r = 0.9 * std::sqrt(layout.uniform());
    const double a = layout.uniform(0.0, 2.0 * M_PI);
    const double o = layout.uniform(0.0, 2.0 * M_PI);
    Dipole d{{r * std::cos(a), r * std::sin(a)}, layout.uniform(0.25, 0.5), std::cos(o),
             std::sin(o), layout.uniform(-1.0, 1.0)};
    background_fields.push_back(lead_field(d, sites));
  }
  // Class sources sit along the sensorimotor strip.
  std::vector<std::vector<double>> class_fields;
  for (int c = 0; c < n_classes; ++c) {
    const double x = n_classes == 1 ? 0.0 : -0.5 + 1.0 * c / (n_classes - 1);
    const double o = M_PI * c / n_classes + M_PI / 4.0;
    Dipole d{{x, 0.05}, 0.35, std::cos(o), std::sin(o), 0.6};
    class_fields.push_back(lead_field(d, sites));
  }

  std::vector<double> class_phase;
  for (int c = 0; c < n_classes; ++c) class_phase.push_back(layout.uniform(0.0, 2.0 * M_PI));

  PinkNoise pink(options.noise_knee_hz);
  std::vector<double> series;
  std::vector<Epoch> out;
  out.reserve(static_cast<std::size_t>(n_epochs_per_class * n_classes));
  for (int c = 0; c < n_classes; ++c) {
    const double freq = 8.0 + 2.0 * c;
    for (int i = 0; i < n_epochs_per_class; ++i) {
      const auto index = static_cast<std::uint64_t>(c * n_epochs_per_class + i);
      Rng rng = Rng::derive(seed, 1000 + index);
      Epoch e;
      e.samples = ChannelMatrix(static_cast<std::size_t>(n_channels), kLen);
      e.label = c;
      e.source = {"synthetic", "seed" + std::to_string(seed), static_cast<std::size_t>(index) * kLen};
      e.channel_names = shared_names;

      // one of n_phase_modes evenly spaced phases, jittered
      const auto mode = static_cast<double>(rng.below(static_cast<std::uint64_t>(options.n_phase_modes)));
      const double phase = class_phase[static_cast<std::size_t>(c)] + 2.0 * M_PI * mode / options.n_phase_modes +
                           rng.uniform(-options.phase_jitter, options.phase_jitter);
      const double amp = options.signal_amplitude * rng.uniform(0.7, 1.3);
      for (std::size_t n = 0; n < kLen; ++n) {
        const double osc = amp * std::sin(2.0 * M_PI * freq * n / kSyntheticSamplingRate + phase);
        for (int ch = 0; ch < n_channels; ++ch) {
          e.samples(static_cast<std::size_t>(ch), n) = class_fields[c][static_cast<std::size_t>(ch)] * osc;
        }
      }
      for (const auto& field : background_fields) {
        pink.draw(rng, series);
        for (int ch = 0; ch < n_channels; ++ch) {
          const double w = options.background_amplitude * field[static_cast<std::size_t>(ch)];
          auto row = e.samples.row(static_cast<std::size_t>(ch));
          for (std::size_t n = 0; n < kLen; ++n) row[n] += w * series[n];
        }
      }
      for (int ch = 0; ch < n_channels; ++ch) {
        pink.draw(rng, series);
        auto row = e.samples.row(static_cast<std::size_t>(ch));
        for (std::size_t n = 0; n < kLen; ++n) row[n] += options.sensor_noise_amplitude * series[n];
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace eegdiff::data
