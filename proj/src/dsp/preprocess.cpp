#include "eegdiff/dsp/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "eegdiff/dsp/filter.hpp"
#include "eegdiff/errors.hpp"

namespace eegdiff::dsp {

namespace {

// Mean and population variance with a compensating second pass.
std::pair<double, double> mean_var(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double corr = 0.0, ss = 0.0;
  for (double v : x) {
    corr += v - mean;
    ss += (v - mean) * (v - mean);
  }
  mean += corr / n;
  const double var = ss / n - (corr / n) * (corr / n);
  return {mean, var};
}

}  // namespace

data::Recording zscore_channels(const data::Recording& rec) {
  data::ChannelMatrix out(rec.n_channels(), rec.n_samples());
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    const auto row = rec.samples().row(c);
    const auto [mean, var] = mean_var(row);
    if (!(var > 0.0)) {
      throw std::invalid_argument("zscore_channels: channel '" + rec.channel_names()[c] +
                                  "' has zero variance");
    }
    const double inv_sd = 1.0 / std::sqrt(var);
    auto dst = out.row(c);
    for (std::size_t i = 0; i < row.size(); ++i) dst[i] = (row[i] - mean) * inv_sd;
  }
  return rec.with_samples(std::move(out));
}

std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving_average: window must be >= 1");
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  const std::size_t left = (window - 1) / 2;
  const std::size_t right = window - 1 - left;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(n, i + right + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

std::vector<ArtifactAnnotation> annotate_muscle_artifacts(const data::Recording& rec,
                                                          const MuscleDetectorOptions& options) {
  const double fs = rec.sampling_rate_hz();
  if (!(fs > 2.0 * options.band_high_hz)) {
    throw std::invalid_argument("annotate_muscle_artifacts: sampling rate " + std::to_string(fs) +
                                " Hz cannot hold the " + std::to_string(options.band_high_hz) +
                                " Hz analysis band");
  }
  if (!(options.z_threshold > 0.0)) {
    throw std::invalid_argument("annotate_muscle_artifacts: z_threshold must be > 0");
  }
  const auto filter = design_butterworth_bandpass({options.band_low_hz, options.band_high_hz, 4, fs});
  const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(options.smoothing_s * fs)));

  std::vector<ArtifactAnnotation> out;
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    auto hf = filtfilt(filter, rec.samples().row(c));
    for (auto& v : hf) v = std::abs(v);
    const auto env = moving_average(hf, window);
    const auto [mean, var] = mean_var(env);
    if (!(var > 0.0)) continue;
    const double sd = std::sqrt(var);
    std::size_t i = 0;
    while (i < env.size()) {
      if ((env[i] - mean) / sd <= options.z_threshold) {
        ++i;
        continue;
      }
      ArtifactAnnotation a;
      a.channel = rec.channel_names()[c];
      a.start_sample = i;
      double peak = -INFINITY;
      while (i < env.size() && (env[i] - mean) / sd > options.z_threshold) {
        peak = std::max(peak, (env[i] - mean) / sd);
        ++i;
      }
      a.end_sample = i;
      a.zscore_peak = peak;
      out.push_back(std::move(a));
    }
  }
  return out;
}

std::vector<ArtifactAnnotation> annotate_muscle_artifacts(const data::Recording& rec,
                                                          double z_threshold) {
  MuscleDetectorOptions o;
  o.z_threshold = z_threshold;
  return annotate_muscle_artifacts(rec, o);
}

std::vector<data::Marker> drop_annotated_epochs(std::span<const data::Marker> markers,
                                                std::size_t epoch_len,
                                                std::span<const ArtifactAnnotation> annotations) {
  std::vector<data::Marker> kept;
  for (const auto& m : markers) {
    const auto begin = m.start_sample, end = m.start_sample + epoch_len;
    const bool hit = std::any_of(annotations.begin(), annotations.end(), [&](const auto& a) {
      return a.start_sample < end && begin < a.end_sample;
    });
    if (!hit) kept.push_back(m);
  }
  return kept;
}

std::vector<data::Marker> drop_high_amplitude_epochs(const data::Recording& rec,
                                                     std::span<const data::Marker> markers,
                                                     std::size_t epoch_len, double max_abs) {
  std::vector<data::Marker> kept;
  for (const auto& m : markers) {
    if (m.start_sample + epoch_len > rec.n_samples()) {
      throw DataError("marker at " + std::to_string(m.start_sample) + " overruns recording");
    }
    bool ok = true;
    for (std::size_t c = 0; c < rec.n_channels() && ok; ++c) {
      for (double v : rec.samples().row(c).subspan(m.start_sample, epoch_len)) {
        if (std::abs(v) > max_abs) {
          ok = false;
          break;
        }
      }
    }
    if (ok) kept.push_back(m);
  }
  return kept;
}

void save_annotations(const std::filesystem::path& path,
                      std::span<const ArtifactAnnotation> annotations) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << "channel,start_sample,end_sample,kind,zscore_peak\n";
  f << std::setprecision(10);
  for (const auto& a : annotations) {
    f << a.channel << ',' << a.start_sample << ',' << a.end_sample << ',' << a.kind << ','
      << a.zscore_peak << '\n';
  }
}

}  // namespace eegdiff::dsp
