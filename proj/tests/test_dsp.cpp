#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "eegdiff/data/recording.hpp"
#include "eegdiff/dsp/filter.hpp"
#include "eegdiff/dsp/preprocess.hpp"
#include "eegdiff/errors.hpp"
#include "eegdiff/rng.hpp"

using namespace eegdiff;
using namespace eegdiff::dsp;
using data::ChannelMatrix;
using data::Recording;

namespace {

constexpr double kFs = 512.0;

Recording single_channel(const std::vector<double>& x, double fs = kFs) {
  return Recording({"C3"}, fs, ChannelMatrix(1, x.size(), x));
}

std::vector<double> sine(double hz, std::size_t n, double amp = 1.0, double fs = kFs) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * M_PI * hz * i / fs);
  return x;
}

double rms(std::span<const double> x, std::size_t skip) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = skip; i + skip < x.size(); ++i, ++n) s += x[i] * x[i];
  return std::sqrt(s / n);
}

// Squared magnitude of an analog Butterworth band-pass prototype of order N
// (band-pass order 2N) after prewarping the band edges, evaluated at the
// digital frequency hz. Forward-backward filtering applies this gain twice.
double butterworth_power_gain(double hz, double lo, double hi, int bandpass_order, double fs) {
  auto warp = [&](double f) { return 2.0 * fs * std::tan(M_PI * f / fs); };
  const double wl = warp(lo), wh = warp(hi), w = warp(hz);
  const double w0sq = wl * wh, bw = wh - wl;
  const double ratio = (w * w - w0sq) / (w * bw);
  return 1.0 / (1.0 + std::pow(ratio, bandpass_order));
}

}  // namespace

TEST_CASE("band-pass spec validation") {
  BandpassSpec s;
  CHECK_NOTHROW(s.validate());
  s.high_hz = 300.0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("high_hz"), std::invalid_argument);
  s = BandpassSpec{};
  s.order = 3;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = BandpassSpec{};
  s.low_hz = 40.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("designed response matches the analytic Butterworth magnitude") {
  for (int order : {2, 4, 6}) {
    BandpassSpec spec{8.0, 30.0, order, kFs};
    auto f = design_butterworth_bandpass(spec);
    CHECK(f.order() == order);
    for (double hz : {1.0, 4.0, 8.0, 12.0, 20.0, 30.0, 45.0, 100.0, 200.0}) {
      const double w = 2.0 * M_PI * hz / kFs;
      const double got = std::norm(f.response(w));
      const double want = butterworth_power_gain(hz, 8.0, 30.0, 2 * (order / 2), kFs);
      CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("20 Hz tone passes within 5 percent") {
  auto x = sine(20.0, 4096);
  auto y = butterworth_bandpass(single_channel(x), BandpassSpec{});
  const double gain = butterworth_power_gain(20.0, 8.0, 30.0, 4, kFs);
  const double ratio = rms(y.samples().row(0), 512) / rms(x, 512);
  CHECK(ratio == doctest::Approx(gain).epsilon(1e-3));
  CHECK(std::abs(ratio - 1.0) < 0.05);
}

TEST_CASE("2 Hz tone and DC are rejected") {
  auto x = sine(2.0, 4096);
  auto y = butterworth_bandpass(single_channel(x), BandpassSpec{});
  CHECK(rms(y.samples().row(0), 512) < 0.05 * rms(x, 512));

  std::vector<double> dc(4096, 1.0);
  auto z = butterworth_bandpass(single_channel(dc), BandpassSpec{});
  // 40 dB = amplitude factor 0.01
  CHECK(rms(z.samples().row(0), 512) < 0.01);
  CHECK(butterworth_power_gain(1e-6, 8.0, 30.0, 4, kFs) < 1e-4);
}

TEST_CASE("zero in, zero out; shape preserved") {
  std::vector<double> zeros(700, 0.0);
  auto y = butterworth_bandpass(single_channel(zeros), BandpassSpec{});
  CHECK(y.n_samples() == 700);
  for (double v : y.samples().values()) CHECK(v == 0.0);
  std::vector<double> tiny(12, 1.0);
  CHECK_THROWS_AS(butterworth_bandpass(single_channel(tiny), BandpassSpec{}), std::invalid_argument);
}

TEST_CASE("filtering is linear") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x(1024), y(1024), mix(1024);
    const double a = rng.normal(), b = rng.normal();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal();
      y[i] = rng.normal();
      mix[i] = a * x[i] + b * y[i];
    }
    auto f = design_butterworth_bandpass(BandpassSpec{});
    auto fx = filtfilt(f, x), fy = filtfilt(f, y), fm = filtfilt(f, mix);
    double scale = 0.0;
    for (double v : fm) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(fm[i] - (a * fx[i] + b * fy[i])) <= 1e-6 * scale);
  }
}

TEST_CASE("filtering is zero phase") {
  // narrow-band tone with a Hann taper
  const std::size_t n = 2048;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (n - 1));
    x[i] = w * (std::sin(2.0 * M_PI * 15.0 * i / kFs) + 0.5 * std::sin(2.0 * M_PI * 22.0 * i / kFs));
  }
  auto y = filtfilt(design_butterworth_bandpass(BandpassSpec{}), x);
  int best_lag = 0;
  double best = -1e300;
  for (int lag = -40; lag <= 40; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<long>(i) + lag;
      if (j >= 0 && j < static_cast<long>(n)) c += x[i] * y[static_cast<std::size_t>(j)];
    }
    if (c > best) {
      best = c;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
}

TEST_CASE("zscore_channels: hand example, idempotence, constant channel") {
  auto z = zscore_channels(single_channel({1.0, 2.0, 3.0}));
  const double s = std::sqrt(1.5);  // 1 / sqrt(2/3)
  CHECK(z.samples()(0, 0) == doctest::Approx(-s).epsilon(1e-12));
  CHECK(std::abs(z.samples()(0, 1)) < 1e-12);
  CHECK(z.samples()(0, 2) == doctest::Approx(s).epsilon(1e-12));

  Rng rng(8);
  ChannelMatrix m(3, 500);
  for (auto& v : m.values()) v = 40.0 + 13.0 * rng.normal();
  Recording rec({"A", "B", "C"}, kFs, m);
  auto once = zscore_channels(rec);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0;
    for (double v : once.samples().row(c)) mean += v;
    mean /= 500.0;
    for (double v : once.samples().row(c)) var += (v - mean) * (v - mean);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var / 500.0) - 1.0) < 1e-9);
  }
  auto twice = zscore_channels(once);
  for (std::size_t i = 0; i < m.values().size(); ++i)
    CHECK(std::abs(twice.samples().values()[i] - once.samples().values()[i]) < 1e-9);

  Recording flat({"A", "Flat"}, kFs, ChannelMatrix(2, 3, {1.0, 2.0, 3.0, 5.0, 5.0, 5.0}));
  CHECK_THROWS_WITH_AS(zscore_channels(flat), doctest::Contains("Flat"), std::invalid_argument);
}

TEST_CASE("moving average with shrinking edges") {
  std::vector<double> x{1, 2, 3, 4, 5};
  auto y = moving_average(x, 3);
  CHECK(y[0] == doctest::Approx(1.5));
  CHECK(y[2] == doctest::Approx(3.0));
  CHECK(y[4] == doctest::Approx(4.5));
}

namespace {

Recording burst_fixture(bool with_burst) {
  Rng rng(17);
  const std::size_t n = 5120;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * M_PI * 10.0 * i / kFs) + 0.1 * rng.normal();
  if (with_burst) {
    const auto len = static_cast<std::size_t>(0.2 * kFs);
    for (std::size_t i = 1000; i < 1000 + len; ++i) x[i] += 1.0 * rng.normal();  // 10x the noise floor
  }
  return single_channel(x);
}

}  // namespace

TEST_CASE("muscle annotation: clean signal, burst, preconditions") {
  CHECK(annotate_muscle_artifacts(burst_fixture(false), 4.0).empty());

  auto ann = annotate_muscle_artifacts(burst_fixture(true), 4.0);
  REQUIRE(ann.size() == 1);
  const std::size_t burst_end = 1000 + static_cast<std::size_t>(0.2 * kFs);
  CHECK(ann[0].start_sample < burst_end);
  CHECK(ann[0].end_sample > 1000);
  CHECK(ann[0].start_sample < ann[0].end_sample);
  CHECK(ann[0].kind == "muscle");
  CHECK(ann[0].zscore_peak > 4.0);
  CHECK(ann[0].channel == "C3");

  CHECK_THROWS_AS(annotate_muscle_artifacts(burst_fixture(true), 0.0), std::invalid_argument);
  std::vector<double> slow(1000, 0.0);
  slow[3] = 1.0;
  CHECK_THROWS_AS(annotate_muscle_artifacts(single_channel(slow, 256.0), 4.0), std::invalid_argument);
}

TEST_CASE("muscle annotations are sorted and non-overlapping per channel") {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 4096;
    ChannelMatrix m(2, n);
    for (auto& v : m.values()) v = rng.normal();
    for (int b = 0; b < 4; ++b) {
      const auto ch = rng.below(2), at = rng.below(n - 200), len = 20 + rng.below(150);
      for (std::size_t i = at; i < at + len; ++i) m(ch, i) += 8.0 * rng.normal();
    }
    Recording rec({"A", "B"}, kFs, m);
    auto ann = annotate_muscle_artifacts(rec, 2.5);
    for (std::size_t i = 0; i < ann.size(); ++i) {
      CHECK(ann[i].start_sample < ann[i].end_sample);
      CHECK(ann[i].end_sample <= n);
      if (i > 0 && ann[i].channel == ann[i - 1].channel) CHECK(ann[i - 1].end_sample < ann[i].start_sample);
    }
  }
}

TEST_CASE("epoch rejection by annotations and amplitude") {
  std::vector<data::Marker> markers{{0, 0}, {512, 1}, {1024, 2}};
  std::vector<ArtifactAnnotation> ann{{"C3", 600, 700, "muscle", 5.0}};
  auto kept = drop_annotated_epochs(markers, 512, ann);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].start_sample == 0);
  CHECK(kept[1].start_sample == 1024);

  std::vector<double> x(1536, 1.0);
  x[1100] = 500.0;
  auto amp = drop_high_amplitude_epochs(single_channel(x), markers, 512, 100.0);
  REQUIRE(amp.size() == 2);
  CHECK(amp[1].start_sample == 512);
}

TEST_CASE("annotation csv export") {
  const auto p = std::filesystem::temp_directory_path() / "eegdiff_annotations.csv";
  std::vector<ArtifactAnnotation> ann{{"C3", 10, 20, "muscle", 4.5}};
  save_annotations(p, ann);
  std::ifstream in(p);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "channel,start_sample,end_sample,kind,zscore_peak");
  CHECK(row.rfind("C3,10,20,muscle,4.5", 0) == 0);
}
