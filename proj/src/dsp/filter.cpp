#include "eegdiff/dsp/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace eegdiff::dsp {

using cd = std::complex<double>;

void BandpassSpec::validate() const {
  if (!(sampling_rate_hz > 0.0)) throw std::invalid_argument("bandpass: sampling_rate_hz must be > 0");
  if (order < 2 || order % 2 != 0) {
    throw std::invalid_argument("bandpass: order must be an even integer >= 2, got " + std::to_string(order));
  }
  if (!(low_hz > 0.0)) throw std::invalid_argument("bandpass: low_hz must be > 0");
  if (!(high_hz < sampling_rate_hz / 2.0)) {
    throw std::invalid_argument("bandpass: high_hz " + std::to_string(high_hz) +
                                " must be below Nyquist (" + std::to_string(sampling_rate_hz / 2.0) + ")");
  }
  if (!(low_hz < high_hz)) throw std::invalid_argument("bandpass: low_hz must be < high_hz");
}

void SosFilter::apply(std::span<double> x) const {
  for (const auto& s : sections_) {
    double z1 = 0.0, z2 = 0.0;  // transposed direct form II
    for (auto& v : x) {
      const double in = v;
      const double out = s.b[0] * in + z1;
      z1 = s.b[1] * in - s.a[0] * out + z2;
      z2 = s.b[2] * in - s.a[1] * out;
      v = out;
    }
  }
}

cd SosFilter::response(double w) const {
  const cd z1 = std::polar(1.0, -w);
  const cd z2 = z1 * z1;
  cd h = 1.0;
  for (const auto& s : sections_) {
    h *= (s.b[0] + s.b[1] * z1 + s.b[2] * z2) / (1.0 + s.a[0] * z1 + s.a[1] * z2);
  }
  return h;
}

SosFilter design_butterworth_bandpass(const BandpassSpec& spec) {
  spec.validate();
  const int n_proto = spec.order / 2;
  const double fs2 = 2.0 * spec.sampling_rate_hz;
  const double w1 = fs2 * std::tan(M_PI * spec.low_hz / spec.sampling_rate_hz);
  const double w2 = fs2 * std::tan(M_PI * spec.high_hz / spec.sampling_rate_hz);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);

  std::vector<cd> poles;
  for (int k = 0; k < n_proto; ++k) {
    const cd p = std::polar(1.0, M_PI * (2.0 * k + n_proto + 1) / (2.0 * n_proto));
    const cd a = p * bw / 2.0;
    const cd root = std::sqrt(a * a - w0 * w0);
    for (const cd s : {a + root, a - root}) poles.push_back((fs2 + s) / (fs2 - s));
  }

  // Pair conjugates; leftover real poles are paired in order.
  std::vector<std::pair<cd, cd>> pairs;
  std::vector<cd> upper, real;
  for (const auto& p : poles) {
    if (std::abs(p.imag()) < 1e-12) real.push_back(p);
    else if (p.imag() > 0) upper.push_back(p);
  }
  for (const auto& p : upper) pairs.emplace_back(p, std::conj(p));
  std::sort(real.begin(), real.end(), [](cd a, cd b) { return a.real() < b.real(); });
  for (std::size_t i = 0; i + 1 < real.size(); i += 2) pairs.emplace_back(real[i], real[i + 1]);

  std::vector<Biquad> sections;
  for (const auto& [p, q] : pairs) {
    Biquad s;
    s.b = {1.0, 0.0, -1.0};  // one zero at DC, one at Nyquist
    s.a = {-(p + q).real(), (p * q).real()};
    sections.push_back(s);
  }
  SosFilter f(std::move(sections));
  const double w_centre = 2.0 * std::atan(w0 / fs2);
  const double g = std::abs(f.response(w_centre));
  auto secs = f.sections();
  for (auto& b : secs.front().b) b /= g;
  return SosFilter(std::move(secs));
}

std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x) {
  const std::size_t pad = 3 * static_cast<std::size_t>(filter.order());
  const std::size_t n = x.size();
  if (n <= pad) {
    throw std::invalid_argument("filtfilt: need more than " + std::to_string(pad) + " samples, got " +
                                std::to_string(n));
  }
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * x[0] - x[pad - i];
    ext[n + pad + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<long>(pad));
  filter.apply(ext);
  std::reverse(ext.begin(), ext.end());
  filter.apply(ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<long>(pad), ext.begin() + static_cast<long>(pad + n)};
}

data::Recording butterworth_bandpass(const data::Recording& rec, const BandpassSpec& spec) {
  if (spec.sampling_rate_hz != rec.sampling_rate_hz()) {
    throw std::invalid_argument("bandpass: spec sampling rate does not match recording");
  }
  const auto filter = design_butterworth_bandpass(spec);
  data::ChannelMatrix out(rec.n_channels(), rec.n_samples());
  for (std::size_t c = 0; c < rec.n_channels(); ++c) {
    const auto y = filtfilt(filter, rec.samples().row(c));
    std::copy(y.begin(), y.end(), out.row(c).begin());
  }
  return rec.with_samples(std::move(out));
}

}  // namespace eegdiff::dsp
