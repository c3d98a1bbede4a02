#include "eegdiff/pipeline/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "eegdiff/dsp/preprocess.hpp"
#include "eegdiff/errors.hpp"

namespace eegdiff::pipeline {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<double> smoothed(std::span<const double> x, std::size_t window) {
  if (window <= 1) return {x.begin(), x.end()};
  return dsp::moving_average(x, window);
}

void write_svg(const fs::path& path, const std::string& channel, std::span<const double> t,
               std::span<const double> real, std::span<const double> synth, const std::string& provenance) {
  constexpr double W = 900, H = 240, pad = 30;
  double lo = std::min(*std::min_element(real.begin(), real.end()), *std::min_element(synth.begin(), synth.end()));
  double hi = std::max(*std::max_element(real.begin(), real.end()), *std::max_element(synth.begin(), synth.end()));
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double t0 = t.front(), t1 = t.size() > 1 ? t.back() : t.front() + 1.0;
  auto polyline = [&](std::span<const double> y) {
    std::string pts;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double px = pad + (W - 2 * pad) * (t[i] - t0) / (t1 - t0);
      const double py = H - pad - (H - 2 * pad) * (y[i] - lo) / (hi - lo);
      pts += num(px) + "," + num(py) + " ";
    }
    return pts;
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n"
      << "<!-- provenance: " << provenance << " -->\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << pad << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << channel << " ("
      << num(t0) << "-" << num(t1) << " s): real solid, synthetic dashed</text>\n"
      << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"" << polyline(real) << "\"/>\n"
      << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" stroke-dasharray=\"4 2\" points=\""
      << polyline(synth) << "\"/>\n"
      << "</svg>\n";
}

}  // namespace

ComparisonExport export_signal_comparison(const data::Recording& real, const data::Recording& synthetic,
                                          const std::vector<std::string>& channels, SignalWindow window,
                                          double smoothing_s, const fs::path& out_dir, const std::string& prefix,
                                          const std::string& provenance) {
  const double fs_hz = real.sampling_rate_hz();
  if (synthetic.sampling_rate_hz() != fs_hz || synthetic.n_samples() != real.n_samples()) {
    throw DataError("signal comparison: recordings differ in rate or length");
  }
  if (!(window.start_s >= 0.0) || !(window.end_s > window.start_s)) {
    throw std::invalid_argument("signal comparison: window must satisfy 0 <= start < end");
  }
  const auto begin = static_cast<std::size_t>(std::llround(window.start_s * fs_hz));
  const auto end = static_cast<std::size_t>(std::llround(window.end_s * fs_hz));
  if (end > real.n_samples()) {
    throw std::invalid_argument("signal comparison: window ends at " + num(window.end_s) + " s, recording is " +
                                num(static_cast<double>(real.n_samples()) / fs_hz) + " s long");
  }
  if (smoothing_s < 0.0) throw std::invalid_argument("signal comparison: negative smoothing");
  const auto smooth = static_cast<std::size_t>(std::llround(smoothing_s * fs_hz));

  fs::create_directories(out_dir);
  ComparisonExport result;
  std::vector<double> t(end - begin);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(begin + i) / fs_hz;
  for (const auto& ch : channels) {
    const auto r = smoothed(real.samples().row(real.channel_index(ch)), smooth);
    const auto s = smoothed(synthetic.samples().row(synthetic.channel_index(ch)), smooth);
    const std::span<const double> rw(r.data() + begin, end - begin), sw(s.data() + begin, end - begin);

    const auto csv = out_dir / (prefix + "_" + ch + ".csv");
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw DataError("cannot write " + csv.string());
    out << "time_s,real,synthetic\n";
    char line[96];
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g\n", t[i], rw[i], sw[i]);
      out << line;
    }
    out.close();
    result.csv_files.push_back(csv);

    const auto svg = out_dir / (prefix + "_" + ch + ".svg");
    write_svg(svg, ch, t, rw, sw, provenance);
    result.svg_files.push_back(svg);
  }
  return result;
}

}  // namespace eegdiff::pipeline
