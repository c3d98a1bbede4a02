#include "eegdiff/data/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "eegdiff/bytes.hpp"
#include "eegdiff/errors.hpp"

namespace eegdiff::data {

namespace {

constexpr char kMagic[4] = {'E', 'E', 'G', 'B'};
constexpr std::uint16_t kVersion = 1;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw DataError(where + ": cannot parse '" + s + "' as a number");
  }
  if (used != s.size()) throw DataError(where + ": trailing characters in '" + s + "'");
  return v;
}

Recording load_eegb(const std::filesystem::path& path) {
  bytes::Reader r(bytes::read_file(path), path.string());
  auto magic = r.get_bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) r.fail("bad magic", 0);
  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version), 4);
  const auto n_channels = r.get<std::uint16_t>("n_channels");
  const auto n_samples = r.get<std::uint32_t>("n_samples");
  const auto fs = r.get<float>("sampling_rate_hz");
  if (!(fs > 0.0f) || !std::isfinite(fs)) r.fail("non-positive sampling rate", 12);
  if (n_channels == 0) r.fail("zero channels", 6);
  if (n_samples == 0) r.fail("zero samples", 8);

  ChannelNames names;
  for (std::uint16_t c = 0; c < n_channels; ++c) {
    const auto at = r.pos();
    const auto len = r.get<std::uint8_t>("channel name length");
    if (len == 0) r.fail("empty channel name", at);
    names.push_back(r.get_bytes(len, "channel name"));
  }
  const std::size_t total = static_cast<std::size_t>(n_channels) * n_samples;
  if (r.remaining() != total * sizeof(float)) {
    r.fail("channel-count mismatch: expected " + std::to_string(total * sizeof(float)) +
               " sample bytes, found " + std::to_string(r.remaining()),
           r.pos());
  }
  std::vector<double> values(total);
  for (std::size_t i = 0; i < total; ++i) {
    const auto at = r.pos();
    const float v = r.get<float>("sample");
    if (!std::isfinite(v)) r.fail("non-finite sample", at);
    values[i] = static_cast<double>(v);
  }
  try {
    return Recording(std::move(names), static_cast<double>(fs),
                     ChannelMatrix(n_channels, n_samples, std::move(values)));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Recording load_csv(const std::filesystem::path& path, std::optional<double> fs) {
  if (!fs || !(*fs > 0.0)) {
    throw DataError(path.string() + ": csv recordings need a positive sampling rate");
  }
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  auto header = split_csv_line(line);
  if (header.size() < 2) throw DataError(path.string() + ": header needs a time column and >= 1 channel");
  ChannelNames names(header.begin() + 1, header.end());
  std::vector<std::vector<double>> cols(names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    const std::string where = path.string() + " row " + std::to_string(row);
    if (cells.size() != header.size()) {
      throw DataError(where + ": channel-count mismatch (" + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(header.size()) + ")");
    }
    for (std::size_t c = 0; c < names.size(); ++c) {
      const double v = parse_double(cells[c + 1], where);
      if (!std::isfinite(v)) throw DataError(where + ": non-finite sample");
      cols[c].push_back(v);
    }
  }
  const std::size_t n = cols.empty() ? 0 : cols[0].size();
  if (n == 0) throw DataError(path.string() + ": no sample rows");
  ChannelMatrix m(names.size(), n);
  for (std::size_t c = 0; c < names.size(); ++c) std::copy(cols[c].begin(), cols[c].end(), m.row(c).begin());
  try {
    return Recording(std::move(names), *fs, std::move(m));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace

RecordingFormat parse_format(const std::string& name) {
  if (name == "eegb") return RecordingFormat::eegb;
  if (name == "csv") return RecordingFormat::csv;
  throw DataError("unknown recording format '" + name + "'");
}

void save_recording(const std::filesystem::path& path, const Recording& rec) {
  if (rec.n_channels() > UINT16_MAX) throw DataError("eegb: too many channels");
  if (rec.n_samples() > UINT32_MAX) throw DataError("eegb: too many samples");
  std::string out;
  out.reserve(16 + rec.n_channels() * (8 + rec.n_samples() * 4));
  out.append(kMagic, 4);
  bytes::put_le<std::uint16_t>(out, kVersion);
  bytes::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(rec.n_channels()));
  bytes::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rec.n_samples()));
  bytes::put_le<float>(out, static_cast<float>(rec.sampling_rate_hz()));
  for (const auto& n : rec.channel_names()) {
    if (n.empty() || n.size() > 255) throw DataError("eegb: channel name length out of range: '" + n + "'");
    bytes::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(n.size()));
    out += n;
  }
  for (double v : rec.samples().values()) bytes::put_le<float>(out, static_cast<float>(v));
  bytes::write_file(path, out);
}

Recording load_recording(const std::filesystem::path& path, RecordingFormat format,
                         std::optional<double> csv_sampling_rate_hz) {
  switch (format) {
    case RecordingFormat::eegb:
      return load_eegb(path);
    case RecordingFormat::csv:
      return load_csv(path, csv_sampling_rate_hz);
  }
  throw DataError("unknown format");
}

std::vector<Marker> load_markers(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty marker file");
  auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "start_sample" || header[1] != "label") {
    throw DataError(path.string() + ": marker header must be 'start_sample,label'");
  }
  std::vector<Marker> markers;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    const std::string where = path.string() + " row " + std::to_string(row);
    if (cells.size() != 2) throw DataError(where + ": expected 2 columns");
    const double start = parse_double(cells[0], where);
    const double label = parse_double(cells[1], where);
    if (start < 0 || start != std::floor(start) || label < 0 || label != std::floor(label)) {
      throw DataError(where + ": start_sample and label must be non-negative integers");
    }
    markers.push_back({static_cast<std::size_t>(start), static_cast<int>(label)});
  }
  return markers;
}

void save_markers(const std::filesystem::path& path, std::span<const Marker> markers) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << "start_sample,label\n";
  for (const auto& m : markers) f << m.start_sample << ',' << m.label << '\n';
}

}  // namespace eegdiff::data
