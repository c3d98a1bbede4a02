#include "eegdiff/data/recording.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "eegdiff/errors.hpp"

namespace eegdiff::data {

ChannelMatrix::ChannelMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("ChannelMatrix: " + std::to_string(data_.size()) +
                                " values for shape " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

Recording::Recording(ChannelNames channel_names, double sampling_rate_hz, ChannelMatrix samples,
                     std::string subject_id, std::string session_id)
    : names_(std::make_shared<const ChannelNames>(std::move(channel_names))),
      fs_(sampling_rate_hz),
      samples_(std::move(samples)),
      subject_(std::move(subject_id)),
      session_(std::move(session_id)) {
  if (names_->size() != samples_.rows()) {
    throw DataError("recording: " + std::to_string(names_->size()) + " channel names for " +
                    std::to_string(samples_.rows()) + " channels");
  }
  if (!(fs_ > 0.0) || !std::isfinite(fs_)) {
    throw DataError("recording: sampling rate must be positive");
  }
  if (samples_.cols() == 0) throw DataError("recording: no samples");
  std::set<std::string> seen;
  for (const auto& n : *names_) {
    if (!seen.insert(n).second) throw DataError("recording: duplicate channel name '" + n + "'");
  }
}

std::size_t Recording::channel_index(const std::string& name) const {
  auto it = std::find(names_->begin(), names_->end(), name);
  if (it == names_->end()) throw DataError("channel '" + name + "' not in recording");
  return static_cast<std::size_t>(it - names_->begin());
}

Recording Recording::with_samples(ChannelMatrix samples) const {
  if (samples.rows() != samples_.rows() || samples.cols() != samples_.cols()) {
    throw std::invalid_argument("with_samples: shape mismatch");
  }
  Recording out = *this;
  out.samples_ = std::move(samples);
  return out;
}

std::size_t Epoch::channel_index(const std::string& name) const {
  if (!channel_names) throw DataError("epoch has no channel names");
  auto it = std::find(channel_names->begin(), channel_names->end(), name);
  if (it == channel_names->end()) throw DataError("channel '" + name + "' not in epoch");
  return static_cast<std::size_t>(it - channel_names->begin());
}

std::size_t epoch_length(double sampling_rate_hz) {
  if (!(sampling_rate_hz > 0.0)) throw std::invalid_argument("epoch_length: sampling rate <= 0");
  return static_cast<std::size_t>(std::llround(sampling_rate_hz * 1.0));
}

std::vector<Epoch> segment_epochs(const Recording& rec, std::span<const Marker> markers,
                                  std::size_t epoch_len) {
  if (epoch_len == 0) throw std::invalid_argument("segment_epochs: epoch_len must be > 0");
  std::vector<Epoch> out;
  out.reserve(markers.size());
  const auto& src = rec.samples();
  for (std::size_t m = 0; m < markers.size(); ++m) {
    const auto start = markers[m].start_sample;
    if (start + epoch_len > rec.n_samples()) {
      throw DataError("marker " + std::to_string(m) + " (start " + std::to_string(start) +
                      " + " + std::to_string(epoch_len) + ") overruns recording of " +
                      std::to_string(rec.n_samples()) + " samples");
    }
    if (markers[m].label < 0) {
      throw DataError("marker " + std::to_string(m) + " has negative label");
    }
    Epoch e;
    e.samples = ChannelMatrix(rec.n_channels(), epoch_len);
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
      auto from = src.row(c).subspan(start, epoch_len);
      std::copy(from.begin(), from.end(), e.samples.row(c).begin());
    }
    e.label = markers[m].label;
    e.source = {rec.subject_id(), rec.session_id(), start};
    e.channel_names = rec.shared_channel_names();
    out.push_back(std::move(e));
  }
  return out;
}

std::pair<Recording, std::vector<Marker>> concatenate_epochs(std::span<const Epoch> epochs,
                                                             double sampling_rate_hz) {
  if (epochs.empty()) throw std::invalid_argument("concatenate_epochs: no epochs");
  const auto rows = epochs.front().samples.rows();
  const auto len = epochs.front().samples.cols();
  ChannelMatrix all(rows, len * epochs.size());
  std::vector<Marker> markers;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& e = epochs[i];
    if (e.samples.rows() != rows || e.samples.cols() != len) {
      throw std::invalid_argument("concatenate_epochs: epoch " + std::to_string(i) +
                                  " has a different shape");
    }
    for (std::size_t c = 0; c < rows; ++c) {
      auto from = e.samples.row(c);
      std::copy(from.begin(), from.end(), all.row(c).begin() + static_cast<long>(i * len));
    }
    markers.push_back({i * len, e.label});
  }
  const auto& first = epochs.front();
  Recording rec(first.channel_names ? *first.channel_names : ChannelNames{}, sampling_rate_hz,
                std::move(all), first.source.subject_id, first.source.session_id);
  return {std::move(rec), std::move(markers)};
}

int count_classes(std::span<const Epoch> epochs) {
  int n = 0;
  for (const auto& e : epochs) n = std::max(n, e.label + 1);
  return n;
}

}  // namespace eegdiff::data
