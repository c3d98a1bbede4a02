#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace eegdiff::data {

// Dense row-major [rows x cols] block of samples. Rows are channels.
class ChannelMatrix {
 public:
  ChannelMatrix() = default;
  ChannelMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  ChannelMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<double>& values() const { return data_; }
  std::vector<double>& values() { return data_; }

  bool operator==(const ChannelMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using ChannelNames = std::vector<std::string>;

// Multichannel EEG time series. Immutable after construction.
class Recording {
 public:
  Recording(ChannelNames channel_names, double sampling_rate_hz, ChannelMatrix samples,
            std::string subject_id = {}, std::string session_id = {});

  const ChannelNames& channel_names() const { return *names_; }
  const std::shared_ptr<const ChannelNames>& shared_channel_names() const { return names_; }
  double sampling_rate_hz() const { return fs_; }
  const ChannelMatrix& samples() const { return samples_; }
  std::size_t n_channels() const { return samples_.rows(); }
  std::size_t n_samples() const { return samples_.cols(); }
  const std::string& subject_id() const { return subject_; }
  const std::string& session_id() const { return session_; }

  // Index of a channel label; throws DataError if absent.
  std::size_t channel_index(const std::string& name) const;

  // Same metadata, new sample block of identical shape.
  Recording with_samples(ChannelMatrix samples) const;

 private:
  std::shared_ptr<const ChannelNames> names_;
  double fs_;
  ChannelMatrix samples_;
  std::string subject_;
  std::string session_;
};

struct EpochSource {
  std::string subject_id;
  std::string session_id;
  std::size_t start_sample = 0;
};

// Fixed-length labeled segment [n_channels x epoch_len].
struct Epoch {
  ChannelMatrix samples;
  int label = 0;
  EpochSource source;
  std::shared_ptr<const ChannelNames> channel_names;

  std::size_t channel_index(const std::string& name) const;
};

struct Marker {
  std::size_t start_sample = 0;
  int label = 0;
};

// Samples per epoch for a 1 s window.
std::size_t epoch_length(double sampling_rate_hz);

// One Epoch per marker, samples copied from [start, start + epoch_len).
std::vector<Epoch> segment_epochs(const Recording& rec, std::span<const Marker> markers,
                                  std::size_t epoch_len);

// Concatenate equally shaped epochs back into a continuous recording; the
// returned markers point at each epoch's start.
std::pair<Recording, std::vector<Marker>> concatenate_epochs(std::span<const Epoch> epochs,
                                                             double sampling_rate_hz);

int count_classes(std::span<const Epoch> epochs);

}  // namespace eegdiff::data
