#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>

#include "doctest.h"
#include "eegdiff/bytes.hpp"
#include "eegdiff/data/io.hpp"
#include "eegdiff/data/montage.hpp"
#include "eegdiff/data/recording.hpp"
#include "eegdiff/data/split.hpp"
#include "eegdiff/data/synthetic.hpp"
#include "eegdiff/errors.hpp"
#include "eegdiff/rng.hpp"

using namespace eegdiff;
using namespace eegdiff::data;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "eegdiff_test_data";
  fs::create_directories(dir);
  return dir / name;
}

Recording ramp_recording(std::size_t channels, std::size_t samples) {
  ChannelNames names;
  for (std::size_t c = 0; c < channels; ++c) names.push_back("X" + std::to_string(c));
  ChannelMatrix m(channels, samples);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < samples; ++i) m(c, i) = static_cast<double>(c * 10000 + i);
  return Recording(names, 512.0, m, "s1", "r1");
}

// Brute-force DFT power at integer frequency bins of a 1 s, 512 Hz signal.
std::vector<double> periodogram(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> p(n / 2 + 1, 0.0);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      re += x[t] * std::cos(2.0 * M_PI * k * t / n);
      im -= x[t] * std::sin(2.0 * M_PI * k * t / n);
    }
    p[k] = (re * re + im * im) / n;
  }
  return p;
}

}  // namespace

TEST_CASE("eegb round trip preserves shape, names and samples") {
  ChannelMatrix m(2, 4, {0.5, -1.25, 3.0, 1e-3, 7.0, 8.0, -9.5, 0.0});
  Recording rec({"C3", "C4"}, 512.0, m);
  const auto p = temp_path("two_by_four.eegb");
  save_recording(p, rec);
  auto back = load_recording(p, RecordingFormat::eegb);
  CHECK(back.channel_names() == ChannelNames{"C3", "C4"});
  CHECK(back.n_channels() == 2);
  CHECK(back.n_samples() == 4);
  CHECK(back.sampling_rate_hz() == 512.0);
  for (std::size_t i = 0; i < 8; ++i) CHECK(back.samples().values()[i] == static_cast<float>(m.values()[i]));
}

TEST_CASE("eegb round trip is bit exact for f32-representable data (randomised)") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ch = 1 + rng.below(6);
    const auto n = 1 + rng.below(300);
    ChannelNames names;
    for (std::size_t c = 0; c < ch; ++c) names.push_back("Ch" + std::to_string(c));
    ChannelMatrix m(ch, n);
    for (auto& v : m.values()) v = static_cast<float>(rng.normal() * 50.0);
    Recording rec(names, 256.0 + trial, m);
    const auto p = temp_path("rand.eegb");
    save_recording(p, rec);
    auto back = load_recording(p, RecordingFormat::eegb);
    REQUIRE(back.samples() == rec.samples());
    REQUIRE(back.channel_names() == names);
    const auto first = bytes::read_file(p);
    save_recording(p, back);
    REQUIRE(bytes::read_file(p) == first);
  }
}

TEST_CASE("csv import uses the header for channel names and ignores the time column") {
  const auto p = temp_path("three_rows.csv");
  {
    std::ofstream f(p);
    f << "t,C3,C4\n0,1.5,2\n1,2.5,3\n2,3.5,4\n";
  }
  auto rec = load_recording(p, RecordingFormat::csv, 512.0);
  CHECK(rec.channel_names() == ChannelNames{"C3", "C4"});
  CHECK(rec.n_samples() == 3);
  CHECK(rec.samples()(0, 2) == 3.5);
  CHECK(rec.samples()(1, 0) == 2.0);
  CHECK(rec.sampling_rate_hz() == 512.0);
}

TEST_CASE("csv import rejects bad rows and a missing sampling rate") {
  const auto p = temp_path("bad.csv");
  {
    std::ofstream f(p);
    f << "t,C3,C4\n0,1,2\n1,nan,3\n";
  }
  CHECK_THROWS_WITH_AS(load_recording(p, RecordingFormat::csv, 512.0), doctest::Contains("row 3"), DataError);
  {
    std::ofstream f(p);
    f << "t,C3,C4\n0,1,2\n1,2\n";
  }
  CHECK_THROWS_WITH_AS(load_recording(p, RecordingFormat::csv, 512.0),
                       doctest::Contains("channel-count mismatch"), DataError);
  CHECK_THROWS_AS(load_recording(p, RecordingFormat::csv), DataError);
}

TEST_CASE("eegb rejects corrupted magic and truncated data") {
  const auto p = temp_path("corrupt.eegb");
  save_recording(p, ramp_recording(2, 4));
  auto bytes = [&] {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();
  auto write = [&](const std::string& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << b;
  };
  auto bad = bytes;
  bad[1] = 'X';
  write(bad);
  CHECK_THROWS_WITH_AS(load_recording(p, RecordingFormat::eegb), doctest::Contains("bad magic"), DataError);
  write(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_WITH_AS(load_recording(p, RecordingFormat::eegb), doctest::Contains("byte"), DataError);
  // a NaN sample is reported with its offset
  auto nan_bytes = bytes;
  const float nan = std::nanf("");
  std::memcpy(nan_bytes.data() + nan_bytes.size() - 4, &nan, 4);
  write(nan_bytes);
  CHECK_THROWS_WITH_AS(load_recording(p, RecordingFormat::eegb), doctest::Contains("non-finite sample"),
                       DataError);
}

TEST_CASE("recording invariants") {
  CHECK_THROWS_AS(Recording({"A", "A"}, 512.0, ChannelMatrix(2, 3)), DataError);
  CHECK_THROWS_AS(Recording({"A"}, 512.0, ChannelMatrix(2, 3)), DataError);
  CHECK_THROWS_AS(Recording({"A"}, 0.0, ChannelMatrix(1, 3)), DataError);
  CHECK_THROWS_AS(Recording({"A"}, 512.0, ChannelMatrix(1, 0)), DataError);
}

TEST_CASE("segment_epochs copies the marked windows") {
  auto rec = ramp_recording(1, 1024);
  std::vector<Marker> markers{{0, 0}, {512, 1}};
  auto epochs = segment_epochs(rec, markers, 512);
  REQUIRE(epochs.size() == 2);
  for (std::size_t i = 0; i < 512; ++i) {
    CHECK(epochs[0].samples(0, i) == rec.samples()(0, i));
    CHECK(epochs[1].samples(0, i) == rec.samples()(0, 512 + i));
  }
  CHECK(epochs[1].label == 1);
  CHECK(epochs[1].source.start_sample == 512);

  SUBCASE("output does not alias the recording") {
    epochs[0].samples(0, 0) = -123.0;
    CHECK(rec.samples()(0, 0) == 0.0);
  }
}

TEST_CASE("segment_epochs bounds and shapes") {
  auto short_rec = ramp_recording(1, 600);
  std::vector<Marker> m{{200, 2}};
  CHECK_THROWS_WITH_AS(segment_epochs(short_rec, m, 512), doctest::Contains("marker 0"), DataError);

  auto wide = ramp_recording(32, 2048);
  std::vector<Marker> four{{0, 0}, {400, 1}, {1000, 2}, {1536, 3}};
  auto epochs = segment_epochs(wide, four, 512);
  REQUIRE(epochs.size() == 4);
  for (const auto& e : epochs) {
    CHECK(e.samples.rows() == 32);
    CHECK(e.samples.cols() == 512);
  }
  CHECK(epoch_length(512.0) == 512);
}

TEST_CASE("default adjacency table is the eight reconstruction rows") {
  const auto t = AdjacencyTable::standard();
  const std::vector<AdjacencyEntry> expected{
      {"AF3", {"Fp1", "F3"}}, {"AF4", {"Fp2", "F4"}}, {"F7", {"FC5", "F3"}}, {"F8", {"T8", "F4"}},
      {"Fp1", {"AF3", "F3"}}, {"Fp2", {"AF4", "F4"}}, {"T7", {"C3", "CP1"}}, {"T8", {"C4", "CP2"}},
  };
  CHECK(t.entries() == expected);
  CHECK(montage_channels().size() == 32);
  for (const auto& name : montage_channels()) CHECK(montage_position(name).has_value());
  CHECK_THROWS_AS(AdjacencyTable({{"AF3", {"Fp1", "Nope"}}}), DataError);
  CHECK_THROWS_AS(AdjacencyTable({{"AF3", {"Fp1", "F3"}}, {"AF3", {"Fp2", "F4"}}}), DataError);
}

TEST_CASE("split_dataset: 10 epochs, two classes") {
  std::vector<int> labels{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  auto s = split_dataset(std::span<const int>(labels), 0.7, 1);
  CHECK(s.train_indices.size() == 7);
  CHECK(s.test_indices.size() == 3);
  std::map<int, int> per_class;
  for (auto i : s.train_indices) per_class[labels[i]]++;
  for (auto [c, n] : per_class) CHECK(std::abs(n - 3.5) <= 1.0);

  auto again = split_dataset(std::span<const int>(labels), 0.7, 1);
  CHECK(again.train_indices == s.train_indices);
  CHECK(again.test_indices == s.test_indices);
}

TEST_CASE("split_dataset: 4 x 25 gives 17 or 18 train epochs per class") {
  std::vector<int> labels;
  for (int c = 0; c < 4; ++c) labels.insert(labels.end(), 25, c);
  // Largest remainder by hand: quotas 17.5 each, floors sum to 68, the two
  // remaining seats of the 70 go to classes 0 and 1 (tie -> lower id).
  const std::vector<std::size_t> expected{18, 18, 17, 17};
  const std::vector<std::size_t> counts{25, 25, 25, 25};
  CHECK(largest_remainder_allocation(counts, 0.7) == expected);

  auto s = split_dataset(std::span<const int>(labels), 0.7, 99);
  std::map<int, std::size_t> per_class;
  for (auto i : s.train_indices) per_class[labels[i]]++;
  for (int c = 0; c < 4; ++c) CHECK(per_class[c] == expected[static_cast<std::size_t>(c)]);
}

TEST_CASE("split_dataset invariants on random label sets") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int classes = 1 + static_cast<int>(rng.below(5));
    std::vector<int> labels;
    for (int c = 0; c < classes; ++c) labels.insert(labels.end(), 2 + rng.below(30), c);
    rng.shuffle(labels.begin(), labels.end());
    const double frac = 0.7;
    auto s = split_dataset(std::span<const int>(labels), frac, trial);

    std::vector<int> seen(labels.size(), 0);
    for (auto i : s.train_indices) seen[i]++;
    for (auto i : s.test_indices) seen[i]++;
    CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
    CHECK(std::abs(static_cast<double>(s.train_indices.size()) - frac * labels.size()) <= 1.0);

    std::map<int, double> total, train;
    for (int l : labels) total[l]++;
    for (auto i : s.train_indices) train[labels[i]]++;
    for (auto [c, n] : total) CHECK(std::abs(train[c] - frac * n) <= 1.0);

    // permuting the input keeps the per-class counts
    auto shuffled = labels;
    rng.shuffle(shuffled.begin(), shuffled.end());
    auto s2 = split_dataset(std::span<const int>(shuffled), frac, trial);
    std::map<int, double> train2;
    for (auto i : s2.train_indices) train2[shuffled[i]]++;
    CHECK(train == train2);
  }
}

TEST_CASE("split_dataset preconditions") {
  std::vector<int> labels{0, 0, 1};
  CHECK_THROWS_WITH_AS(split_dataset(std::span<const int>(labels), 0.7, 1), doctest::Contains("class 1"),
                       std::invalid_argument);
  std::vector<int> ok{0, 0, 1, 1};
  CHECK_THROWS_AS(split_dataset(std::span<const int>(ok), 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(std::span<const int>(ok), 0.0, 1), std::invalid_argument);
}

TEST_CASE("synthetic dataset: counts, labels, shapes, determinism") {
  auto epochs = make_synthetic_dataset(2, 4, 4, 7);
  REQUIRE(epochs.size() == 8);
  CHECK(labels_of(epochs) == std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3});
  for (const auto& e : epochs) {
    CHECK(e.samples.rows() == 4);
    CHECK(e.samples.cols() == 512);
  }
  auto again = make_synthetic_dataset(2, 4, 4, 7);
  for (std::size_t i = 0; i < epochs.size(); ++i) CHECK(epochs[i].samples == again[i].samples);
  auto other = make_synthetic_dataset(2, 4, 4, 8);
  CHECK_FALSE(other[0].samples == epochs[0].samples);
  CHECK_THROWS_AS(make_synthetic_dataset(0, 4, 4, 7), std::invalid_argument);
}

TEST_CASE("synthetic dataset: class spectral peak at 8 + 2c Hz") {
  const int classes = 4;
  auto epochs = make_synthetic_dataset(10, classes, 32, 21);
  for (int c = 0; c < classes; ++c) {
    std::vector<double> mean_psd(257, 0.0);
    for (const auto& e : epochs) {
      if (e.label != c) continue;
      for (std::size_t ch = 0; ch < e.samples.rows(); ++ch) {
        auto p = periodogram(e.samples.row(ch));
        for (std::size_t k = 0; k < p.size(); ++k) mean_psd[k] += p[k];
      }
    }
    const auto peak = std::max_element(mean_psd.begin() + 1, mean_psd.end()) - mean_psd.begin();
    CHECK(std::abs(static_cast<double>(peak) - (8.0 + 2.0 * c)) <= 1.0);
  }
}
