#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eegdiff/diffusion/ddpm.hpp"
#include "eegdiff/dsp/filter.hpp"
#include "eegdiff/eval/classifiers.hpp"
#include "eegdiff/gan/wgan.hpp"

namespace eegdiff::pipeline {

struct PathsConfig {
  std::filesystem::path data_dir = "data";
  std::filesystem::path work_dir = "work";
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path report_dir = "reports";
};

struct DataConfig {
  std::string recording = "recording.eegb";  // relative to data_dir
  std::string markers = "markers.csv";
  std::string format = "eegb";
  double csv_sampling_rate_hz = 512.0;
  std::size_t epoch_length = 512;
  double train_fraction = 0.7;
  int synthetic_epochs_per_class = 50;
  int synthetic_classes = 4;
  int synthetic_channels = 32;
};

struct PreprocessConfig {
  dsp::BandpassSpec bandpass;
  bool annotate_muscle = true;
  double muscle_z_threshold = 4.0;
  double reject_max_abs = 10.0;  // z units; 0 disables
};

struct DiffusionSection {
  int T = 50;
  double beta_start = 0.002;
  double beta_end = 0.4;
  diffusion::UNetConfig unet;
  diffusion::DdpmTrainConfig train;
  diffusion::SamplerVariant variant = diffusion::SamplerVariant::stochastic;
  std::size_t sample_batch = 32;
  std::optional<std::uint64_t> seed;
};

struct GanSection {
  gan::GanConfig model;
  gan::GanTrainConfig train;
  std::optional<std::uint64_t> seed;
};

enum class HybridProtocol { hybrid, train_synthetic_test_real };

struct ClassifySection {
  std::vector<std::string> classifiers = eval::kClassifierNames;
  eval::ClassifierConfig models;
  int folds = 5;
  std::string method = "ddpm";
  HybridProtocol protocol = HybridProtocol::hybrid;
  std::optional<std::uint64_t> seed;
};

struct ExportSection {
  std::string method = "ddpm";
  std::vector<std::string> channels{"AF3", "AF4", "F7", "F8", "Fp1", "Fp2", "T7", "T8"};
  double window_start_s = 6.0;
  double window_end_s = 12.0;
  double smoothing_s = 0.05;
};

struct PipelineConfig {
  std::uint64_t seed = 2024;
  PathsConfig paths;
  DataConfig data;
  PreprocessConfig preprocess;
  DiffusionSection diffusion;
  GanSection gan;
  std::vector<std::string> methods{"ddpm", "wgan"};  // generate / evaluate
  ClassifySection classify;
  ExportSection export_;
};

// Defaults, then the TOML-style file (if any), then "key=value" overrides
// using dotted section.key names. Unknown keys and malformed values throw
// ConfigError naming the key. Relative paths resolve against base_dir.
PipelineConfig load_config(const std::optional<std::filesystem::path>& file,
                           const std::vector<std::string>& overrides,
                           const std::filesystem::path& base_dir = std::filesystem::current_path());

// Every key with its effective value, in TOML form.
std::string to_toml(const PipelineConfig& config);

// All configurable keys, dotted.
std::vector<std::string> config_keys();

std::string protocol_name(HybridProtocol p);

}  // namespace eegdiff::pipeline
