#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "eegdiff/data/recording.hpp"
#include "eegdiff/pipeline/config.hpp"

namespace eegdiff::pipeline {

enum class Stage { synth_data, preprocess, train_ddpm, train_wgan, generate, evaluate, classify, report };

// Throws std::invalid_argument on an unknown name.
Stage parse_stage(const std::string& name);
std::string stage_name(Stage s);
const std::vector<Stage>& all_stages();

using Logger = std::function<void(const std::string&)>;
void log_to_stderr(const std::string& line);

// Artifact locations derived from the configured directories.
struct Layout {
  explicit Layout(const PipelineConfig& c);
  std::filesystem::path raw_recording, raw_markers;
  std::filesystem::path preprocessed, markers, annotations, split;
  std::filesystem::path checkpoints, reports, figures, manifest;
  std::filesystem::path evaluation_json, classification_json;

  std::filesystem::path generated(const std::string& method) const;
  std::filesystem::path checkpoint(const std::string& method, const std::string& target) const;
  std::filesystem::path reconstruction_csv(const std::string& method) const;
  std::filesystem::path classification_csv() const { return reports / "classification.csv"; }
  std::filesystem::path comparisons_csv() const { return reports / "comparisons.csv"; }
  std::filesystem::path report_json() const { return reports / "report.json"; }

 private:
  std::filesystem::path work_;
};

// Runs one stage to completion. Inputs are checked before any work starts;
// the effective config goes to <report_dir>/config_<stage>.toml and every
// written file is hashed into <report_dir>/manifest.json.
void run_stage(Stage stage, const PipelineConfig& config, const Logger& log = log_to_stderr);

// Preprocessed epochs as written by the preprocess stage.
std::vector<data::Epoch> load_preprocessed_epochs(const PipelineConfig& config);

}  // namespace eegdiff::pipeline
