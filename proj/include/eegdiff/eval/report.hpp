#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "eegdiff/data/montage.hpp"
#include "eegdiff/data/recording.hpp"
#include "eegdiff/eval/metrics.hpp"
#include "eegdiff/eval/stats.hpp"

namespace eegdiff::eval {

struct ChannelMetric {
  std::string target;
  std::array<std::string, 2> inputs;
  std::string method;  // "ddpm", "wgan", "mean_of_inputs"
  double mse = 0.0;    // mean over epochs
  double pcc = 0.0;    // mean over epochs
};

struct ClassifierMetric {
  std::string name;
  std::string dataset;  // "original", "synthetic", "hybrid"
  ClassificationScores scores;
  std::vector<double> fold_accuracies;
};

struct ComparisonMetric {
  std::string label;  // e.g. "knn: original vs hybrid"
  TTestResult test;
};

struct MetricReport {
  std::vector<ChannelMetric> per_channel;
  std::vector<ClassifierMetric> per_classifier;
  std::vector<ComparisonMetric> comparisons;
  int cv_folds = 0;
};

// Per-target mean MSE and PCC of reconstructed rows against the real ones.
std::vector<ChannelMetric> score_reconstruction(std::span<const data::Epoch> real,
                                                std::span<const data::Epoch> reconstructed,
                                                const data::AdjacencyTable& table, const std::string& method);
// The same scores for the pointwise mean of each target's two inputs.
std::vector<ChannelMetric> score_mean_of_inputs(std::span<const data::Epoch> real, const data::AdjacencyTable& table);

nlohmann::json to_json(const MetricReport& report);
void write_report_json(const std::filesystem::path& path, const MetricReport& report);
// target,input_1,input_2,method,mse,pcc
void write_channel_csv(const std::filesystem::path& path, std::span<const ChannelMetric> rows);
// classifier,dataset,accuracy,precision,recall,f1,fold_accuracies
void write_classifier_csv(const std::filesystem::path& path, std::span<const ClassifierMetric> rows);

// Fixed-format rendering used by every report writer.
std::string format_number(double v);

}  // namespace eegdiff::eval
