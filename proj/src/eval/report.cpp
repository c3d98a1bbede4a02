#include "eegdiff/eval/report.hpp"

#include <cstdio>
#include <functional>
#include <fstream>
#include <stdexcept>

#include "eegdiff/errors.hpp"

namespace eegdiff::eval {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

ChannelMetric score_rows(std::span<const data::Epoch> real, const data::AdjacencyEntry& entry,
                         const std::function<std::vector<double>(std::size_t)>& candidate, const std::string& method) {
  ChannelMetric m{entry.target, entry.inputs, method, 0.0, 0.0};
  for (std::size_t i = 0; i < real.size(); ++i) {
    const auto truth = real[i].samples.row(real[i].channel_index(entry.target));
    const auto guess = candidate(i);
    m.mse += mse(truth, guess);
    m.pcc += pearson(truth, guess);
  }
  m.mse /= static_cast<double>(real.size());
  m.pcc /= static_cast<double>(real.size());
  return m;
}

}  // namespace

std::vector<ChannelMetric> score_reconstruction(std::span<const data::Epoch> real,
                                                std::span<const data::Epoch> reconstructed,
                                                const data::AdjacencyTable& table, const std::string& method) {
  if (real.size() != reconstructed.size()) throw std::invalid_argument("score_reconstruction: epoch count mismatch");
  if (real.empty()) throw std::invalid_argument("score_reconstruction: no epochs");
  std::vector<ChannelMetric> out;
  for (const auto& entry : table.entries()) {
    out.push_back(score_rows(
        real, entry,
        [&](std::size_t i) {
          const auto row = reconstructed[i].samples.row(reconstructed[i].channel_index(entry.target));
          return std::vector<double>(row.begin(), row.end());
        },
        method));
  }
  return out;
}

std::vector<ChannelMetric> score_mean_of_inputs(std::span<const data::Epoch> real, const data::AdjacencyTable& table) {
  if (real.empty()) throw std::invalid_argument("score_mean_of_inputs: no epochs");
  std::vector<ChannelMetric> out;
  for (const auto& entry : table.entries()) {
    out.push_back(score_rows(
        real, entry,
        [&](std::size_t i) {
          const auto a = real[i].samples.row(real[i].channel_index(entry.inputs[0]));
          const auto b = real[i].samples.row(real[i].channel_index(entry.inputs[1]));
          std::vector<double> m(a.size());
          for (std::size_t n = 0; n < a.size(); ++n) m[n] = 0.5 * (a[n] + b[n]);
          return m;
        },
        "mean_of_inputs"));
  }
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

nlohmann::json to_json(const MetricReport& report) {
  using nlohmann::json;
  json j;
  j["cv_folds"] = report.cv_folds;
  j["per_channel"] = json::array();
  for (const auto& c : report.per_channel) {
    j["per_channel"].push_back(
        {{"target", c.target}, {"inputs", c.inputs}, {"method", c.method}, {"mse", c.mse}, {"pcc", c.pcc}});
  }
  j["per_classifier"] = json::array();
  for (const auto& c : report.per_classifier) {
    j["per_classifier"].push_back({{"name", c.name},
                                   {"dataset", c.dataset},
                                   {"accuracy", c.scores.accuracy},
                                   {"precision", c.scores.precision},
                                   {"recall", c.scores.recall},
                                   {"f1", c.scores.f1},
                                   {"fold_scores", c.fold_accuracies}});
  }
  j["comparisons"] = json::array();
  for (const auto& c : report.comparisons) {
    j["comparisons"].push_back({{"label", c.label},
                                {"t_statistic", c.test.t_statistic},
                                {"degrees_of_freedom", c.test.degrees_of_freedom},
                                {"p_value", c.test.p_value},
                                {"significant_at_0.05", c.test.significant}});
  }
  return j;
}

void write_report_json(const std::filesystem::path& path, const MetricReport& report) {
  auto out = open_for_write(path);
  out << to_json(report).dump(2) << '\n';
}

void write_channel_csv(const std::filesystem::path& path, std::span<const ChannelMetric> rows) {
  auto out = open_for_write(path);
  out << "target,input_1,input_2,method,mse,pcc\n";
  for (const auto& r : rows) {
    out << r.target << ',' << r.inputs[0] << ',' << r.inputs[1] << ',' << r.method << ',' << format_number(r.mse)
        << ',' << format_number(r.pcc) << '\n';
  }
}

void write_classifier_csv(const std::filesystem::path& path, std::span<const ClassifierMetric> rows) {
  auto out = open_for_write(path);
  out << "classifier,dataset,accuracy,precision,recall,f1,fold_accuracies\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.dataset << ',' << format_number(r.scores.accuracy) << ','
        << format_number(r.scores.precision) << ',' << format_number(r.scores.recall) << ','
        << format_number(r.scores.f1) << ',';
    for (std::size_t i = 0; i < r.fold_accuracies.size(); ++i) {
      out << (i ? ";" : "") << format_number(r.fold_accuracies[i]);
    }
    out << '\n';
  }
}

}  // namespace eegdiff::eval
