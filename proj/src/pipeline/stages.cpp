#include "eegdiff/pipeline/stages.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>

#include <json.hpp>

#include "eegdiff/data/io.hpp"
#include "eegdiff/data/montage.hpp"
#include "eegdiff/data/split.hpp"
#include "eegdiff/data/synthetic.hpp"
#include "eegdiff/diffusion/ddpm.hpp"
#include "eegdiff/dsp/filter.hpp"
#include "eegdiff/dsp/preprocess.hpp"
#include "eegdiff/errors.hpp"
#include "eegdiff/eval/cv.hpp"
#include "eegdiff/eval/report.hpp"
#include "eegdiff/gan/wgan.hpp"
#include "eegdiff/nn/checkpoint.hpp"
#include "eegdiff/pipeline/export.hpp"
#include "eegdiff/pipeline/manifest.hpp"

namespace eegdiff::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream ids for seeds derived from the global seed.
enum : std::uint64_t { kSynthStream = 1, kSplitStream, kDdpmStream, kGanStream, kGenerateStream, kClassifyStream };

std::uint64_t stage_seed(const PipelineConfig& c, const std::optional<std::uint64_t>& own, std::uint64_t stream) {
  return own ? *own : Rng::derive(c.seed, stream).next_u64();
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) { return Rng::derive(seed, stream).next_u64(); }

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw DataError("missing " + what + ": " + p.string());
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

json read_json(const fs::path& p) {
  require_file(p, "stage output");
  std::ifstream in(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("corrupt " + p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

data::DatasetSplit load_split(const Layout& l) {
  const auto j = read_json(l.split);
  data::DatasetSplit s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train_indices = j.at("train").get<std::vector<std::size_t>>();
  s.test_indices = j.at("test").get<std::vector<std::size_t>>();
  return s;
}

diffusion::NoiseSchedule schedule_of(const PipelineConfig& c) {
  try {
    return diffusion::build_schedule(c.diffusion.T, c.diffusion.beta_start, c.diffusion.beta_end);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("diffusion schedule: ") + e.what());
  }
}

gan::GanConfig gan_config_of(const PipelineConfig& c) {
  auto g = c.gan.model;
  g.signal_length = c.data.epoch_length;
  return g;
}

data::Recording load_generated(const Layout& l, const std::string& method) {
  require_file(l.generated(method), method + " generated recording (run generate)");
  return data::load_recording(l.generated(method), data::RecordingFormat::eegb);
}

std::vector<data::Epoch> segment_like(const data::Recording& rec, const PipelineConfig& c, const Layout& l) {
  const auto markers = data::load_markers(l.markers);
  return data::segment_epochs(rec, markers, c.data.epoch_length);
}

// ---- stages --------------------------------------------------------------

void synth_data(const PipelineConfig& c, const Layout& l, Manifest& m, const Logger& log) {
  const auto seed = stage_seed(c, std::nullopt, kSynthStream);
  const auto epochs = data::make_synthetic_dataset(c.data.synthetic_epochs_per_class, c.data.synthetic_classes,
                                                   c.data.synthetic_channels, seed);
  const auto [rec, markers] = data::concatenate_epochs(epochs, data::kSyntheticSamplingRate);
  fs::create_directories(c.paths.data_dir);
  data::save_recording(l.raw_recording, rec);
  data::save_markers(l.raw_markers, markers);
  m.record(l.raw_recording, "synth-data");
  m.record(l.raw_markers, "synth-data");
  log("synth-data: " + std::to_string(epochs.size()) + " epochs x " + std::to_string(rec.n_channels()) +
      " channels -> " + l.raw_recording.string());
}

void preprocess(const PipelineConfig& c, const Layout& l, Manifest& m, const Logger& log) {
  require_file(l.raw_recording, "recording");
  require_file(l.raw_markers, "markers");
  const auto format = data::parse_format(c.data.format);
  const auto raw = data::load_recording(l.raw_recording, format, c.data.csv_sampling_rate_hz);
  auto markers = data::load_markers(l.raw_markers);
  const std::size_t n_markers = markers.size();

  auto spec = c.preprocess.bandpass;
  spec.sampling_rate_hz = raw.sampling_rate_hz();
  const auto clean = dsp::zscore_channels(dsp::butterworth_bandpass(raw, spec));

  std::vector<dsp::ArtifactAnnotation> annotations;
  if (c.preprocess.annotate_muscle) {
    dsp::MuscleDetectorOptions opts;
    opts.z_threshold = c.preprocess.muscle_z_threshold;
    opts.band_high_hz = std::min(opts.band_high_hz, 0.45 * raw.sampling_rate_hz());
    annotations = dsp::annotate_muscle_artifacts(raw, opts);
    markers = dsp::drop_annotated_epochs(markers, c.data.epoch_length, annotations);
  }
  const std::size_t after_muscle = markers.size();
  if (c.preprocess.reject_max_abs > 0.0) {
    markers = dsp::drop_high_amplitude_epochs(clean, markers, c.data.epoch_length, c.preprocess.reject_max_abs);
  }
  if (markers.empty()) throw DataError("preprocess: every epoch was rejected");
  const auto epochs = data::segment_epochs(clean, markers, c.data.epoch_length);
  const auto split = data::split_dataset(epochs, c.data.train_fraction, stage_seed(c, std::nullopt, kSplitStream));

  fs::create_directories(c.paths.work_dir);
  data::save_recording(l.preprocessed, clean);
  data::save_markers(l.markers, markers);
  dsp::save_annotations(l.annotations, annotations);
  write_text(l.split,
             json{{"seed", split.seed}, {"train", split.train_indices}, {"test", split.test_indices}}.dump(2) + "\n");
  for (const auto& p : {l.preprocessed, l.markers, l.annotations, l.split}) m.record(p, "preprocess");
  log("preprocess: " + std::to_string(n_markers) + " epochs, " + std::to_string(n_markers - after_muscle) +
      " dropped for muscle artifacts, " + std::to_string(after_muscle - markers.size()) +
      " for amplitude; split " + std::to_string(split.train_indices.size()) + "/" +
      std::to_string(split.test_indices.size()));
}

void train_ddpm_stage(const PipelineConfig& c, const Layout& l, Manifest& m, const Logger& log) {
  const auto epochs = load_preprocessed_epochs(c);
  const auto split = load_split(l);
  const auto train = data::gather<data::Epoch>(epochs, split.train_indices);
  const auto schedule = schedule_of(c);
  const auto table = data::AdjacencyTable::standard();
  const auto seed = stage_seed(c, c.diffusion.seed, kDdpmStream);
  fs::create_directories(l.checkpoints);
  std::string losses = "target,epoch,loss\n";
  std::uint64_t i = 0;
  for (const auto& entry : table.entries()) {
    diffusion::ConditionalDenoiser model(c.diffusion.unet, sub_seed(seed, 2 * i));
    diffusion::ReconstructionJob job{entry.target, entry.inputs, schedule, &model};
    nn::AdamState opt;
    auto tc = c.diffusion.train;
    tc.seed = sub_seed(seed, 2 * i + 1);
    diffusion::train_ddpm(train, job, model, opt, tc, [&](int ep, double loss) {
      losses += entry.target + "," + std::to_string(ep) + "," + eval::format_number(loss) + "\n";
      if ((ep + 1) % 10 == 0 || ep + 1 == tc.epochs) {
        log("train-ddpm: " + entry.target + " epoch " + std::to_string(ep + 1) + "/" + std::to_string(tc.epochs) +
            " loss " + fmt("%.5f", loss));
      }
    });
    const auto path = l.checkpoint("ddpm", entry.target);
    nn::save_checkpoint(path, model.param_set(), &opt);
    m.record(path, "train-ddpm");
    ++i;
  }
  write_text(l.reports / "ddpm_loss.csv", losses);
  m.record(l.reports / "ddpm_loss.csv", "train-ddpm");
}

void train_wgan_stage(const PipelineConfig& c, const Layout& l, Manifest& m, const Logger& log) {
  const auto epochs = load_preprocessed_epochs(c);
  const auto split = load_split(l);
  const auto train = data::gather<data::Epoch>(epochs, split.train_indices);
  const auto table = data::AdjacencyTable::standard();
  const auto seed = stage_seed(c, c.gan.seed, kGanStream);
  fs::create_directories(l.checkpoints);
  std::string losses = "target,epoch,critic_loss,generator_loss,wasserstein\n";
  std::uint64_t i = 0;
  for (const auto& entry : table.entries()) {
    gan::GanPair pair(gan_config_of(c), sub_seed(seed, 2 * i));
    auto tc = c.gan.train;
    tc.seed = sub_seed(seed, 2 * i + 1);
    gan::train_wgan(train, entry.target, entry.inputs, pair, tc, [&](int ep, const gan::StepLosses& s) {
      losses += entry.target + "," + std::to_string(ep) + "," + eval::format_number(s.critic_loss) + "," +
                eval::format_number(s.generator_loss) + "," + eval::format_number(s.wasserstein) + "\n";
      if ((ep + 1) % 10 == 0 || ep + 1 == tc.epochs) {
        log("train-wgan: " + entry.target + " epoch " + std::to_string(ep + 1) + "/" + std::to_string(tc.epochs) +
            " W " + fmt("%.4f", s.wasserstein));
      }
    });
    auto params = pair.generator.param_set();
    params.append(pair.critic.param_set());
    const auto path = l.checkpoint("wgan", entry.target);
    nn::save_checkpoint(path, params, &pair.generator_opt);
    m.record(path, "train-wgan");
    ++i;
  }
  write_text(l.reports / "wgan_loss.csv", losses);
  m.record(l.reports / "wgan_loss.csv", "train-wgan");
}

std::vector<data::Epoch> reconstruct_with(const std::string& method, std::span<const data::Epoch> epochs,
                                          const PipelineConfig& c, const Layout& l) {
  const auto table = data::AdjacencyTable::standard();
  for (const auto& e : table.entries()) require_file(l.checkpoint(method, e.target), method + " checkpoint");
  const auto seed = sub_seed(stage_seed(c, std::nullopt, kGenerateStream), method == "ddpm" ? 1 : 2);
  if (method == "ddpm") {
    std::vector<std::unique_ptr<diffusion::ConditionalDenoiser>> models;
    diffusion::ModelMap map;
    for (const auto& e : table.entries()) {
      models.push_back(std::make_unique<diffusion::ConditionalDenoiser>(c.diffusion.unet, 0));
      nn::restore(nn::load_checkpoint(l.checkpoint(method, e.target)), models.back()->param_set());
      map[e.target] = models.back().get();
    }
    return diffusion::reconstruct_channels(epochs, table, map, schedule_of(c), seed, c.diffusion.variant,
                                           c.diffusion.sample_batch);
  }
  std::vector<std::unique_ptr<gan::GanPair>> pairs;
  gan::GeneratorMap map;
  for (const auto& e : table.entries()) {
    pairs.push_back(std::make_unique<gan::GanPair>(gan_config_of(c), 0));
    auto params = pairs.back()->generator.param_set();
    params.append(pairs.back()->critic.param_set());
    nn::restore(nn::load_checkpoint(l.checkpoint(method, e.target)), params);
    map[e.target] = &pairs.back()->generator;
  }
  return gan::reconstruct_channels(epochs, table, map, seed, c.gan.train.batch_size);
}

void generate(const PipelineConfig& c, const Layout& l, Manifest& m, const Logger& log) {
  require_file(l.preprocessed, "preprocessed recording (run preprocess)");
  const auto clean = data::load_recording(l.preprocessed, data::RecordingFormat::eegb);
  const auto markers = data::load_markers(l.markers);
  const auto epochs = data::segment_epochs(clean, markers, c.data.epoch_length);
  const auto table = data::AdjacencyTable::standard();
  for (const auto& method : c.methods) {
    const auto recon = reconstruct_with(method, epochs, c, l);
    // Real samples everywhere except the reconstructed target rows of each epoch.
    auto samples = clean.samples();
    for (std::size_t i = 0; i < recon.size(); ++i) {
      for (const auto& e : table.entries()) {
        const auto src = recon[i].samples.row(recon[i].channel_index(e.target));
        auto dst = samples.row(clean.channel_index(e.target)).subspan(markers[i].start_sample, src.size());
        std::copy(src.begin(), src.end(), dst.begin());
      }
    }
    data::save_recording(l.generated(method), clean.with_samples(std::move(samples)));
    m.record(l.generated(method), "generate");
    log("generate: " + method + " reconstructed " + std::to_string(table.entries().size()) + " channels in " +
        std::to_string(recon.size()) + " epochs");
  }
}

void evaluate(const PipelineConfig& c, const Layout& l, Manifest& m, const Logger& log) {
  const auto epochs = load_preprocessed_epochs(c);
  const auto split = load_split(l);
  const auto test = data::gather<data::Epoch>(epochs, split.test_indices);
  const auto table = data::AdjacencyTable::standard();
  std::vector<eval::ChannelMetric> all;
  auto write = [&](const std::string& name, const std::vector<eval::ChannelMetric>& rows) {
    eval::write_channel_csv(l.reconstruction_csv(name), rows);
    m.record(l.reconstruction_csv(name), "evaluate");
    all.insert(all.end(), rows.begin(), rows.end());
    double pcc = 0.0;
    for (const auto& r : rows) pcc += r.pcc / static_cast<double>(rows.size());
    log("evaluate: " + name + " mean pcc " + fmt("%.4f", pcc));
  };
  for (const auto& method : c.methods) {
    const auto generated = segment_like(load_generated(l, method), c, l);
    const auto recon = data::gather<data::Epoch>(generated, split.test_indices);
    write(method, eval::score_reconstruction(test, recon, table, method));
  }
  write("mean_of_inputs", eval::score_mean_of_inputs(test, table));
  eval::MetricReport r;
  r.per_channel = all;
  write_text(l.evaluation_json, eval::to_json(r).dump(2) + "\n");
  m.record(l.evaluation_json, "evaluate");
}

eval::TTestResult compare_folds(const std::vector<double>& a, const std::vector<double>& b) {
  bool constant = true;
  for (std::size_t i = 1; i < a.size(); ++i) constant = constant && (a[i] - b[i] == a[0] - b[0]);
  if (!constant) return eval::paired_ttest(a, b);
  // Identical differences: the statistic degenerates.
  eval::TTestResult r;
  r.degrees_of_freedom = static_cast<int>(a.size()) - 1;
  const double d = a.empty() ? 0.0 : a[0] - b[0];
  r.t_statistic = d == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), d);
  r.p_value = d == 0.0 ? 1.0 : 0.0;
  r.significant = d != 0.0;
  return r;
}

void classify(const PipelineConfig& c, const Layout& l, Manifest& m, const Logger& log) {
  const auto real = load_preprocessed_epochs(c);
  const auto hybrid = segment_like(load_generated(l, c.classify.method), c, l);
  const auto seed = stage_seed(c, c.classify.seed, kClassifyStream);
  const bool tstr = c.classify.protocol == HybridProtocol::train_synthetic_test_real;
  eval::MetricReport r;
  r.cv_folds = c.classify.folds;
  for (const auto& name : c.classify.classifiers) {
    auto models = c.classify.models;
    models.net.seed = sub_seed(seed, 1);
    models.logreg.seed = sub_seed(seed, 2);
    const auto factory = eval::classifier_factory(name, models);
    const auto folds_seed = sub_seed(seed, 0);
    const auto original = eval::cross_validate(real, factory, c.classify.folds, folds_seed);
    const auto other = tstr ? eval::cross_validate(hybrid, real, factory, c.classify.folds, folds_seed)
                            : eval::cross_validate(hybrid, factory, c.classify.folds, folds_seed);
    const std::string dataset = tstr ? "synthetic" : "hybrid";
    r.per_classifier.push_back({name, "original", original.mean_scores, original.fold_accuracies});
    r.per_classifier.push_back({name, dataset, other.mean_scores, other.fold_accuracies});
    r.comparisons.push_back(
        {name + ": original vs " + dataset, compare_folds(original.fold_accuracies, other.fold_accuracies)});
    log("classify: " + name + " original " + fmt("%.3f", original.mean_accuracy) + ", " + dataset + " " +
        fmt("%.3f", other.mean_accuracy));
  }
  eval::write_classifier_csv(l.classification_csv(), r.per_classifier);
  std::string cmp = "comparison,t_statistic,degrees_of_freedom,p_value,significant\n";
  for (const auto& x : r.comparisons) {
    cmp += x.label + "," + eval::format_number(x.test.t_statistic) + "," + std::to_string(x.test.degrees_of_freedom) +
           "," + eval::format_number(x.test.p_value) + "," + (x.test.significant ? "true" : "false") + "\n";
  }
  write_text(l.comparisons_csv(), cmp);
  write_text(l.classification_json, eval::to_json(r).dump(2) + "\n");
  for (const auto& p : {l.classification_csv(), l.comparisons_csv(), l.classification_json}) m.record(p, "classify");
}

void report(const PipelineConfig& c, const Layout& l, Manifest& m, const Logger& log,
            const std::string& config_hash) {
  const auto ev = read_json(l.evaluation_json);
  const auto cl = read_json(l.classification_json);
  json r;
  r["cv_folds"] = cl.at("cv_folds");
  r["per_channel"] = ev.at("per_channel");
  r["per_classifier"] = cl.at("per_classifier");
  r["comparisons"] = cl.at("comparisons");
  r["config_sha256"] = config_hash;
  write_text(l.report_json(), r.dump(2) + "\n");
  m.record(l.report_json(), "report");

  require_file(l.preprocessed, "preprocessed recording");
  const auto real = data::load_recording(l.preprocessed, data::RecordingFormat::eegb);
  const auto synthetic = load_generated(l, c.export_.method);
  ComparisonExport files;
  try {
    files = export_signal_comparison(real, synthetic, c.export_.channels,
                                     {c.export_.window_start_s, c.export_.window_end_s}, c.export_.smoothing_s,
                                     l.figures, c.export_.method, "config-sha256 " + config_hash);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("export: ") + e.what());
  }
  for (const auto& p : files.csv_files) m.record(p, "report");
  for (const auto& p : files.svg_files) m.record(p, "report");
  log("report: " + l.report_json().string() + ", " + std::to_string(files.svg_files.size()) + " signal plots");
}

}  // namespace

Layout::Layout(const PipelineConfig& c) : work_(c.paths.work_dir) {
  raw_recording = c.paths.data_dir / c.data.recording;
  raw_markers = c.paths.data_dir / c.data.markers;
  preprocessed = work_ / "preprocessed.eegb";
  markers = work_ / "markers.csv";
  annotations = work_ / "annotations.csv";
  split = work_ / "split.json";
  evaluation_json = work_ / "evaluation.json";
  classification_json = work_ / "classification.json";
  checkpoints = c.paths.checkpoint_dir;
  reports = c.paths.report_dir;
  figures = reports / "figures";
  manifest = reports / "manifest.json";
}

fs::path Layout::generated(const std::string& method) const { return work_ / ("generated_" + method + ".eegb"); }

fs::path Layout::checkpoint(const std::string& method, const std::string& target) const {
  return checkpoints / (method + "_" + target + ".ednn");
}

fs::path Layout::reconstruction_csv(const std::string& method) const {
  return reports / ("reconstruction_" + method + ".csv");
}

Stage parse_stage(const std::string& name) {
  for (auto s : all_stages()) {
    if (stage_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown subcommand '" + name + "'");
}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::synth_data: return "synth-data";
    case Stage::preprocess: return "preprocess";
    case Stage::train_ddpm: return "train-ddpm";
    case Stage::train_wgan: return "train-wgan";
    case Stage::generate: return "generate";
    case Stage::evaluate: return "evaluate";
    case Stage::classify: return "classify";
    case Stage::report: return "report";
  }
  return "?";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> s{Stage::synth_data, Stage::preprocess, Stage::train_ddpm, Stage::train_wgan,
                                    Stage::generate,   Stage::evaluate,   Stage::classify,   Stage::report};
  return s;
}

void log_to_stderr(const std::string& line) { std::cerr << line << std::endl; }

std::vector<data::Epoch> load_preprocessed_epochs(const PipelineConfig& c) {
  const Layout l(c);
  require_file(l.preprocessed, "preprocessed recording (run preprocess)");
  require_file(l.markers, "preprocessed markers (run preprocess)");
  return segment_like(data::load_recording(l.preprocessed, data::RecordingFormat::eegb), c, l);
}

void run_stage(Stage stage, const PipelineConfig& config, const Logger& log) {
  const Layout l(config);
  const auto name = stage_name(stage);
  const auto toml = to_toml(config);
  const auto hash = sha256_hex(toml);
  fs::create_directories(l.reports);
  const auto cfg_file = l.reports / ("config_" + name + ".toml");
  write_text(cfg_file, "# effective configuration for " + name + "\n# sha256 " + hash + "\n" + toml);

  Manifest m(l.manifest, l.reports.parent_path());
  m.record(cfg_file, name);
  switch (stage) {
    case Stage::synth_data: synth_data(config, l, m, log); break;
    case Stage::preprocess: preprocess(config, l, m, log); break;
    case Stage::train_ddpm: train_ddpm_stage(config, l, m, log); break;
    case Stage::train_wgan: train_wgan_stage(config, l, m, log); break;
    case Stage::generate: generate(config, l, m, log); break;
    case Stage::evaluate: evaluate(config, l, m, log); break;
    case Stage::classify: classify(config, l, m, log); break;
    case Stage::report: report(config, l, m, log, hash); break;
  }
  m.save();
}

}  // namespace eegdiff::pipeline
