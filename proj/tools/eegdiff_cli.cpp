#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "eegdiff/errors.hpp"
#include "eegdiff/pipeline/config.hpp"
#include "eegdiff/pipeline/stages.hpp"

using namespace eegdiff;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kData = 3, kRuntime = 4 };

// One line, key=value pairs, message last.
int fail(int code, const char* kind, const std::string& message) {
  std::string flat = message;
  for (auto& ch : flat) {
    if (ch == '\n') ch = ' ';
  }
  std::cerr << "error code=" << code << " kind=" << kind << " message=" << flat << std::endl;
  return code;
}

}  // namespace

std::string describe(pipeline::Stage s) {
  using pipeline::Stage;
  switch (s) {
    case Stage::synth_data: return "write a synthetic recording and marker file";
    case Stage::preprocess: return "band-pass, z-score, annotate artifacts, drop epochs, split";
    case Stage::train_ddpm: return "train one conditional DDPM per target channel";
    case Stage::train_wgan: return "train one conditional WGAN-GP per target channel";
    case Stage::generate: return "reconstruct target channels for every epoch";
    case Stage::evaluate: return "MSE and PCC per target on the test split";
    case Stage::classify: return "cross-validate classifiers on real and reconstructed data";
    case Stage::report: return "merge metrics into report.json and export comparison figures";
  }
  return "";
}

int main(int argc, char** argv) {
  CLI::App app{"EEG channel reconstruction pipeline"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::vector<std::string> overrides;
  bool print_config = false;

  for (auto stage : pipeline::all_stages()) {
    auto* sub = app.add_subcommand(pipeline::stage_name(stage), describe(stage));
    sub->add_option("-c,--config", config_path, "TOML config file");
    sub->add_option("-s,--set", overrides, "override as section.key=value (repeatable)");
    sub->add_flag("--print-config", print_config, "print the effective config and exit");
  }
  app.footer("Env: EEGDIFF_REPORT_DIR overrides paths.report_dir.\nExit codes: 1 usage, 2 config, 3 data, 4 runtime.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  const auto* sub = app.get_subcommands().front();
  try {
    const auto stage = pipeline::parse_stage(sub->get_name());
    std::optional<std::filesystem::path> file;
    if (!config_path.empty()) file = config_path;
    const auto config = pipeline::load_config(file, overrides);
    if (print_config) {
      std::cout << pipeline::to_toml(config);
      return kOk;
    }
    pipeline::run_stage(stage, config);
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const DataError& e) {
    return fail(kData, "data", e.what());
  } catch (const NumericError& e) {
    return fail(kRuntime, "numeric", e.what());
  } catch (const std::exception& e) {
    return fail(kRuntime, "runtime", e.what());
  }
  return kOk;
}
