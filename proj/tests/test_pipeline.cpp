#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eegdiff/data/io.hpp"
#include "eegdiff/data/montage.hpp"
#include "eegdiff/errors.hpp"
#include "eegdiff/pipeline/config.hpp"
#include "eegdiff/pipeline/export.hpp"
#include "eegdiff/pipeline/manifest.hpp"
#include "eegdiff/pipeline/stages.hpp"
#include "eegdiff/rng.hpp"

using namespace eegdiff;
using namespace eegdiff::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("eegdiff_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

data::Recording noise_recording(const data::ChannelNames& names, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return data::Recording(names, 512.0, data::ChannelMatrix(names.size(), n, rng.normal_vector(names.size() * n)));
}

struct EnvGuard {
  explicit EnvGuard(const char* value) {
    if (value) {
      setenv("EEGDIFF_REPORT_DIR", value, 1);
    } else {
      unsetenv("EEGDIFF_REPORT_DIR");
    }
  }
  ~EnvGuard() { unsetenv("EEGDIFF_REPORT_DIR"); }
};

}  // namespace

TEST_CASE("effective config round-trips through its own TOML") {
  EnvGuard env(nullptr);
  const auto dir = fresh_dir("cfg_roundtrip");
  auto c = load_config(std::nullopt, {"diffusion.unet_widths=16,32", "classify.classifiers=knn,cnn",
                                      "diffusion.variant=paper_deterministic", "gan.seed=99", "seed=5"},
                       dir);
  const auto text = to_toml(c);
  std::ofstream(dir / "c.toml") << text;
  const auto back = load_config(dir / "c.toml", {}, dir);
  CHECK(to_toml(back) == text);
  CHECK(back.diffusion.unet.widths == std::vector<std::size_t>{16, 32});
  CHECK(back.classify.classifiers == std::vector<std::string>{"knn", "cnn"});
  CHECK(back.gan.seed == 99u);
  CHECK(back.seed == 5u);
  CHECK_FALSE(back.diffusion.seed.has_value());
  CHECK(back.paths.report_dir == dir / "reports");
  // every key appears once
  for (const auto& k : config_keys()) {
    const auto leaf = k.substr(k.find('.') == std::string::npos ? 0 : k.find('.') + 1);
    CHECK(text.find("\n" + leaf + " = ") != std::string::npos);
  }
}

TEST_CASE("config precedence and rejection") {
  const auto dir = fresh_dir("cfg_precedence");
  std::ofstream(dir / "a.toml") << "seed = 11\n[diffusion]\nT = 20\nlr = 0.001\n[paths]\nreport_dir = \"out\"\n";
  SUBCASE("file over defaults, overrides over file") {
    EnvGuard env(nullptr);
    const auto c = load_config(dir / "a.toml", {"diffusion.T=30"}, fs::current_path());
    CHECK(c.seed == 11u);
    CHECK(c.diffusion.T == 30);
    CHECK(c.diffusion.train.lr == 0.001);
    CHECK(c.diffusion.beta_start == 0.002);
    CHECK(c.paths.report_dir == dir / "out");
  }
  SUBCASE("environment overrides the report directory") {
    EnvGuard env((dir / "env_reports").c_str());
    CHECK(load_config(dir / "a.toml", {}).paths.report_dir == dir / "env_reports");
    CHECK(load_config(dir / "a.toml", {"paths.report_dir=/tmp/x"}).paths.report_dir == "/tmp/x");
  }
  SUBCASE("unknown key names the key") {
    EnvGuard env(nullptr);
    std::ofstream(dir / "bad.toml") << "[diffusion]\nbetaa_start = 0.1\n";
    try {
      load_config(dir / "bad.toml", {});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("diffusion.betaa_start") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config(std::nullopt, {"nosuch=1"}), ConfigError);
  }
  SUBCASE("malformed values") {
    EnvGuard env(nullptr);
    CHECK_THROWS_AS(load_config(std::nullopt, {"diffusion.T=abc"}), ConfigError);
    CHECK_THROWS_AS(load_config(std::nullopt, {"diffusion.T=0"}), ConfigError);
    CHECK_THROWS_AS(load_config(std::nullopt, {"diffusion.variant=fast"}), ConfigError);
    CHECK_THROWS_AS(load_config(std::nullopt, {"classify.classifiers=svm"}), ConfigError);
    CHECK_THROWS_AS(load_config(std::nullopt, {"classify.protocol=other"}), ConfigError);
    CHECK_THROWS_AS(load_config(std::nullopt, {"data.train_fraction=1.5"}), ConfigError);
    CHECK_THROWS_AS(load_config(std::nullopt, {"preprocess.annotate_muscle=maybe"}), ConfigError);
    CHECK_THROWS_AS(load_config(std::nullopt, {"no_equals_sign"}), ConfigError);
    CHECK_THROWS_AS(load_config(dir / "missing.toml", {}), ConfigError);
  }
}

TEST_CASE("sha256 known vectors and manifest merge") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto dir = fresh_dir("manifest");
  std::ofstream(dir / "a.txt") << "abc";
  {
    Manifest m(dir / "reports" / "manifest.json", dir);
    m.record(dir / "a.txt", "one");
    m.save();
  }
  std::ofstream(dir / "b.txt") << "";
  Manifest m(dir / "reports" / "manifest.json", dir);
  m.record(dir / "b.txt", "two");
  REQUIRE(m.entries().size() == 2);
  CHECK(m.entries().at("a.txt").sha256 == sha256_hex("abc"));
  CHECK(m.entries().at("a.txt").bytes == 3);
  CHECK(m.entries().at("b.txt").stage == "two");
  CHECK_THROWS_AS(m.record(dir / "nope.txt", "x"), DataError);
}

TEST_CASE("signal comparison export") {
  const auto dir = fresh_dir("export");
  const auto& names = data::montage_channels();
  const auto real = noise_recording(names, 512 * 14, 1);
  const auto table = data::AdjacencyTable::standard();
  std::vector<std::string> targets;
  for (const auto& e : table.entries()) targets.push_back(e.target);

  SUBCASE("identical inputs give identical columns") {
    const auto out = export_signal_comparison(real, real, {"F8"}, {6.0, 12.0}, 0.05, dir, "same", "test");
    std::ifstream in(out.csv_files.at(0));
    std::string line;
    std::getline(in, line);
    CHECK(line == "time_s,real,synthetic");
    while (std::getline(in, line)) {
      const auto a = line.find(','), b = line.rfind(',');
      REQUIRE(a != b);
      CHECK(line.substr(a + 1, b - a - 1) == line.substr(b + 1));
    }
  }
  SUBCASE("one csv and one svg per channel, rows cover the window") {
    const auto synth = noise_recording(names, 512 * 14, 2);
    const auto out = export_signal_comparison(real, synth, targets, {6.0, 12.0}, 0.05, dir, "ddpm", "config-sha256 x");
    CHECK(out.csv_files.size() == 8);
    CHECK(out.svg_files.size() == 8);
    for (const auto& f : out.csv_files) CHECK(count_lines(f) == 3072 + 1);
    const auto svg = slurp(out.svg_files[0]);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("config-sha256 x") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
  }
  SUBCASE("smoothing is a centred moving average") {
    auto flat = real.samples();
    for (auto& v : flat.values()) v = 0.0;
    flat(real.channel_index("T7"), 512 * 7) = 26.0;
    const auto spike = real.with_samples(flat);
    const auto out = export_signal_comparison(spike, spike, {"T7"}, {6.0, 8.0}, 26.0 / 512.0, dir, "spike", "");
    std::ifstream in(out.csv_files[0]);
    std::string line;
    std::getline(in, line);
    double total = 0.0;
    while (std::getline(in, line)) total += std::stod(line.substr(line.find(',') + 1));
    CHECK(total == doctest::Approx(26.0));
  }
  SUBCASE("bad windows and channels are rejected") {
    CHECK_THROWS_AS(export_signal_comparison(real, real, {"F8"}, {12.0, 6.0}, 0.05, dir, "x", ""), std::invalid_argument);
    CHECK_THROWS_AS(export_signal_comparison(real, real, {"F8"}, {-1.0, 6.0}, 0.05, dir, "x", ""), std::invalid_argument);
    CHECK_THROWS_AS(export_signal_comparison(real, real, {"F8"}, {6.0, 15.0}, 0.05, dir, "x", ""), std::invalid_argument);
    CHECK_THROWS_AS(export_signal_comparison(real, real, {"XX"}, {6.0, 12.0}, 0.05, dir, "x", ""), DataError);
  }
}

TEST_CASE("stage names") {
  for (auto s : all_stages()) CHECK(parse_stage(stage_name(s)) == s);
  CHECK_THROWS_AS(parse_stage("train"), std::invalid_argument);
  CHECK(all_stages().size() == 8);
}

TEST_CASE("tiny pipeline writes every declared artifact") {
  EnvGuard env(nullptr);
  const auto dir = fresh_dir("tiny_pipeline");
  const auto config = load_config(std::nullopt,
                                  {"seed=3", "data.synthetic_epochs_per_class=8", "diffusion.unet_widths=4,8",
                                   "diffusion.epochs=1", "diffusion.T=10", "gan.epochs=1", "gan.width=4",
                                   "classify.classifiers=knn", "classify.folds=2", "export.window_start_s=0",
                                   "export.window_end_s=2", "export.channels=F8"},
                                  dir);
  CHECK_THROWS_AS(run_stage(Stage::preprocess, config, [](const std::string&) {}), DataError);
  std::vector<std::string> log;
  for (auto s : all_stages()) run_stage(s, config, [&](const std::string& line) { log.push_back(line); });
  const Layout l(config);
  const auto table = data::AdjacencyTable::standard();
  for (const auto& e : table.entries()) {
    CHECK(fs::exists(l.checkpoint("ddpm", e.target)));
    CHECK(fs::exists(l.checkpoint("wgan", e.target)));
  }
  for (const std::string m : {"ddpm", "wgan", "mean_of_inputs"}) {
    REQUIRE(fs::exists(l.reconstruction_csv(m)));
    CHECK(count_lines(l.reconstruction_csv(m)) == 9);
    CHECK(slurp(l.reconstruction_csv(m)).rfind("target,input_1,input_2,method,mse,pcc\n", 0) == 0);
  }
  CHECK(count_lines(l.classification_csv()) == 3);
  CHECK(fs::exists(l.report_json()));
  CHECK(fs::exists(l.figures / "ddpm_F8.svg"));
  for (auto s : all_stages()) CHECK(fs::exists(l.reports / ("config_" + stage_name(s) + ".toml")));

  // every file under the output roots is in the manifest with a matching hash
  const Manifest m(l.manifest, l.reports.parent_path());
  std::size_t files = 0;
  for (const auto& root : {l.checkpoints, l.reports, config.paths.work_dir, config.paths.data_dir}) {
    for (const auto& f : fs::recursive_directory_iterator(root)) {
      if (!f.is_regular_file() || f.path() == l.manifest) continue;
      const auto key = f.path().lexically_relative(l.reports.parent_path()).generic_string();
      CAPTURE(key);
      REQUIRE(m.entries().count(key) == 1);
      CHECK(m.entries().at(key).sha256 == sha256_file(f.path()));
      ++files;
    }
  }
  CHECK(files == m.entries().size());

  // rerunning the metric stages reproduces the csvs byte for byte
  const auto before = slurp(l.reconstruction_csv("ddpm")) + slurp(l.classification_csv());
  run_stage(Stage::evaluate, config, [](const std::string&) {});
  run_stage(Stage::classify, config, [](const std::string&) {});
  CHECK(slurp(l.reconstruction_csv("ddpm")) + slurp(l.classification_csv()) == before);
}
