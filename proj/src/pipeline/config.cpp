#include "eegdiff/pipeline/config.hpp"

#include <CLI11.hpp>

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "eegdiff/errors.hpp"

namespace eegdiff::pipeline {

namespace fs = std::filesystem;

namespace {

using Values = std::vector<std::string>;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\"'");
  const auto e = s.find_last_not_of(" \t\"'");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

// Arrays arrive as several values; a single comma-separated value is split.
Values as_list(const Values& v) {
  Values out;
  for (const auto& item : v) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      if (part.front() == '[') part.erase(0, 1);
      if (!part.empty() && part.back() == ']') part.pop_back();
      part = trim(part);
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

std::string scalar(const std::string& key, const Values& v) {
  if (v.size() != 1) throw ConfigError("config key '" + key + "' expects a single value");
  return trim(v[0]);
}

double to_double(const std::string& key, const Values& v) {
  const auto s = scalar(key, v);
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE) throw ConfigError("config key '" + key + "': bad number '" + s + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& s) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError("config key '" + key + "': bad integer '" + s + "'");
  return x;
}

long long to_int(const std::string& key, const Values& v) { return to_int(key, scalar(key, v)); }

template <typename T>
T positive(const std::string& key, long long x) {
  if (x < 1) throw ConfigError("config key '" + key + "' must be >= 1");
  return static_cast<T>(x);
}

std::uint64_t to_u64(const std::string& key, const Values& v) {
  const auto s = scalar(key, v);
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || p != s.data() + s.size()) throw ConfigError("config key '" + key + "': bad seed '" + s + "'");
  return x;
}

bool to_bool(const std::string& key, const Values& v) {
  const auto s = scalar(key, v);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + s + "'");
}

std::string fmt(double d) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

std::string quote_list(const std::vector<std::string>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + quote(v[i]);
  return out + "]";
}

std::string opt_seed(const std::optional<std::uint64_t>& s) { return s ? std::to_string(*s) : quote(""); }

void set_opt_seed(std::optional<std::uint64_t>& dst, const std::string& key, const Values& v) {
  if (scalar(key, v).empty()) {
    dst.reset();
  } else {
    dst = to_u64(key, v);
  }
}

HybridProtocol parse_protocol(const std::string& key, const std::string& s) {
  if (s == "hybrid") return HybridProtocol::hybrid;
  if (s == "train_synthetic_test_real") return HybridProtocol::train_synthetic_test_real;
  throw ConfigError("config key '" + key + "': unknown protocol '" + s + "' (hybrid | train_synthetic_test_real)");
}

std::string method_value(const std::string& key, const std::string& s) {
  if (s != "ddpm" && s != "wgan") throw ConfigError("config key '" + key + "': unknown method '" + s + "' (ddpm | wgan)");
  return s;
}

struct Key {
  std::string name;
  std::function<void(PipelineConfig&, const std::string&, const Values&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define EEGDIFF_KEY(NAME, SET, GET)                                                                   \
  Key {                                                                                               \
    NAME, [](PipelineConfig& c, const std::string& k, const Values& v) { (void)k; (void)v; SET; },   \
        [](const PipelineConfig& c) -> std::string { return GET; }                                    \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      EEGDIFF_KEY("seed", c.seed = to_u64(k, v), std::to_string(c.seed)),
      EEGDIFF_KEY("methods",
                  {
                    c.methods.clear();
                    for (const auto& m : as_list(v)) c.methods.push_back(method_value(k, m));
                  },
                  quote_list(c.methods)),

      EEGDIFF_KEY("paths.data_dir", c.paths.data_dir = scalar(k, v), quote(c.paths.data_dir.generic_string())),
      EEGDIFF_KEY("paths.work_dir", c.paths.work_dir = scalar(k, v), quote(c.paths.work_dir.generic_string())),
      EEGDIFF_KEY("paths.checkpoint_dir", c.paths.checkpoint_dir = scalar(k, v),
                  quote(c.paths.checkpoint_dir.generic_string())),
      EEGDIFF_KEY("paths.report_dir", c.paths.report_dir = scalar(k, v), quote(c.paths.report_dir.generic_string())),

      EEGDIFF_KEY("data.recording", c.data.recording = scalar(k, v), quote(c.data.recording)),
      EEGDIFF_KEY("data.markers", c.data.markers = scalar(k, v), quote(c.data.markers)),
      EEGDIFF_KEY("data.format",
                  {
                    c.data.format = scalar(k, v);
                    if (c.data.format != "eegb" && c.data.format != "csv") {
                      throw ConfigError("config key '" + k + "': unknown format '" + c.data.format + "'");
                    }
                  },
                  quote(c.data.format)),
      EEGDIFF_KEY("data.csv_sampling_rate_hz", c.data.csv_sampling_rate_hz = to_double(k, v),
                  fmt(c.data.csv_sampling_rate_hz)),
      EEGDIFF_KEY("data.epoch_length", c.data.epoch_length = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.data.epoch_length)),
      EEGDIFF_KEY("data.train_fraction", c.data.train_fraction = to_double(k, v), fmt(c.data.train_fraction)),
      EEGDIFF_KEY("data.synthetic_epochs_per_class", c.data.synthetic_epochs_per_class = positive<int>(k, to_int(k, v)),
                  std::to_string(c.data.synthetic_epochs_per_class)),
      EEGDIFF_KEY("data.synthetic_classes", c.data.synthetic_classes = positive<int>(k, to_int(k, v)),
                  std::to_string(c.data.synthetic_classes)),
      EEGDIFF_KEY("data.synthetic_channels", c.data.synthetic_channels = positive<int>(k, to_int(k, v)),
                  std::to_string(c.data.synthetic_channels)),

      EEGDIFF_KEY("preprocess.low_hz", c.preprocess.bandpass.low_hz = to_double(k, v),
                  fmt(c.preprocess.bandpass.low_hz)),
      EEGDIFF_KEY("preprocess.high_hz", c.preprocess.bandpass.high_hz = to_double(k, v),
                  fmt(c.preprocess.bandpass.high_hz)),
      EEGDIFF_KEY("preprocess.order", c.preprocess.bandpass.order = positive<int>(k, to_int(k, v)),
                  std::to_string(c.preprocess.bandpass.order)),
      EEGDIFF_KEY("preprocess.annotate_muscle", c.preprocess.annotate_muscle = to_bool(k, v),
                  c.preprocess.annotate_muscle ? "true" : "false"),
      EEGDIFF_KEY("preprocess.muscle_z_threshold", c.preprocess.muscle_z_threshold = to_double(k, v),
                  fmt(c.preprocess.muscle_z_threshold)),
      EEGDIFF_KEY("preprocess.reject_max_abs", c.preprocess.reject_max_abs = to_double(k, v),
                  fmt(c.preprocess.reject_max_abs)),

      EEGDIFF_KEY("diffusion.T", c.diffusion.T = positive<int>(k, to_int(k, v)), std::to_string(c.diffusion.T)),
      EEGDIFF_KEY("diffusion.beta_start", c.diffusion.beta_start = to_double(k, v), fmt(c.diffusion.beta_start)),
      EEGDIFF_KEY("diffusion.beta_end", c.diffusion.beta_end = to_double(k, v), fmt(c.diffusion.beta_end)),
      EEGDIFF_KEY("diffusion.unet_widths",
                  {
                    c.diffusion.unet.widths.clear();
                    for (const auto& w : as_list(v)) c.diffusion.unet.widths.push_back(positive<std::size_t>(k, to_int(k, w)));
                    if (c.diffusion.unet.widths.empty()) throw ConfigError("config key '" + k + "' is empty");
                  },
                  [&] {
                    std::string s = "[";
                    for (std::size_t i = 0; i < c.diffusion.unet.widths.size(); ++i) {
                      s += (i ? ", " : "") + std::to_string(c.diffusion.unet.widths[i]);
                    }
                    return s + "]";
                  }()),
      EEGDIFF_KEY("diffusion.kernel", c.diffusion.unet.kernel = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.diffusion.unet.kernel)),
      EEGDIFF_KEY("diffusion.time_embed_dim", c.diffusion.unet.time_embed_dim = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.diffusion.unet.time_embed_dim)),
      EEGDIFF_KEY("diffusion.epochs", c.diffusion.train.epochs = positive<int>(k, to_int(k, v)),
                  std::to_string(c.diffusion.train.epochs)),
      EEGDIFF_KEY("diffusion.batch_size", c.diffusion.train.batch_size = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.diffusion.train.batch_size)),
      EEGDIFF_KEY("diffusion.lr", c.diffusion.train.lr = to_double(k, v), fmt(c.diffusion.train.lr)),
      EEGDIFF_KEY("diffusion.halve_every", c.diffusion.train.halve_every = positive<int>(k, to_int(k, v)),
                  std::to_string(c.diffusion.train.halve_every)),
      EEGDIFF_KEY("diffusion.variant",
                  {
                    try {
                      c.diffusion.variant = diffusion::parse_variant(scalar(k, v));
                    } catch (const std::invalid_argument& e) {
                      throw ConfigError("config key '" + k + "': " + e.what());
                    }
                  },
                  quote(diffusion::variant_name(c.diffusion.variant))),
      EEGDIFF_KEY("diffusion.sample_batch", c.diffusion.sample_batch = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.diffusion.sample_batch)),
      EEGDIFF_KEY("diffusion.seed", set_opt_seed(c.diffusion.seed, k, v), opt_seed(c.diffusion.seed)),

      EEGDIFF_KEY("gan.epochs", c.gan.train.epochs = positive<int>(k, to_int(k, v)), std::to_string(c.gan.train.epochs)),
      EEGDIFF_KEY("gan.batch_size", c.gan.train.batch_size = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.gan.train.batch_size)),
      EEGDIFF_KEY("gan.lr", c.gan.model.lr = to_double(k, v), fmt(c.gan.model.lr)),
      EEGDIFF_KEY("gan.beta1", c.gan.model.beta1 = to_double(k, v), fmt(c.gan.model.beta1)),
      EEGDIFF_KEY("gan.beta2", c.gan.model.beta2 = to_double(k, v), fmt(c.gan.model.beta2)),
      EEGDIFF_KEY("gan.gp_weight", c.gan.model.gp_weight = to_double(k, v), fmt(c.gan.model.gp_weight)),
      EEGDIFF_KEY("gan.n_critic", c.gan.model.n_critic = positive<int>(k, to_int(k, v)),
                  std::to_string(c.gan.model.n_critic)),
      EEGDIFF_KEY("gan.latent_dim", c.gan.model.latent_channels = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.gan.model.latent_channels)),
      EEGDIFF_KEY("gan.width", c.gan.model.width = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.gan.model.width)),
      EEGDIFF_KEY("gan.kernel", c.gan.model.kernel = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.gan.model.kernel)),
      EEGDIFF_KEY("gan.seed", set_opt_seed(c.gan.seed, k, v), opt_seed(c.gan.seed)),

      EEGDIFF_KEY("classify.classifiers",
                  {
                    c.classify.classifiers = as_list(v);
                    for (const auto& n : c.classify.classifiers) eval::classifier_factory(n, c.classify.models);
                  },
                  quote_list(c.classify.classifiers)),
      EEGDIFF_KEY("classify.folds", c.classify.folds = positive<int>(k, to_int(k, v)), std::to_string(c.classify.folds)),
      EEGDIFF_KEY("classify.method", c.classify.method = method_value(k, scalar(k, v)), quote(c.classify.method)),
      EEGDIFF_KEY("classify.protocol", c.classify.protocol = parse_protocol(k, scalar(k, v)),
                  quote(protocol_name(c.classify.protocol))),
      EEGDIFF_KEY("classify.knn_k", c.classify.models.knn_k = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.classify.models.knn_k)),
      EEGDIFF_KEY("classify.logreg_max_iter", c.classify.models.logreg.max_iter = positive<int>(k, to_int(k, v)),
                  std::to_string(c.classify.models.logreg.max_iter)),
      EEGDIFF_KEY("classify.logreg_l2", c.classify.models.logreg.l2 = to_double(k, v),
                  fmt(c.classify.models.logreg.l2)),
      EEGDIFF_KEY("classify.logreg_lr", c.classify.models.logreg.lr = to_double(k, v),
                  fmt(c.classify.models.logreg.lr)),
      EEGDIFF_KEY("classify.net_epochs", c.classify.models.net.epochs = positive<int>(k, to_int(k, v)),
                  std::to_string(c.classify.models.net.epochs)),
      EEGDIFF_KEY("classify.net_batch_size", c.classify.models.net.batch_size = positive<std::size_t>(k, to_int(k, v)),
                  std::to_string(c.classify.models.net.batch_size)),
      EEGDIFF_KEY("classify.net_lr", c.classify.models.net.lr = to_double(k, v), fmt(c.classify.models.net.lr)),
      EEGDIFF_KEY("classify.seed", set_opt_seed(c.classify.seed, k, v), opt_seed(c.classify.seed)),

      EEGDIFF_KEY("export.method", c.export_.method = method_value(k, scalar(k, v)), quote(c.export_.method)),
      EEGDIFF_KEY("export.channels", c.export_.channels = as_list(v), quote_list(c.export_.channels)),
      EEGDIFF_KEY("export.window_start_s", c.export_.window_start_s = to_double(k, v), fmt(c.export_.window_start_s)),
      EEGDIFF_KEY("export.window_end_s", c.export_.window_end_s = to_double(k, v), fmt(c.export_.window_end_s)),
      EEGDIFF_KEY("export.smoothing_s", c.export_.smoothing_s = to_double(k, v), fmt(c.export_.smoothing_s)),
  };
  return table;
}

#undef EEGDIFF_KEY

void apply(PipelineConfig& c, const std::string& key, const Values& values) {
  for (const auto& k : keys()) {
    if (k.name == key) {
      k.set(c, key, values);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_absolute() ? p : (base / p).lexically_normal(); }

}  // namespace

std::string protocol_name(HybridProtocol p) {
  return p == HybridProtocol::hybrid ? "hybrid" : "train_synthetic_test_real";
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.push_back(k.name);
  return out;
}

PipelineConfig load_config(const std::optional<fs::path>& file, const std::vector<std::string>& overrides,
                           const fs::path& base_dir) {
  PipelineConfig c;
  fs::path base = base_dir;
  if (file) {
    if (!fs::exists(*file)) throw ConfigError("config file not found: " + file->string());
    std::ifstream in(*file);
    std::vector<CLI::ConfigItem> items;
    try {
      items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
      throw ConfigError("cannot parse " + file->string() + ": " + e.what());
    }
    for (const auto& item : items) {
      if (item.name == "++" || item.name == "--") continue;
      apply(c, item.fullname(), item.inputs);
    }
    base = fs::absolute(*file).parent_path();
  }
  if (const char* env = std::getenv("EEGDIFF_REPORT_DIR"); env && *env) {
    c.paths.report_dir = fs::absolute(env);
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "' is not key=value");
    apply(c, trim(o.substr(0, eq)), {o.substr(eq + 1)});
  }
  c.paths.data_dir = resolve(c.paths.data_dir, base);
  c.paths.work_dir = resolve(c.paths.work_dir, base);
  c.paths.checkpoint_dir = resolve(c.paths.checkpoint_dir, base);
  c.paths.report_dir = resolve(c.paths.report_dir, base);
  if (c.data.train_fraction <= 0.0 || c.data.train_fraction >= 1.0) {
    throw ConfigError("config key 'data.train_fraction' must lie in (0, 1)");
  }
  if (c.classify.folds < 2) throw ConfigError("config key 'classify.folds' must be >= 2");
  if (c.export_.smoothing_s < 0.0) throw ConfigError("config key 'export.smoothing_s' must be >= 0");
  return c;
}

std::string to_toml(const PipelineConfig& config) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    const auto dot = k.name.find('.');
    const auto sec = dot == std::string::npos ? std::string{} : k.name.substr(0, dot);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += k.name.substr(dot == std::string::npos ? 0 : dot + 1) + " = " + k.get(config) + "\n";
  }
  return out;
}

}  // namespace eegdiff::pipeline
