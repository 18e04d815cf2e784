#include "arnet/cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "arnet/error.hpp"
#include "arnet/rng.hpp"

namespace arnet::cli {

namespace {

constexpr std::uint64_t kEvalSplitStream = 1000;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected a non-negative integer, got '" + v + "'");
  return out;
}

std::size_t to_size(const std::string& v) { return static_cast<std::size_t>(to_u64(v)); }

double to_double(const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size() || !std::isfinite(out)) throw ConfigError("expected a finite number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_list(const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(to_size(trim(item)));
  if (out.empty()) throw ConfigError("expected a comma-separated list, got '" + v + "'");
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SIZE_KEY(name, field) \
  Key { name, [](RunConfig& c, const std::string& v) { c.field = to_size(v); }, [](const RunConfig& c) { return std::to_string(c.field); } }
#define U64_KEY(name, field) \
  Key { name, [](RunConfig& c, const std::string& v) { c.field = to_u64(v); }, [](const RunConfig& c) { return std::to_string(c.field); } }
#define REAL_KEY(name, field) \
  Key { name, [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, [](const RunConfig& c) { return fmt_double(c.field); } }
#define BOOL_KEY(name, field) \
  Key { name, [](RunConfig& c, const std::string& v) { c.field = to_bool(v); }, [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); } }
#define LIST_KEY(name, field) \
  Key { name, [](RunConfig& c, const std::string& v) { c.field = to_list(v); }, [](const RunConfig& c) { return fmt_list(c.field); } }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      SIZE_KEY("input_len", model.input_len),
      REAL_KEY("sample_rate", model.sample_rate),
      SIZE_KEY("aux.conv_kernel", model.aux.conv_kernel),
      SIZE_KEY("aux.conv_stride", model.aux.conv_stride),
      SIZE_KEY("aux.conv_channels", model.aux.conv_channels),
      SIZE_KEY("aux.n_pools", model.aux.n_pools),
      SIZE_KEY("aux.pool_kernel", model.aux.pool_kernel),
      SIZE_KEY("aux.pool_stride", model.aux.pool_stride),
      SIZE_KEY("aux.gru_hidden", model.aux.gru_hidden),
      SIZE_KEY("aux.embed_dim", model.aux.embed_dim),
      BOOL_KEY("aux.project", model.aux.project),
      Key{"main.frontend",
          [](RunConfig& c, const std::string& v) { c.model.main.frontend = frontend::frontend_kind_from_string(v); },
          [](const RunConfig& c) { return std::string(frontend::to_string(c.model.main.frontend)); }},
      LIST_KEY("main.widths", model.main.widths),
      LIST_KEY("main.kernels", model.main.kernels),
      LIST_KEY("main.dilations", model.main.dilations),
      SIZE_KEY("main.embed_dim", model.main.embed_dim),
      SIZE_KEY("mel.n_fft", model.main.mel.n_fft),
      SIZE_KEY("mel.hop", model.main.mel.hop),
      SIZE_KEY("mel.n_mels", model.main.mel.n_mels),
      REAL_KEY("mel.fmin", model.main.mel.fmin),
      REAL_KEY("mel.fmax", model.main.mel.fmax),
      REAL_KEY("cqt.fmin", model.main.cqt.fmin),
      SIZE_KEY("cqt.bins_per_octave", model.main.cqt.bins_per_octave),
      SIZE_KEY("cqt.n_bins", model.main.cqt.n_bins),
      SIZE_KEY("cqt.hop", model.main.cqt.hop),
      BOOL_KEY("cqt.mvn", model.main.cqt_mvn),
      SIZE_KEY("concat_out", model.concat_out),
      REAL_KEY("leaky_slope", model.leaky_slope),
      U64_KEY("seed", model.seed),
      Key{"bn_stats",
          [](RunConfig& c, const std::string& v) {
            if (v == "batch") c.model.bn_stats = ops::BnStats::batch;
            else if (v == "utterance") c.model.bn_stats = ops::BnStats::utterance;
            else throw ConfigError("expected batch or utterance, got '" + v + "'");
          },
          [](const RunConfig& c) { return std::string(c.model.bn_stats == ops::BnStats::batch ? "batch" : "utterance"); }},
      SIZE_KEY("train.epochs", train.epochs),
      SIZE_KEY("train.batch_size", train.batch_size),
      REAL_KEY("train.lr", train.lr),
      U64_KEY("train.seed", train.seed),
      U64_KEY("synth.seed", synth.seed),
      SIZE_KEY("synth.n_train", synth.n_per_class),
      SIZE_KEY("synth.n_eval", synth_eval_per_class),
      REAL_KEY("synth.duration_s", synth.duration_s),
      Key{"synth.artifact", [](RunConfig& c, const std::string& v) { c.synth.artifact = spoof_artifact_from_string(v); },
          [](const RunConfig& c) { return std::string(to_string(c.synth.artifact)); }},
      REAL_KEY("synth.noise_level", synth.noise_level),
      REAL_KEY("asv.p_miss", asv.p_miss_asv),
      REAL_KEY("asv.p_fa", asv.p_fa_asv),
      REAL_KEY("asv.p_miss_spoof", asv.p_miss_spoof_asv),
      REAL_KEY("asv.pi_tar", asv.pi_tar),
      REAL_KEY("asv.pi_non", asv.pi_non),
      REAL_KEY("asv.pi_spoof", asv.pi_spoof),
      REAL_KEY("asv.c_miss_asv", asv.c_miss_asv),
      REAL_KEY("asv.c_fa_asv", asv.c_fa_asv),
      REAL_KEY("asv.c_miss_cm", asv.c_miss_cm),
      REAL_KEY("asv.c_fa_cm", asv.c_fa_cm),
      SIZE_KEY("eval.batch_size", eval_batch_size),
  };
  return table;
}

#undef SIZE_KEY
#undef U64_KEY
#undef REAL_KEY
#undef BOOL_KEY
#undef LIST_KEY

const Key* find_key(const std::string& name) {
  for (const auto& k : keys()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

}  // namespace

RunConfig::RunConfig() { synth.n_per_class = 1000; }

SynthSpec RunConfig::train_synth() const {
  SynthSpec s = synth;
  s.sample_rate = model.sample_rate;
  return s;
}

SynthSpec RunConfig::eval_synth() const {
  SynthSpec s = train_synth();
  s.seed = mix_seed(synth.seed, kEvalSplitStream);
  s.n_per_class = synth_eval_per_class;
  return s;
}

ArNetConfig preset_by_name(const std::string& name) {
  if (name == "desk") return ArNetConfig::desk();
  if (name == "tiny") return ArNetConfig::tiny();
  if (name == "miniature") return ArNetConfig::miniature();
  if (name == "full_scale") return ArNetConfig::full_scale();
  throw ConfigError("unknown preset '" + name + "' (expected desk, tiny, miniature or full_scale)");
}

RunConfig parse_run_config(std::istream& in, const std::string& source, bool strict_model) {
  struct Entry {
    std::size_t line;
    std::string key, value;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::string preset;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    Entry e{line_no, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
    if (e.key.empty()) throw ConfigError(where + "missing key");
    if (e.value.empty()) throw ConfigError(where + "missing value for " + e.key);
    if (!seen.insert(e.key).second) throw ConfigError(where + "duplicate key " + e.key);
    if (e.key == "preset") {
      preset = e.value;
      continue;
    }
    if (!find_key(e.key)) throw ConfigError(where + "unknown key " + e.key);
    entries.push_back(std::move(e));
  }

  RunConfig cfg;
  if (!preset.empty()) cfg.model = preset_by_name(preset);
  for (const auto& e : entries) {
    try {
      find_key(e.key)->set(cfg, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(source + ":" + std::to_string(e.line) + ": " + e.key + ": " + err.what());
    }
  }
  try {
    if (strict_model) cfg.model.validate();
    else cfg.model.validate_structure();
    cfg.asv.validate();
    if (cfg.train.batch_size < 2) throw ConfigError("train.batch_size must be at least 2");
    if (!(cfg.train.lr > 0.0)) throw ConfigError("train.lr must be positive");
    if (cfg.eval_batch_size == 0) throw ConfigError("eval.batch_size must be positive");
    cfg.train_synth().validate(1);
    cfg.eval_synth().validate(1);
  } catch (const ConfigError& err) {
    throw ConfigError(source + ": " + err.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, bool strict_model) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_run_config(in, path.string(), strict_model);
}

std::vector<std::string> run_config_keys() {
  std::vector<std::string> out{"preset"};
  for (const auto& k : keys()) out.emplace_back(k.name);
  return out;
}

std::string render_run_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
  return out;
}

std::map<std::string, double> run_metadata(const RunConfig& cfg) {
  return {
      {"synth.seed.lo", static_cast<double>(cfg.synth.seed & 0xFFFFFFFFu)},
      {"synth.seed.hi", static_cast<double>(cfg.synth.seed >> 32)},
      {"synth.n_eval", static_cast<double>(cfg.synth_eval_per_class)},
      {"synth.duration_s", cfg.synth.duration_s},
      {"synth.artifact", static_cast<double>(cfg.synth.artifact)},
      {"synth.noise_level", cfg.synth.noise_level},
      {"asv.p_miss", cfg.asv.p_miss_asv},
      {"asv.p_fa", cfg.asv.p_fa_asv},
      {"asv.p_miss_spoof", cfg.asv.p_miss_spoof_asv},
      {"asv.pi_tar", cfg.asv.pi_tar},
      {"asv.pi_non", cfg.asv.pi_non},
      {"asv.pi_spoof", cfg.asv.pi_spoof},
      {"asv.c_miss_asv", cfg.asv.c_miss_asv},
      {"asv.c_fa_asv", cfg.asv.c_fa_asv},
      {"asv.c_miss_cm", cfg.asv.c_miss_cm},
      {"asv.c_fa_cm", cfg.asv.c_fa_cm},
      {"eval.batch_size", static_cast<double>(cfg.eval_batch_size)},
  };
}

void apply_run_metadata(RunConfig& cfg, const std::map<std::string, double>& meta) {
  auto real = [&](const char* key, double& field) {
    if (auto it = meta.find(key); it != meta.end()) field = it->second;
  };
  auto count = [&](const char* key) -> std::optional<std::uint64_t> {
    auto it = meta.find(key);
    if (it == meta.end()) return std::nullopt;
    if (!(it->second >= 0.0) || it->second != std::floor(it->second)) {
      throw FormatError(std::string("model metadata ") + key + " is not a non-negative integer");
    }
    return static_cast<std::uint64_t>(it->second);
  };
  const auto lo = count("synth.seed.lo");
  const auto hi = count("synth.seed.hi");
  if (lo && hi) cfg.synth.seed = *lo | *hi << 32;
  if (auto n = count("synth.n_eval")) cfg.synth_eval_per_class = *n;
  if (auto a = count("synth.artifact")) {
    if (*a > 2) throw FormatError("model metadata synth.artifact is out of range");
    cfg.synth.artifact = static_cast<SpoofArtifact>(*a);
  }
  if (auto b = count("eval.batch_size")) cfg.eval_batch_size = *b;
  real("synth.duration_s", cfg.synth.duration_s);
  real("synth.noise_level", cfg.synth.noise_level);
  real("asv.p_miss", cfg.asv.p_miss_asv);
  real("asv.p_fa", cfg.asv.p_fa_asv);
  real("asv.p_miss_spoof", cfg.asv.p_miss_spoof_asv);
  real("asv.pi_tar", cfg.asv.pi_tar);
  real("asv.pi_non", cfg.asv.pi_non);
  real("asv.pi_spoof", cfg.asv.pi_spoof);
  real("asv.c_miss_asv", cfg.asv.c_miss_asv);
  real("asv.c_fa_asv", cfg.asv.c_fa_asv);
  real("asv.c_miss_cm", cfg.asv.c_miss_cm);
  real("asv.c_fa_cm", cfg.asv.c_fa_cm);
}

}  // namespace arnet::cli
