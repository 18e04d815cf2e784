#include "arnet/cli/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "arnet/cli/run_config.hpp"
#include "arnet/complexity.hpp"
#include "arnet/error.hpp"
#include "arnet/formats.hpp"
#include "arnet/gradcheck.hpp"
#include "arnet/model_io.hpp"
#include "arnet/protocol.hpp"
#include "arnet/synth.hpp"
#include "arnet/train.hpp"
#include "arnet/wav.hpp"

namespace arnet::cli {

namespace {

namespace fs = std::filesystem;

std::string fixed(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

RunConfig config_or_default(const std::string& path, bool strict_model) {
  if (path.empty()) return RunConfig{};
  return load_run_config(path, strict_model);
}

std::vector<LabeledWave> resolve_data(const std::string& data, const SynthSpec& synth, const ArNetConfig& model) {
  std::vector<LabeledWave> out;
  if (data == "synth") {
    synth.validate(model.main.frontend == frontend::FrontendKind::mel ? model.main.mel.n_fft : 1);
    out = synth_dataset(synth);
  } else {
    out = load_dataset(data);
  }
  for (const auto& item : out) {
    if (item.wave.sample_rate != model.sample_rate) {
      throw DataError("utterance " + item.wave.utt_id + " has sample rate " + std::to_string(item.wave.sample_rate) +
                      ", model expects " + std::to_string(model.sample_rate));
    }
  }
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw FormatError("cannot create directory " + dir.string());
}

struct FeaturizeArgs {
  std::string wav, frontend = "mel", out, config;
};

int cmd_featurize(const FeaturizeArgs& a, std::ostream& out) {
  const RunConfig cfg = config_or_default(a.config, false);
  const auto kind = frontend::frontend_kind_from_string(a.frontend);
  const frontend::Waveform w = read_wav(a.wav);
  w.validate();
  const frontend::FeatureMap f = kind == frontend::FrontendKind::mel
                                     ? frontend::MelExtractor(cfg.model.main.mel, w.sample_rate)(w)
                                     : frontend::CqtTransform(cfg.model.main.cqt, w.sample_rate)(w);
  write_features(a.out, f.values);
  out << "rows=" << f.frames() << " cols=" << f.bins() << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string config, data = "synth", out, mode = "arnet";
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = config_or_default(a.config, true);
  Branches branches;
  if (a.mode == "arnet") branches = Branches::arnet;
  else if (a.mode == "main_only") branches = Branches::main_only;
  else throw ConfigError("--mode must be arnet or main_only, got '" + a.mode + "'");
  const auto data = resolve_data(a.data, cfg.train_synth(), cfg.model);
  ArNet model(cfg.model, branches);
  const auto history = train(model, data, cfg.train);
  for (const auto& h : history) err << "epoch " << h.epoch << " mean_loss " << fixed("%.6f", h.mean_loss) << "\n";
  save_model(a.out, model, run_metadata(cfg));
  out << "final_loss=" << fixed("%.6f", history.empty() ? 0.0 : history.back().mean_loss) << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string model, data = "synth", scores_out, config;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  LoadedModel loaded = load_model(a.model);
  RunConfig cfg;
  cfg.model = loaded.model.config();
  apply_run_metadata(cfg, loaded.meta);
  if (!a.config.empty()) {
    const RunConfig over = load_run_config(a.config, true);
    cfg.synth = over.synth;
    cfg.synth_eval_per_class = over.synth_eval_per_class;
    cfg.asv = over.asv;
    cfg.eval_batch_size = over.eval_batch_size;
  }
  const auto data = resolve_data(a.data, cfg.eval_synth(), cfg.model);
  std::vector<frontend::Waveform> waves;
  for (const auto& item : data) waves.push_back(item.wave);
  const auto scores = loaded.model.score(waves, cfg.eval_batch_size);
  metrics::ScoreSet set;
  for (std::size_t i = 0; i < data.size(); ++i) set.push_back({data[i].wave.utt_id, scores[i], data[i].label});
  write_scores(a.scores_out, set);
  const auto report = metrics::evaluate(std::move(set), cfg.asv);
  out << metrics::format_eer_line(report.eer) << "\n" << metrics::format_tdcf_line(report.min_tdcf) << "\n";
  return kExitOk;
}

struct ComplexityArgs {
  std::string config, preset;
  std::optional<std::size_t> input_len;
  bool csv = false;
};

int cmd_complexity(const ComplexityArgs& a, std::ostream& out) {
  ArNetConfig model = config_or_default(a.config, false).model;
  if (!a.preset.empty()) {
    if (!a.config.empty()) throw ConfigError("--preset and --config are mutually exclusive");
    model = preset_by_name(a.preset);
  }
  const auto report = complexity::count_macs(model, a.input_len.value_or(model.input_len));
  out << (a.csv ? complexity::render_csv(report) : complexity::render_table(report));
  return kExitOk;
}

struct GradcheckArgs {
  gradcheck::Options opts;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  const auto report = gradcheck::run(a.opts);
  for (const auto& r : report.ops) {
    char line[160];
    std::snprintf(line, sizeof line, "%-22s instances=%-4zu max_rel_error=%.3e %s\n", r.op.c_str(), r.instances,
                  r.max_rel_error, r.passed ? "PASS" : "FAIL");
    out << line;
  }
  out << "seconds=" << fixed("%.2f", report.seconds) << "\n";
  if (report.passed()) return kExitOk;
  for (const auto& r : report.ops) {
    if (!r.passed) err << "gradient check failed for " << r.op << "\n";
  }
  return kExitVerifyFailed;
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::string out, config;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  RunConfig cfg = config_or_default(a.config, false);
  SynthSpec spec = cfg.train_synth();
  spec.seed = a.seed;
  spec.n_per_class = a.n;
  spec.validate(1);
  const auto data = synth_dataset(spec);
  ensure_dir(a.out);
  for (const auto& item : data) write_wav(fs::path(a.out) / (item.wave.utt_id + ".wav"), item.wave);
  write_protocol(fs::path(a.out) / "protocol.txt", synth_protocol(spec, data));
  out << "utterances=" << data.size() << "\n";
  return kExitOk;
}

struct DumpArgs {
  std::string wav, model, out;
};

int cmd_dump(const DumpArgs& a, std::ostream& out) {
  const LoadedModel loaded = load_model(a.model);
  const frontend::Waveform w = read_wav(a.wav);
  w.validate();
  const auto stages = loaded.model.activation_dump(w);
  ensure_dir(a.out);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string name = i == 0 ? "conv" : "pool" + std::to_string(i);
    write_features(fs::path(a.out) / (name + ".arnf"), stages[i]);
    out << name << " rows=" << stages[i].dim(0) << " cols=" << stages[i].dim(1) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ARNet anti-spoofing toolkit", args.empty() ? "arnet" : args[0]};
  app.require_subcommand(1);

  FeaturizeArgs fa;
  auto* featurize = app.add_subcommand("featurize", "Write log-mel or CQT features of a WAV file (ARNF)");
  featurize->add_option("--wav", fa.wav, "Input 16-bit PCM mono WAV")->required();
  featurize->add_option("--frontend", fa.frontend, "mel or cqt")->check(CLI::IsMember({"mel", "cqt"}));
  featurize->add_option("--out", fa.out, "Output ARNF file")->required();
  featurize->add_option("--config", fa.config, "Run config supplying front-end settings");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write it (ARNM)");
  train_cmd->add_option("--config", ta.config, "Run config");
  train_cmd->add_option("--data", ta.data, "Dataset directory or 'synth'");
  train_cmd->add_option("--out", ta.out, "Output model file")->required();
  train_cmd->add_option("--mode", ta.mode, "arnet or main_only");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score a dataset and report EER and min t-DCF");
  eval->add_option("--model", ea.model, "Model file")->required();
  eval->add_option("--data", ea.data, "Dataset directory or 'synth'");
  eval->add_option("--scores-out", ea.scores_out, "Output scores file")->required();
  eval->add_option("--config", ea.config, "Run config overriding stored synth/asv/eval settings");

  ComplexityArgs ca;
  auto* complexity_cmd = app.add_subcommand("complexity", "Per-layer parameter and MAC counts");
  complexity_cmd->add_option("--config", ca.config, "Run config");
  complexity_cmd->add_option("--preset", ca.preset, "desk, tiny, miniature or full_scale");
  complexity_cmd->add_option("--input-len", ca.input_len, "Input length in samples");
  complexity_cmd->add_flag("--csv", ca.csv, "Print layer,params,macs lines");

  GradcheckArgs ga;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  grad->add_option("--instances", ga.opts.instances, "Random instances per op");
  grad->add_option("--seed", ga.opts.seed, "Seed of the random instances");
  grad->add_option("--inject-fault", ga.opts.inject_fault, "Perturb one op's analytic gradient")->group("");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (WAVs plus protocol.txt)");
  synth->add_option("--seed", sa.seed, "Dataset seed")->required();
  synth->add_option("--n", sa.n, "Utterances per class")->required();
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--config", sa.config, "Run config supplying synth.* settings");

  DumpArgs da;
  auto* dump = app.add_subcommand("dump-activations", "Write the auxiliary conv and pool outputs (ARNF)");
  dump->add_option("--wav", da.wav, "Input WAV")->required();
  dump->add_option("--model", da.model, "Model file")->required();
  dump->add_option("--out", da.out, "Output directory")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("arnet");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*featurize) return cmd_featurize(fa, out);
    if (*train_cmd) return cmd_train(ta, out, err);
    if (*eval) return cmd_eval(ea, out);
    if (*complexity_cmd) return cmd_complexity(ca, out);
    if (*grad) return cmd_gradcheck(ga, out, err);
    if (*synth) return cmd_synth(sa, out);
    if (*dump) return cmd_dump(da, out);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::domain_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace arnet::cli
