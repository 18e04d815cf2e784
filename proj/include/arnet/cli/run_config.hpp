#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arnet/metrics.hpp"
#include "arnet/model.hpp"
#include "arnet/synth.hpp"
#include "arnet/train.hpp"

namespace arnet::cli {

/// Everything a run needs, parsed from flat `key = value` text.
struct RunConfig {
  ArNetConfig model;
  TrainOptions train;
  /// Synthetic split sizes are per class.
  SynthSpec synth;
  std::size_t synth_eval_per_class = 250;
  metrics::AsvOperatingPoint asv;
  std::size_t eval_batch_size = 32;

  RunConfig();
  /// Train and eval synthetic specs; the eval split uses a seed derived from synth.seed.
  SynthSpec train_synth() const;
  SynthSpec eval_synth() const;
};

/// Parses `key = value` lines; `#` starts a comment. The optional `preset`
/// key (desk, tiny, miniature, full_scale) selects the base model before
/// other keys apply, wherever it appears. Unknown or repeated keys, bad
/// values and invalid results throw ConfigError naming the line. With
/// `strict_model`, the model must also satisfy the bottleneck rule.
RunConfig parse_run_config(std::istream& in, const std::string& source = "config", bool strict_model = true);
RunConfig load_run_config(const std::filesystem::path& path, bool strict_model = true);

/// Every accepted key in canonical order.
std::vector<std::string> run_config_keys();
/// Canonical `key = value` text; parsing it yields the same RunConfig.
std::string render_run_config(const RunConfig& cfg);

ArNetConfig preset_by_name(const std::string& name);

/// synth.* / asv.* / eval.* values stored alongside a trained model.
std::map<std::string, double> run_metadata(const RunConfig& cfg);
/// Restores the values written by run_metadata onto `cfg`; missing keys keep their value.
void apply_run_metadata(RunConfig& cfg, const std::map<std::string, double>& meta);

}  // namespace arnet::cli
