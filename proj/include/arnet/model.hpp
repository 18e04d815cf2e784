#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arnet/frontend.hpp"
#include "arnet/graph.hpp"
#include "arnet/ops.hpp"
#include "arnet/params.hpp"

namespace arnet {

/// E_A: strided conv -> BN+LeakyReLU -> n x (maxpool -> BN+LeakyReLU) -> GRU -> projection.
struct AuxEncoderConfig {
  std::size_t conv_kernel = 3;
  std::size_t conv_stride = 3;
  std::size_t conv_channels = 128;
  std::size_t n_pools = 3;
  std::size_t pool_kernel = 3;
  std::size_t pool_stride = 3;
  std::size_t gru_hidden = 128;
  std::size_t embed_dim = 64;
  /// Linear map gru_hidden -> embed_dim after the GRU. When false the GRU state
  /// is the embedding and embed_dim must equal gru_hidden.
  bool project = true;
};

/// E_M: TDNN stack (dilated conv + BN+LeakyReLU per layer) -> stats pooling -> linear.
struct MainEncoderConfig {
  frontend::FrontendKind frontend = frontend::FrontendKind::mel;
  std::vector<std::size_t> widths{128, 128, 128, 128, 256};
  std::vector<std::size_t> kernels{5, 3, 3, 1, 1};
  std::vector<std::size_t> dilations{1, 2, 3, 1, 1};
  std::size_t embed_dim = 192;
  frontend::MelConfig mel;
  frontend::CqtConfig cqt;
  /// Per-utterance mean/variance normalization of CQT features.
  bool cqt_mvn = true;

  std::size_t feature_bins() const;
};

struct ArNetConfig {
  std::size_t input_len = 64600;
  double sample_rate = 16000.0;
  AuxEncoderConfig aux;
  MainEncoderConfig main;
  std::size_t concat_out = 256;
  double leaky_slope = 0.01;
  std::uint64_t seed = 0;
  ops::BnStats bn_stats = ops::BnStats::batch;

  /// dim_EA: the auxiliary embedding width.
  std::size_t aux_dim() const { return aux.project ? aux.embed_dim : aux.gru_hidden; }

  /// Frame counts entering each aux stage output: conv, pool1, ..., pool_n.
  std::vector<std::size_t> aux_frame_counts() const;
  std::vector<std::size_t> aux_frame_counts(std::size_t input_len) const;
  /// Front-end frames for an input of `samples` samples.
  std::size_t feature_frames(std::size_t samples) const;
  /// TDNN output frames per layer for `frames` input frames (0 if too short).
  std::vector<std::size_t> tdnn_frame_counts(std::size_t frames) const;

  /// Every shape rule except the bottleneck. Throws ConfigError.
  void validate_structure() const;
  /// validate_structure() plus dim_EA < dim_EM.
  void validate() const;

  /// Desk-scale defaults (dim_EA 64, dim_EM 192).
  static ArNetConfig desk();
  /// Small config used for the synthetic ablation: gru 64, dim_EA 32, dim_EM 64.
  static ArNetConfig tiny();
  /// Miniature shapes for finite-difference checks (input 600, 4 channels, gru 8, dims 4/8).
  static ArNetConfig miniature();
  /// Full-size auxiliary/concat encoders: conv(3,3,128), GRU(512) without
  /// projection, dim_EM 192. Violates the bottleneck (512 > 192), so it is
  /// accepted by complexity accounting but rejected by model construction.
  static ArNetConfig full_scale();
};

enum class EmbeddingSource { aux, main, concat };

struct Embedding {
  Tensor values;
  EmbeddingSource source = EmbeddingSource::aux;
};

enum class Branches { arnet, main_only };

/// Resolves parameter names to graph leaves. A mutable store yields
/// differentiable leaves and lets train-mode batch norm update running
/// statistics; a const store yields read-only leaves for inference.
class Binder {
 public:
  Binder(Graph& g, ParamStore& params, ops::BnMode mode, ops::BnStats stats)
      : graph_(g), mutable_(&params), store_(&params), mode_(mode), stats_(stats) {}
  Binder(Graph& g, const ParamStore& params) : graph_(g), store_(&params) {}

  Graph& graph() { return graph_; }
  ops::BnMode mode() const { return mode_; }
  Var param(const std::string& name);
  /// Batch norm with tensors `<prefix>.gain/offset/running_mean/running_var`.
  Var batchnorm(Var x, const std::string& prefix, ops::BnStats stats);
  ops::BnStats stats() const { return stats_; }

 private:
  Graph& graph_;
  ParamStore* mutable_ = nullptr;
  const ParamStore* store_;
  ops::BnMode mode_ = ops::BnMode::infer;
  ops::BnStats stats_ = ops::BnStats::batch;
};

/// Graph handles of the auxiliary encoder's intermediate outputs.
struct AuxStages {
  Var conv;                // raw strided-conv output
  std::vector<Var> pools;  // raw max-pool outputs, before their BN
  Var embedding;
};

/// Detection score: bona fide logit minus spoof logit (higher = more bona fide).
inline double detection_score(std::span<const double> logits) { return logits[0] - logits[1]; }

class ArNet {
 public:
  /// Validates `cfg` (including the bottleneck) and initializes parameters
  /// from `cfg.seed`. In main_only mode the auxiliary branch is zero and frozen.
  explicit ArNet(ArNetConfig cfg, Branches branches = Branches::arnet);
  /// Adopts existing parameters; names and shapes must match the architecture.
  ArNet(ArNetConfig cfg, Branches branches, ParamStore params);

  ArNet(ArNet&&) = default;
  ArNet& operator=(ArNet&&) = default;

  const ArNetConfig& config() const { return cfg_; }
  Branches branches() const { return branches_; }
  bool main_only() const { return branches_ == Branches::main_only; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Repeat-pads or truncates to `input_len`. Throws ShapeError on empty input.
  frontend::Waveform fit_length(const frontend::Waveform& w) const;
  /// Front-end features of an already fitted waveform (CQT optionally normalized).
  frontend::FeatureMap feature_map(const frontend::Waveform& fitted) const;
  Tensor features(const frontend::Waveform& fitted) const;

  // Graph builders over batches: waves [B x L x 1], feats [B x T x F].
  Var build_aux(Binder& b, Var waves, AuxStages* stages = nullptr) const;
  Var build_main(Binder& b, Var feats, Var* pooled = nullptr) const;
  Var build_concat(Binder& b, Var aux, Var main) const;
  Var build_decoder(Binder& b, Var concat) const;
  /// Full network; in main_only mode a zero aux embedding replaces E_A.
  Var build_logits(Binder& b, Var waves, Var feats) const;

  // Single-utterance operations.
  Embedding auxiliary_encode(const frontend::Waveform& w) const;
  Embedding main_encode(const frontend::FeatureMap& f) const;
  Embedding concat_encode(const Embedding& aux, const Embedding& main) const;
  Tensor decode(const Embedding& concat) const;
  /// Infer-mode score of one waveform.
  double forward(const frontend::Waveform& w) const;
  /// Infer-mode scores, evaluated in batches of `batch_size`.
  std::vector<double> score(std::span<const frontend::Waveform> waves, std::size_t batch_size = 32) const;
  /// Raw conv then raw pool outputs of E_A for one waveform ([T_stage x C] each).
  std::vector<Tensor> activation_dump(const frontend::Waveform& w) const;

  /// Stacks fitted waveforms into [B x L x 1].
  Tensor stack_waves(std::span<const frontend::Waveform> fitted) const;
  /// Stacks [T x F] feature tensors into [B x T x F].
  static Tensor stack_features(std::span<const Tensor> feats);

 private:
  void init_params();
  void check_params() const;

  ArNetConfig cfg_;
  Branches branches_;
  ParamStore params_;
  std::optional<frontend::MelExtractor> mel_;
  std::optional<frontend::CqtTransform> cqt_;
};

/// (name, shape, trainable) of every tensor the architecture holds, in creation order.
struct ParamSpec {
  enum class Init { uniform, ones, zeros };
  std::string name;
  Shape shape;
  bool trainable = true;
  Init init = Init::uniform;
  double bound = 0.0;  // uniform init range +-bound
};
std::vector<ParamSpec> param_specs(const ArNetConfig& cfg);

}  // namespace arnet
