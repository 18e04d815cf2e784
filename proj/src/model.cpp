#include "arnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "arnet/error.hpp"
#include "arnet/rng.hpp"

namespace arnet {

using frontend::FeatureMap;
using frontend::FrontendKind;
using frontend::Waveform;

std::size_t MainEncoderConfig::feature_bins() const {
  return frontend == FrontendKind::mel ? mel.n_mels : cqt.n_bins;
}

std::vector<std::size_t> ArNetConfig::aux_frame_counts() const { return aux_frame_counts(input_len); }

std::vector<std::size_t> ArNetConfig::aux_frame_counts(std::size_t len) const {
  std::vector<std::size_t> counts;
  if (aux.conv_kernel == 0 || aux.conv_stride == 0 || len < aux.conv_kernel) return counts;
  std::size_t t = (len - aux.conv_kernel) / aux.conv_stride + 1;
  counts.push_back(t);
  for (std::size_t i = 0; i < aux.n_pools; ++i) {
    if (aux.pool_kernel == 0 || aux.pool_stride == 0 || t < aux.pool_kernel) return counts;
    t = (t - aux.pool_kernel) / aux.pool_stride + 1;
    counts.push_back(t);
  }
  return counts;
}

std::size_t ArNetConfig::feature_frames(std::size_t samples) const {
  if (main.frontend == FrontendKind::mel) {
    if (main.mel.hop == 0 || samples < main.mel.n_fft) return 0;
    return (samples - main.mel.n_fft) / main.mel.hop + 1;
  }
  if (main.cqt.hop == 0) return 0;
  return samples / main.cqt.hop + 1;
}

std::vector<std::size_t> ArNetConfig::tdnn_frame_counts(std::size_t frames) const {
  std::vector<std::size_t> counts;
  std::size_t t = frames;
  for (std::size_t i = 0; i < main.kernels.size(); ++i) {
    const std::size_t span = main.dilations[i] * (main.kernels[i] - 1) + 1;
    t = t >= span ? t - span + 1 : 0;
    counts.push_back(t);
  }
  return counts;
}

void ArNetConfig::validate_structure() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(sample_rate > 0.0)) fail("sample_rate must be positive");
  if (aux.conv_kernel == 0 || aux.conv_stride == 0 || aux.conv_channels == 0) fail("aux conv sizes must be positive");
  if (aux.pool_kernel == 0 || aux.pool_stride == 0) fail("aux pool sizes must be positive");
  if (aux.gru_hidden == 0 || aux.embed_dim == 0) fail("aux gru_hidden and embed_dim must be positive");
  if (!aux.project && aux.embed_dim != aux.gru_hidden) {
    fail("aux embed_dim must equal gru_hidden when the projection is disabled");
  }
  if (input_len < aux.conv_kernel) fail("input_len " + std::to_string(input_len) + " is shorter than the conv kernel");
  const auto counts = aux_frame_counts();
  if (counts.size() != aux.n_pools + 1) fail("input_len " + std::to_string(input_len) + " is too short for the aux pooling stack");

  if (main.widths.empty()) fail("main encoder needs at least one TDNN layer");
  if (main.widths.size() != main.kernels.size() || main.widths.size() != main.dilations.size()) {
    fail("main widths, kernels and dilations must have the same length");
  }
  for (std::size_t i = 0; i < main.widths.size(); ++i) {
    if (main.widths[i] == 0 || main.kernels[i] == 0 || main.dilations[i] == 0) fail("main TDNN sizes must be positive");
  }
  if (main.embed_dim == 0) fail("main embed_dim must be positive");
  if (main.frontend == FrontendKind::mel) {
    const auto& m = main.mel;
    if (m.n_fft < 2 || m.hop == 0 || m.n_mels < 2) fail("mel n_fft >= 2, hop > 0 and n_mels >= 2 are required");
    if (!(m.fmin >= 0.0) || !(m.fmin < m.fmax) || m.fmax > sample_rate / 2.0) fail("mel frequency range is invalid");
  } else {
    const auto& c = main.cqt;
    if (c.bins_per_octave == 0 || c.n_bins == 0 || c.hop == 0 || !(c.fmin > 0.0)) fail("cqt sizes must be positive");
    const double fmax = c.fmin * std::pow(2.0, static_cast<double>(c.n_bins) / static_cast<double>(c.bins_per_octave));
    if (fmax > sample_rate / 2.0) fail("cqt top frequency exceeds Nyquist");
  }
  const std::size_t frames = feature_frames(input_len);
  const auto tdnn = tdnn_frame_counts(frames);
  if (frames == 0 || tdnn.back() == 0) {
    fail("input_len " + std::to_string(input_len) + " gives " + std::to_string(frames) +
         " feature frames, too few for the TDNN context");
  }
  if (concat_out == 0) fail("concat_out must be positive");
  if (!std::isfinite(leaky_slope)) fail("leaky_slope must be finite");
}

void ArNetConfig::validate() const {
  validate_structure();
  if (aux_dim() >= main.embed_dim) {
    throw ConfigError("bottleneck violated: dim_EA = " + std::to_string(aux_dim()) + " must be smaller than dim_EM = " +
                      std::to_string(main.embed_dim));
  }
}

ArNetConfig ArNetConfig::desk() { return ArNetConfig{}; }

ArNetConfig ArNetConfig::tiny() {
  ArNetConfig c;
  c.input_len = 8000;
  c.aux.conv_channels = 16;
  c.aux.gru_hidden = 64;
  c.aux.embed_dim = 32;
  c.main.widths = {32, 32, 32, 32, 64};
  c.main.embed_dim = 64;
  return c;
}

ArNetConfig ArNetConfig::miniature() {
  ArNetConfig c;
  c.input_len = 600;
  c.aux.conv_channels = 4;
  c.aux.gru_hidden = 8;
  c.aux.embed_dim = 4;
  c.main.widths = {6, 6, 6, 6, 8};
  c.main.embed_dim = 8;
  c.main.mel.n_fft = 64;
  c.main.mel.hop = 16;
  c.main.mel.n_mels = 8;
  c.concat_out = 6;
  return c;
}

ArNetConfig ArNetConfig::full_scale() {
  ArNetConfig c;
  c.input_len = 64600;
  c.aux.conv_channels = 128;
  c.aux.gru_hidden = 512;
  c.aux.embed_dim = 512;
  c.aux.project = false;
  c.main.widths = {512, 512, 512, 512, 1500};
  c.main.embed_dim = 192;
  c.concat_out = 256;
  return c;
}

namespace {

using Init = ParamSpec::Init;

void add_bn(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t c) {
  out.push_back({prefix + ".gain", {c}, true, Init::ones});
  out.push_back({prefix + ".offset", {c}, true, Init::zeros});
  out.push_back({prefix + ".running_mean", {c}, false, Init::zeros});
  out.push_back({prefix + ".running_var", {c}, false, Init::ones});
}

void add_conv(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t c_out, std::size_t c_in,
              std::size_t k) {
  const double bound = std::sqrt(1.0 / static_cast<double>(c_in * k));
  out.push_back({prefix + ".weight", {c_out, c_in, k}, true, Init::uniform, bound});
  out.push_back({prefix + ".bias", {c_out}, true, Init::uniform, bound});
}

void add_linear(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d_out, std::size_t d_in) {
  const double bound = std::sqrt(1.0 / static_cast<double>(d_in));
  out.push_back({prefix + ".weight", {d_out, d_in}, true, Init::uniform, bound});
  out.push_back({prefix + ".bias", {d_out}, true, Init::uniform, bound});
}

std::uint64_t stream_of(const std::string& name) {
  if (name.rfind("aux.", 0) == 0) return 1;
  if (name.rfind("main.", 0) == 0) return 2;
  if (name.rfind("concat.", 0) == 0) return 3;
  return 4;
}

}  // namespace

std::vector<ParamSpec> param_specs(const ArNetConfig& cfg) {
  std::vector<ParamSpec> out;
  const auto& a = cfg.aux;
  add_conv(out, "aux.conv", a.conv_channels, 1, a.conv_kernel);
  add_bn(out, "aux.bn0", a.conv_channels);
  for (std::size_t i = 1; i <= a.n_pools; ++i) add_bn(out, "aux.pool" + std::to_string(i) + ".bn", a.conv_channels);
  {
    const std::size_t h = a.gru_hidden;
    const double bound_in = std::sqrt(1.0 / static_cast<double>(a.conv_channels));
    const double bound_h = std::sqrt(1.0 / static_cast<double>(h));
    out.push_back({"aux.gru.w_ih", {3 * h, a.conv_channels}, true, Init::uniform, bound_in});
    out.push_back({"aux.gru.w_hh", {3 * h, h}, true, Init::uniform, bound_h});
    out.push_back({"aux.gru.b_ih", {3 * h}, true, Init::uniform, bound_h});
    out.push_back({"aux.gru.b_hh", {3 * h}, true, Init::uniform, bound_h});
  }
  if (a.project) add_linear(out, "aux.proj", a.embed_dim, a.gru_hidden);

  const auto& m = cfg.main;
  std::size_t c_in = m.feature_bins();
  for (std::size_t i = 0; i < m.widths.size(); ++i) {
    const std::string prefix = "main.tdnn" + std::to_string(i + 1);
    add_conv(out, prefix + ".conv", m.widths[i], c_in, m.kernels[i]);
    add_bn(out, prefix + ".bn", m.widths[i]);
    c_in = m.widths[i];
  }
  add_linear(out, "main.embed", m.embed_dim, 2 * c_in);

  const std::size_t concat_in = cfg.aux_dim() + m.embed_dim;
  add_bn(out, "concat.bn", concat_in);
  add_conv(out, "concat.conv", cfg.concat_out, concat_in, 1);
  add_linear(out, "decoder", 2, cfg.concat_out);
  return out;
}

Var Binder::param(const std::string& name) {
  if (mutable_) return graph_.parameter(mutable_->get(name));
  return graph_.view(store_->get(name));
}

Var Binder::batchnorm(Var x, const std::string& prefix, ops::BnStats stats) {
  Var gain = param(prefix + ".gain");
  Var offset = param(prefix + ".offset");
  if (mutable_) {
    ops::BnRunning running{&mutable_->get(prefix + ".running_mean"), &mutable_->get(prefix + ".running_var")};
    return ops::batchnorm(graph_, x, gain, offset, running, mode_, stats);
  }
  return ops::batchnorm_infer(graph_, x, gain, offset, store_->get(prefix + ".running_mean"),
                              store_->get(prefix + ".running_var"));
}

ArNet::ArNet(ArNetConfig cfg, Branches branches) : cfg_(std::move(cfg)), branches_(branches) {
  cfg_.validate();
  init_params();
  if (cfg_.main.frontend == FrontendKind::mel) mel_.emplace(cfg_.main.mel, cfg_.sample_rate);
  else cqt_.emplace(cfg_.main.cqt, cfg_.sample_rate);
}

ArNet::ArNet(ArNetConfig cfg, Branches branches, ParamStore params)
    : cfg_(std::move(cfg)), branches_(branches), params_(std::move(params)) {
  cfg_.validate();
  check_params();
  if (main_only()) params_.freeze_prefix("aux.");
  if (cfg_.main.frontend == FrontendKind::mel) mel_.emplace(cfg_.main.mel, cfg_.sample_rate);
  else cqt_.emplace(cfg_.main.cqt, cfg_.sample_rate);
}

void ArNet::init_params() {
  Rng streams[4] = {Rng(mix_seed(cfg_.seed, 1)), Rng(mix_seed(cfg_.seed, 2)), Rng(mix_seed(cfg_.seed, 3)),
                    Rng(mix_seed(cfg_.seed, 4))};
  for (const auto& spec : param_specs(cfg_)) {
    Tensor t(spec.shape);
    const bool zero_aux = main_only() && spec.trainable && spec.name.rfind("aux.", 0) == 0;
    if (zero_aux) {
      t.fill(0.0);
    } else if (spec.init == ParamSpec::Init::ones) {
      t.fill(1.0);
    } else if (spec.init == ParamSpec::Init::uniform) {
      Rng& rng = streams[stream_of(spec.name) - 1];
      for (auto& v : t.data()) v = rng.uniform(-spec.bound, spec.bound);
    }
    params_.add(spec.name, std::move(t), spec.trainable);
  }
  if (main_only()) params_.freeze_prefix("aux.");
}

void ArNet::check_params() const {
  const auto specs = param_specs(cfg_);
  for (const auto& spec : specs) {
    if (!params_.contains(spec.name)) throw FormatError("model is missing parameter " + spec.name);
    const Tensor& t = params_.get(spec.name);
    if (t.shape() != spec.shape) {
      throw FormatError("parameter " + spec.name + " has shape " + t.shape_string() + ", expected " +
                        shape_to_string(spec.shape));
    }
    if (!t.all_finite()) throw FormatError("parameter " + spec.name + " holds non-finite values");
  }
  if (params_.size() != specs.size()) throw FormatError("model holds parameters not used by its architecture");
}

Waveform ArNet::fit_length(const Waveform& w) const {
  if (w.samples.empty()) throw ShapeError("waveform '" + w.utt_id + "' is empty");
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.utt_id = w.utt_id;
  out.samples.resize(cfg_.input_len);
  for (std::size_t i = 0; i < cfg_.input_len; ++i) out.samples[i] = w.samples[i % w.samples.size()];
  return out;
}

FeatureMap ArNet::feature_map(const Waveform& fitted) const {
  if (fitted.size() != cfg_.input_len) {
    throw ShapeError("feature_map expects " + std::to_string(cfg_.input_len) + " samples, got " +
                     std::to_string(fitted.size()));
  }
  return mel_ ? (*mel_)(fitted) : (*cqt_)(fitted);
}

Tensor ArNet::features(const Waveform& fitted) const {
  FeatureMap f = feature_map(fitted);
  if (f.kind == FrontendKind::cqt && cfg_.main.cqt_mvn) return frontend::mean_variance_normalize(f);
  return std::move(f.values);
}

Var ArNet::build_aux(Binder& b, Var waves, AuxStages* stages) const {
  Graph& g = b.graph();
  const auto& a = cfg_.aux;
  Var x = ops::conv1d(g, waves, b.param("aux.conv.weight"), b.param("aux.conv.bias"), a.conv_stride);
  if (stages) stages->conv = x;
  x = ops::leaky_relu(g, b.batchnorm(x, "aux.bn0", b.stats()), cfg_.leaky_slope);
  for (std::size_t i = 1; i <= a.n_pools; ++i) {
    x = ops::maxpool1d(g, x, a.pool_kernel, a.pool_stride);
    if (stages) stages->pools.push_back(x);
    x = ops::leaky_relu(g, b.batchnorm(x, "aux.pool" + std::to_string(i) + ".bn", b.stats()), cfg_.leaky_slope);
  }
  x = ops::gru(g, x,
               {b.param("aux.gru.w_ih"), b.param("aux.gru.w_hh"), b.param("aux.gru.b_ih"), b.param("aux.gru.b_hh")});
  if (a.project) x = ops::linear(g, x, b.param("aux.proj.weight"), b.param("aux.proj.bias"));
  if (stages) stages->embedding = x;
  return x;
}

Var ArNet::build_main(Binder& b, Var feats, Var* pooled) const {
  Graph& g = b.graph();
  const auto& m = cfg_.main;
  const Tensor& in = g.value(feats);
  if (in.shape().back() != m.feature_bins()) {
    throw ShapeError("main encoder expects " + std::to_string(m.feature_bins()) + " " +
                     std::string(frontend::to_string(m.frontend)) + " bins, got features " + in.shape_string());
  }
  Var x = feats;
  for (std::size_t i = 0; i < m.widths.size(); ++i) {
    const std::string prefix = "main.tdnn" + std::to_string(i + 1);
    x = ops::conv1d(g, x, b.param(prefix + ".conv.weight"), b.param(prefix + ".conv.bias"), 1, m.dilations[i]);
    x = ops::leaky_relu(g, b.batchnorm(x, prefix + ".bn", b.stats()), cfg_.leaky_slope);
  }
  x = ops::stats_pooling(g, x);
  if (pooled) *pooled = x;
  return ops::linear(g, x, b.param("main.embed.weight"), b.param("main.embed.bias"));
}

Var ArNet::build_concat(Binder& b, Var aux, Var main) const {
  Graph& g = b.graph();
  const Tensor& av = g.value(aux);
  const Tensor& mv = g.value(main);
  if (av.shape().back() != cfg_.aux_dim() || mv.shape().back() != cfg_.main.embed_dim) {
    throw ShapeError("concat encoder expects aux [" + std::to_string(cfg_.aux_dim()) + "] and main [" +
                     std::to_string(cfg_.main.embed_dim) + "], got " + av.shape_string() + " and " + mv.shape_string());
  }
  const bool batched = av.rank() == 2;
  const std::size_t rows = batched ? av.dim(0) : 1;
  const std::size_t width = cfg_.aux_dim() + cfg_.main.embed_dim;
  Var x = ops::concat(g, aux, main);
  // One-frame sequence per utterance; BN statistics always span the batch.
  x = ops::reshape(g, x, batched ? Shape{rows, 1, width} : Shape{1, width});
  x = b.batchnorm(x, "concat.bn", ops::BnStats::batch);
  x = ops::conv1d(g, x, b.param("concat.conv.weight"), b.param("concat.conv.bias"));
  return ops::reshape(g, x, batched ? Shape{rows, cfg_.concat_out} : Shape{cfg_.concat_out});
}

Var ArNet::build_decoder(Binder& b, Var concat) const {
  return ops::linear(b.graph(), concat, b.param("decoder.weight"), b.param("decoder.bias"));
}

Var ArNet::build_logits(Binder& b, Var waves, Var feats) const {
  Var main = build_main(b, feats);
  Var aux;
  if (main_only()) {
    const Tensor& mv = b.graph().value(main);
    aux = b.graph().constant(mv.rank() == 2 ? Tensor({mv.dim(0), cfg_.aux_dim()}) : Tensor({cfg_.aux_dim()}));
  } else {
    aux = build_aux(b, waves);
  }
  return build_decoder(b, build_concat(b, aux, main));
}

Tensor ArNet::stack_waves(std::span<const Waveform> fitted) const {
  if (fitted.empty()) throw ShapeError("cannot stack an empty batch");
  Tensor out({fitted.size(), cfg_.input_len, 1});
  for (std::size_t b = 0; b < fitted.size(); ++b) {
    if (fitted[b].size() != cfg_.input_len) throw ShapeError("stack_waves: waveform is not fitted to input_len");
    std::copy(fitted[b].samples.begin(), fitted[b].samples.end(), &out[b * cfg_.input_len]);
  }
  return out;
}

Tensor ArNet::stack_features(std::span<const Tensor> feats) {
  if (feats.empty()) throw ShapeError("cannot stack an empty batch");
  const Shape& s = feats[0].shape();
  Tensor out({feats.size(), s[0], s[1]});
  for (std::size_t b = 0; b < feats.size(); ++b) {
    if (feats[b].shape() != s) throw ShapeError("stack_features: feature shapes differ within the batch");
    std::copy(feats[b].data().begin(), feats[b].data().end(), &out[b * feats[0].size()]);
  }
  return out;
}

Embedding ArNet::auxiliary_encode(const Waveform& w) const {
  const Waveform fitted = fit_length(w);
  Graph g;
  Binder b(g, params_);
  Var waves = g.constant(Tensor({cfg_.input_len, 1}, fitted.samples));
  if (main_only()) return {Tensor({cfg_.aux_dim()}), EmbeddingSource::aux};
  return {g.value(build_aux(b, waves)), EmbeddingSource::aux};
}

Embedding ArNet::main_encode(const FeatureMap& f) const {
  if (f.kind != cfg_.main.frontend) {
    throw ShapeError("main encoder configured for " + std::string(frontend::to_string(cfg_.main.frontend)) +
                     " features, got " + std::string(frontend::to_string(f.kind)));
  }
  Tensor values = f.values;
  if (f.kind == FrontendKind::cqt && cfg_.main.cqt_mvn) values = frontend::mean_variance_normalize(f);
  Graph g;
  Binder b(g, params_);
  return {g.value(build_main(b, g.constant(std::move(values)))), EmbeddingSource::main};
}

Embedding ArNet::concat_encode(const Embedding& aux, const Embedding& main) const {
  if (aux.source != EmbeddingSource::aux || main.source != EmbeddingSource::main) {
    throw ShapeError("concat_encode expects an aux embedding followed by a main embedding");
  }
  Graph g;
  Binder b(g, params_);
  return {g.value(build_concat(b, g.constant(aux.values), g.constant(main.values))), EmbeddingSource::concat};
}

Tensor ArNet::decode(const Embedding& concat) const {
  if (concat.source != EmbeddingSource::concat) throw ShapeError("decode expects a concat embedding");
  Graph g;
  Binder b(g, params_);
  return g.value(build_decoder(b, g.constant(concat.values)));
}

double ArNet::forward(const Waveform& w) const {
  const Waveform fitted = fit_length(w);
  Graph g;
  Binder b(g, params_);
  Var logits = build_logits(b, g.constant(Tensor({cfg_.input_len, 1}, fitted.samples)), g.constant(features(fitted)));
  return detection_score(g.value(logits).data());
}

std::vector<double> ArNet::score(std::span<const Waveform> waves, std::size_t batch_size) const {
  if (batch_size == 0) throw ShapeError("score: batch size must be positive");
  std::vector<double> out;
  out.reserve(waves.size());
  for (std::size_t start = 0; start < waves.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, waves.size() - start);
    std::vector<Waveform> fitted;
    std::vector<Tensor> feats;
    for (std::size_t i = 0; i < n; ++i) {
      fitted.push_back(fit_length(waves[start + i]));
      feats.push_back(features(fitted.back()));
    }
    Graph g;
    Binder b(g, params_);
    Var logits = build_logits(b, g.constant(stack_waves(fitted)), g.constant(stack_features(feats)));
    const Tensor& l = g.value(logits);
    for (std::size_t i = 0; i < n; ++i) out.push_back(detection_score(l.data().subspan(2 * i, 2)));
  }
  return out;
}

std::vector<Tensor> ArNet::activation_dump(const Waveform& w) const {
  const Waveform fitted = fit_length(w);
  Graph g;
  Binder b(g, params_);
  AuxStages stages;
  build_aux(b, g.constant(Tensor({cfg_.input_len, 1}, fitted.samples)), &stages);
  std::vector<Tensor> out;
  out.push_back(g.value(stages.conv));
  for (Var p : stages.pools) out.push_back(g.value(p));
  return out;
}

}  // namespace arnet
