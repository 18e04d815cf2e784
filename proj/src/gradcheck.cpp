#include "arnet/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <utility>

#include "arnet/error.hpp"
#include "arnet/model.hpp"
#include "arnet/ops.hpp"
#include "arnet/rng.hpp"
#include "arnet/synth.hpp"

namespace arnet::gradcheck {

namespace {

// Gradients that vanish identically (a bias feeding train-mode batch norm) leave
// only rounding noise on both sides, so tiny norms are measured against this floor.
constexpr double kNormFloor = 1e-6;

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double relative_error(std::span<const double> a, std::span<const double> n) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - n[i];
  const double denom = std::max({norm(a), norm(n), kNormFloor});
  return norm(d) / denom;
}

double eval_loss(const LossFn& loss, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(g.constant(t));
  const Tensor& v = g.value(loss(g, leaves));
  if (v.size() != 1) throw ShapeError("gradcheck loss must be a scalar, got " + v.shape_string());
  return v[0];
}

}  // namespace

double max_relative_error(const LossFn& loss, const std::vector<Tensor>& inputs, double step, double grad_scale) {
  Graph g;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(g.variable(t));
  g.backward(loss(g, leaves));

  double worst = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double> analytic(g.grad(leaves[k]).begin(), g.grad(leaves[k]).end());
    for (auto& a : analytic) a *= grad_scale;
    std::vector<double> numeric(inputs[k].size());
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double x = inputs[k][i];
      probe[k][i] = x + step;
      const double up = eval_loss(loss, probe);
      probe[k][i] = x - step;
      const double down = eval_loss(loss, probe);
      probe[k][i] = x;
      numeric[i] = (up - down) / (2.0 * step);
    }
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

bool Report::passed() const {
  return std::all_of(ops.begin(), ops.end(), [](const OpResult& r) { return r.passed; });
}

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so the leaky ReLU kink is never straddled.
Tensor kink_free(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) {
    const double m = rng.uniform(0.01, 1.0);
    v = rng.uniform() < 0.5 ? -m : m;
  }
  return t;
}

// Distinct values at least 0.05 apart in random order, so no max-pool window ties.
Tensor distinct_values(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  std::vector<std::size_t> perm(t.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    std::swap(perm[i], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
  }
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.05 * static_cast<double>(perm[i]) + rng.uniform(0.0, 0.01) - 1.0;
  return t;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

Shape seq_shape(Rng& rng, std::size_t t, std::size_t c) {
  if (rng.uniform() < 0.5) return {t, c};
  return {pick(rng, 2, 3), t, c};
}

// Probes a vector-valued output with fixed random coefficients.
LossFn probed(std::function<Var(Graph&, std::span<const Var>)> op, Tensor coeff) {
  return [op = std::move(op), coeff = std::move(coeff)](Graph& g, std::span<const Var> in) {
    return ops::weighted_sum(g, op(g, in), coeff);
  };
}

struct Instance {
  std::vector<Tensor> inputs;
  LossFn loss;
};

Shape output_shape(const std::function<Var(Graph&, std::span<const Var>)>& op, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> leaves;
  for (const auto& t : inputs) leaves.push_back(g.constant(t));
  return g.value(op(g, leaves)).shape();
}

Instance make(Rng& rng, std::vector<Tensor> inputs, std::function<Var(Graph&, std::span<const Var>)> op) {
  Tensor coeff = random_tensor(rng, output_shape(op, inputs));
  return {std::move(inputs), probed(std::move(op), std::move(coeff))};
}

Instance conv_instance(Rng& rng) {
  const std::size_t k = pick(rng, 1, 3), stride = pick(rng, 1, 3), dil = pick(rng, 1, 2);
  const std::size_t c_in = pick(rng, 1, 3), c_out = pick(rng, 1, 3);
  const std::size_t t = dil * (k - 1) + 1 + pick(rng, 0, 6);
  std::vector<Tensor> in{random_tensor(rng, seq_shape(rng, t, c_in)), random_tensor(rng, {c_out, c_in, k}),
                         random_tensor(rng, {c_out})};
  return make(rng, std::move(in), [stride, dil](Graph& g, std::span<const Var> v) {
    return ops::conv1d(g, v[0], v[1], v[2], stride, dil);
  });
}

Instance maxpool_instance(Rng& rng) {
  const std::size_t k = pick(rng, 1, 3), stride = pick(rng, 1, 3);
  const std::size_t t = k + pick(rng, 0, 6);
  std::vector<Tensor> in{distinct_values(rng, seq_shape(rng, t, pick(rng, 1, 3)))};
  return make(rng, std::move(in), [k, stride](Graph& g, std::span<const Var> v) {
    return ops::maxpool1d(g, v[0], k, stride);
  });
}

Instance batchnorm_train_instance(Rng& rng) {
  const std::size_t c = pick(rng, 1, 3);
  const bool per_utt = rng.uniform() < 0.5;
  std::vector<Tensor> in{random_tensor(rng, seq_shape(rng, pick(rng, 2, 5), c)), random_tensor(rng, {c}, 0.5, 1.5),
                         random_tensor(rng, {c})};
  // Scratch running statistics; train-mode outputs do not read them.
  auto running = std::make_shared<std::pair<Tensor, Tensor>>(Tensor({c}), Tensor({c}, 1.0));
  return make(rng, std::move(in), [running, per_utt](Graph& g, std::span<const Var> v) {
    return ops::batchnorm(g, v[0], v[1], v[2], {&running->first, &running->second}, ops::BnMode::train,
                          per_utt ? ops::BnStats::utterance : ops::BnStats::batch);
  });
}

Instance batchnorm_infer_instance(Rng& rng) {
  const std::size_t c = pick(rng, 1, 3);
  Tensor mean = random_tensor(rng, {c});
  Tensor var = random_tensor(rng, {c}, 0.2, 2.0);
  std::vector<Tensor> in{random_tensor(rng, seq_shape(rng, pick(rng, 1, 5), c)), random_tensor(rng, {c}, 0.5, 1.5),
                         random_tensor(rng, {c})};
  return make(rng, std::move(in), [mean, var](Graph& g, std::span<const Var> v) {
    return ops::batchnorm_infer(g, v[0], v[1], v[2], mean, var);
  });
}

Instance leaky_instance(Rng& rng) {
  const double slope = rng.uniform(0.0, 0.3);
  std::vector<Tensor> in{kink_free(rng, seq_shape(rng, pick(rng, 1, 5), pick(rng, 1, 3)))};
  return make(rng, std::move(in), [slope](Graph& g, std::span<const Var> v) { return ops::leaky_relu(g, v[0], slope); });
}

Instance gru_instance(Rng& rng) {
  const std::size_t c = pick(rng, 1, 3), h = pick(rng, 1, 3);
  std::vector<Tensor> in{random_tensor(rng, seq_shape(rng, pick(rng, 1, 4), c)), random_tensor(rng, {3 * h, c}),
                         random_tensor(rng, {3 * h, h}), random_tensor(rng, {3 * h}), random_tensor(rng, {3 * h})};
  return make(rng, std::move(in), [](Graph& g, std::span<const Var> v) {
    return ops::gru(g, v[0], {v[1], v[2], v[3], v[4]});
  });
}

Instance linear_instance(Rng& rng) {
  const std::size_t d_in = pick(rng, 1, 4), d_out = pick(rng, 1, 4);
  Shape xs = rng.uniform() < 0.5 ? Shape{d_in} : Shape{pick(rng, 2, 3), d_in};
  std::vector<Tensor> in{random_tensor(rng, xs), random_tensor(rng, {d_out, d_in}), random_tensor(rng, {d_out})};
  return make(rng, std::move(in), [](Graph& g, std::span<const Var> v) { return ops::linear(g, v[0], v[1], v[2]); });
}

Instance stats_instance(Rng& rng) {
  std::vector<Tensor> in{random_tensor(rng, seq_shape(rng, pick(rng, 1, 5), pick(rng, 1, 3)))};
  return make(rng, std::move(in), [](Graph& g, std::span<const Var> v) { return ops::stats_pooling(g, v[0]); });
}

Instance concat_instance(Rng& rng) {
  const bool batched = rng.uniform() < 0.5;
  const std::size_t rows = pick(rng, 2, 3);
  auto shape = [&](std::size_t d) { return batched ? Shape{rows, d} : Shape{d}; };
  std::vector<Tensor> in{random_tensor(rng, shape(pick(rng, 1, 4))), random_tensor(rng, shape(pick(rng, 1, 4)))};
  return make(rng, std::move(in), [](Graph& g, std::span<const Var> v) { return ops::concat(g, v[0], v[1]); });
}

Instance reshape_instance(Rng& rng) {
  const std::size_t a = pick(rng, 1, 3), b = pick(rng, 1, 4);
  std::vector<Tensor> in{random_tensor(rng, {a, b})};
  return make(rng, std::move(in), [a, b](Graph& g, std::span<const Var> v) { return ops::reshape(g, v[0], {b, a}); });
}

Instance cross_entropy_instance(Rng& rng) {
  const bool batched = rng.uniform() < 0.7;
  const std::size_t rows = batched ? pick(rng, 2, 5) : 1;
  std::vector<int> labels(rows);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_int(0, 1));
  std::vector<double> weights;
  if (rng.uniform() < 0.5) {
    for (std::size_t i = 0; i < rows; ++i) weights.push_back(rng.uniform(0.2, 2.0));
  }
  std::vector<Tensor> in{random_tensor(rng, batched ? Shape{rows, 2} : Shape{2}, -3.0, 3.0)};
  return {std::move(in), [labels, weights](Graph& g, std::span<const Var> v) {
            return ops::softmax_cross_entropy(g, v[0], labels, weights);
          }};
}

using Generator = Instance (*)(Rng&);

struct OpSuite {
  const char* name;
  Generator gen;
};

const OpSuite kSuites[] = {
    {"conv1d", conv_instance},
    {"maxpool1d", maxpool_instance},
    {"batchnorm_train", batchnorm_train_instance},
    {"batchnorm_infer", batchnorm_infer_instance},
    {"leaky_relu", leaky_instance},
    {"gru", gru_instance},
    {"linear", linear_instance},
    {"stats_pooling", stats_instance},
    {"concat", concat_instance},
    {"reshape", reshape_instance},
    {"softmax_cross_entropy", cross_entropy_instance},
};

constexpr const char* kEndToEnd = "arnet_miniature";

// Central differences over every trainable parameter of a miniature ARNet.
double end_to_end_error(std::uint64_t seed, double step, double grad_scale) {
  ArNetConfig cfg = ArNetConfig::miniature();
  cfg.seed = seed;
  ArNet model(cfg);
  SynthSpec spec;
  spec.seed = seed;
  spec.n_per_class = 2;
  spec.duration_s = static_cast<double>(cfg.input_len) / cfg.sample_rate;
  const auto data = synth_dataset(spec);
  std::vector<frontend::Waveform> waves;
  std::vector<Tensor> feats;
  std::vector<int> labels;
  for (const auto& item : data) {
    waves.push_back(model.fit_length(item.wave));
    feats.push_back(model.features(waves.back()));
    labels.push_back(static_cast<int>(item.label));
  }
  const Tensor wave_batch = model.stack_waves(waves);
  const Tensor feat_batch = ArNet::stack_features(feats);

  auto loss_value = [&](bool backward) {
    Graph g;
    Binder b(g, model.params(), ops::BnMode::train, cfg.bn_stats);
    Var loss = ops::softmax_cross_entropy(g, model.build_logits(b, g.constant(wave_batch), g.constant(feat_batch)), labels);
    if (backward) g.backward(loss);
    return g.value(loss)[0];
  };

  model.params().zero_grad();
  loss_value(true);
  double worst = 0.0;
  for (auto& e : model.params().entries()) {
    if (!e.trainable) continue;
    std::vector<double> analytic(e.value.grad().begin(), e.value.grad().end());
    for (auto& a : analytic) a *= grad_scale;
    std::vector<double> numeric(e.value.size());
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double x = e.value[i];
      e.value[i] = x + step;
      const double up = loss_value(false);
      e.value[i] = x - step;
      const double down = loss_value(false);
      e.value[i] = x;
      numeric[i] = (up - down) / (2.0 * step);
    }
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

}  // namespace

std::vector<std::string> op_names() {
  std::vector<std::string> out;
  for (const auto& s : kSuites) out.emplace_back(s.name);
  out.emplace_back(kEndToEnd);
  return out;
}

Report run(const Options& opts) {
  if (!opts.inject_fault.empty()) {
    const auto names = op_names();
    if (std::find(names.begin(), names.end(), opts.inject_fault) == names.end()) {
      throw ConfigError("unknown op '" + opts.inject_fault + "' for fault injection");
    }
  }
  const auto start = std::chrono::steady_clock::now();
  Report report;
  std::uint64_t stream = 0;
  for (const auto& suite : kSuites) {
    Rng rng(mix_seed(opts.seed, ++stream));
    const double scale = opts.inject_fault == suite.name ? 1.01 : 1.0;
    OpResult r{suite.name, opts.instances, 0.0, false};
    for (std::size_t i = 0; i < opts.instances; ++i) {
      const Instance inst = suite.gen(rng);
      r.max_rel_error = std::max(r.max_rel_error, max_relative_error(inst.loss, inst.inputs, opts.step, scale));
    }
    r.passed = r.max_rel_error < opts.tolerance;
    report.ops.push_back(r);
  }
  {
    const double scale = opts.inject_fault == kEndToEnd ? 1.01 : 1.0;
    OpResult r{kEndToEnd, 2, 0.0, false};
    for (std::uint64_t s = 0; s < r.instances; ++s) {
      r.max_rel_error = std::max(r.max_rel_error, end_to_end_error(mix_seed(opts.seed, 100 + s), opts.step, scale));
    }
    r.passed = r.max_rel_error < opts.tolerance;
    report.ops.push_back(r);
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace arnet::gradcheck
