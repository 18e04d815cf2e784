#include "arnet/train.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "arnet/error.hpp"
#include "arnet/rng.hpp"

namespace arnet {

PreparedSet prepare(const ArNet& model, std::span<const LabeledWave> data) {
  PreparedSet out;
  out.waves.reserve(data.size());
  out.features.reserve(data.size());
  out.labels.reserve(data.size());
  for (const auto& item : data) {
    out.waves.push_back(model.fit_length(item.wave));
    out.features.push_back(model.features(out.waves.back()));
    out.labels.push_back(static_cast<int>(item.label));
  }
  return out;
}

std::vector<double> class_weights(std::span<const int> labels) {
  std::size_t counts[2] = {0, 0};
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("label index " + std::to_string(l) + " is not 0 or 1");
    ++counts[l];
  }
  if (counts[0] == 0 || counts[1] == 0) {
    throw DataError("training data must contain both classes (bonafide " + std::to_string(counts[0]) + ", spoof " +
                    std::to_string(counts[1]) + ")");
  }
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(counts[0])), n / (2.0 * static_cast<double>(counts[1]))};
}

namespace {

template <typename T>
std::vector<T> gather(const std::vector<T>& src, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(src[i]);
  return out;
}

}  // namespace

std::vector<EpochLoss> train(ArNet& model, const PreparedSet& data, const TrainOptions& opts) {
  if (opts.batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(opts.lr > 0.0)) throw ConfigError("learning rate must be positive");
  const std::vector<double> cw = class_weights(data.labels);
  if (data.size() < 2) throw DataError("training needs at least two utterances");

  OptimizerState state;
  state.options.lr = opts.lr;
  Rng rng(mix_seed(opts.seed, 5));
  std::vector<std::size_t> order(data.size());
  std::vector<EpochLoss> history;

  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
      std::swap(order[i], order[j]);
    }
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const std::size_t n = std::min(opts.batch_size, order.size() - start);
      if (n < 2) break;
      const std::span<const std::size_t> idx(order.data() + start, n);
      const auto waves = gather(data.waves, idx);
      const auto feats = gather(data.features, idx);
      const auto labels = gather(data.labels, idx);
      std::vector<double> weights;
      for (int l : labels) weights.push_back(cw[static_cast<std::size_t>(l)]);

      model.params().zero_grad();
      Graph g;
      Binder b(g, model.params(), ops::BnMode::train, model.config().bn_stats);
      Var logits = model.build_logits(b, g.constant(model.stack_waves(waves)), g.constant(ArNet::stack_features(feats)));
      Var loss = ops::softmax_cross_entropy(g, logits, labels, weights);
      g.backward(loss);
      adam_step(model.params(), state);
      loss_sum += g.value(loss)[0];
      ++batches;
    }
    history.push_back({epoch, batches ? loss_sum / static_cast<double>(batches) : 0.0});
  }
  model.params().zero_grad();
  return history;
}

std::vector<EpochLoss> train(ArNet& model, std::span<const LabeledWave> data, const TrainOptions& opts) {
  return train(model, prepare(model, data), opts);
}

std::vector<double> score_prepared(const ArNet& model, const PreparedSet& data, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<double> out;
  out.reserve(data.size());
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - start);
    const std::span<const frontend::Waveform> waves(data.waves.data() + start, n);
    const std::span<const Tensor> feats(data.features.data() + start, n);
    Graph g;
    Binder b(g, model.params());
    Var logits = model.build_logits(b, g.constant(model.stack_waves(waves)), g.constant(ArNet::stack_features(feats)));
    const Tensor& l = g.value(logits);
    for (std::size_t i = 0; i < n; ++i) out.push_back(detection_score(l.data().subspan(2 * i, 2)));
  }
  return out;
}

}  // namespace arnet
