#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "arnet/labels.hpp"
#include "arnet/model.hpp"
#include "arnet/optim.hpp"

namespace arnet {

struct TrainOptions {
  std::size_t epochs = 6;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  /// Seed of the shuffling stream (independent of the init seed in ArNetConfig).
  std::uint64_t seed = 0;
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
};

/// Fitted waveforms, model-input features and labels, computed once per dataset.
struct PreparedSet {
  std::vector<frontend::Waveform> waves;
  std::vector<Tensor> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

PreparedSet prepare(const ArNet& model, std::span<const LabeledWave> data);

/// Inverse-frequency weights N / (2 N_c) per class; throws DataError unless both classes occur.
std::vector<double> class_weights(std::span<const int> labels);

/// Mini-batch Adam on class-weighted softmax cross-entropy. Batches follow a
/// Fisher-Yates shuffle per epoch drawn from `opts.seed`; a trailing batch
/// with fewer than two utterances is skipped. Returns one entry per epoch.
std::vector<EpochLoss> train(ArNet& model, const PreparedSet& data, const TrainOptions& opts);
std::vector<EpochLoss> train(ArNet& model, std::span<const LabeledWave> data, const TrainOptions& opts);

/// Infer-mode scores of a prepared set.
std::vector<double> score_prepared(const ArNet& model, const PreparedSet& data, std::size_t batch_size = 32);

}  // namespace arnet
