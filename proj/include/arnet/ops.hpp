#pragma once

#include <cstddef>
#include <span>

#include "arnet/graph.hpp"
#include "arnet/tensor.hpp"

/// Differentiable layer operations over a Graph.
///
/// Sequence tensors are either [T x C] (one utterance) or [B x T x C] (a batch
/// of equal-length utterances); outputs keep the input's rank convention.
/// Vector tensors are [D] or [B x D].
namespace arnet::ops {

/// Valid 1-D cross-correlation: out[t, o] = bias[o] + sum_{c,k} x[t*stride + k*dilation, c] * w[o, c, k].
/// Weight is [C_out x C_in x K], bias [C_out]. T' = floor((T - dilation*(K-1) - 1) / stride) + 1.
Var conv1d(Graph& g, Var x, Var weight, Var bias, std::size_t stride = 1, std::size_t dilation = 1);

/// Per-channel windowed max; gradient goes to the earliest argmax of each window.
Var maxpool1d(Graph& g, Var x, std::size_t kernel, std::size_t stride);

enum class BnMode { train, infer };

/// Which rows form one normalization group in train mode: the whole batch
/// (B*T rows) or each utterance separately (T rows).
enum class BnStats { batch, utterance };

/// Running statistics updated in train mode; owned by the caller.
struct BnRunning {
  Tensor* mean = nullptr;
  Tensor* var = nullptr;
  double momentum = 0.1;
};

inline constexpr double kBnEpsilon = 1e-5;

/// Batch normalization over the time (and optionally batch) axis followed by
/// the per-channel affine `gain * xhat + offset`. Train mode uses population
/// statistics of the group and updates `running` with a momentum average;
/// infer mode uses the running statistics.
Var batchnorm(Graph& g, Var x, Var gain, Var offset, BnRunning running, BnMode mode,
              BnStats stats = BnStats::batch);

/// Infer-mode batch normalization reading, never writing, the running statistics.
Var batchnorm_infer(Graph& g, Var x, Var gain, Var offset, const Tensor& running_mean, const Tensor& running_var);

Var leaky_relu(Graph& g, Var x, double slope = 0.01);

struct GruWeights {
  Var w_ih;  // [3H x C_in], gate rows ordered reset, update, candidate
  Var w_hh;  // [3H x H]
  Var b_ih;  // [3H]
  Var b_hh;  // [3H]
};

/// Single-layer GRU from a zero initial state; returns only the final hidden
/// state ([H], or [B x H] for batched input).
///
///   r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
///   z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
///   n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
///   h' = (1 - z) * n + z * h
Var gru(Graph& g, Var seq, const GruWeights& w);

/// Affine map weight [D_out x D_in] * x + bias.
Var linear(Graph& g, Var x, Var weight, Var bias);

inline constexpr double kStatsEpsilon = 1e-5;

/// Per-channel temporal mean followed by population std (sqrt(var + 1e-5)): [2C] or [B x 2C].
Var stats_pooling(Graph& g, Var seq);

/// Concatenation along the last axis; leading dimensions must agree.
Var concat(Graph& g, Var a, Var b);

Var reshape(Graph& g, Var x, Shape shape);

/// Mean (optionally weighted) softmax cross-entropy over two-class logits
/// ([2] or [B x 2]). `weights` is empty or holds one weight per row; the
/// weighted mean divides by the weight sum. Returns a [1] tensor.
Var softmax_cross_entropy(Graph& g, Var logits, std::span<const int> labels,
                          std::span<const double> weights = {});

Var sum(Graph& g, Var x);

/// sum_i coeff[i] * x[i]; used to build scalar probes of vector outputs.
Var weighted_sum(Graph& g, Var x, const Tensor& coeff);

}  // namespace arnet::ops
