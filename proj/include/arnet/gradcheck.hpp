#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "arnet/graph.hpp"

namespace arnet::gradcheck {

/// Builds a scalar loss from graph leaves holding the instance's inputs.
using LossFn = std::function<Var(Graph&, std::span<const Var>)>;

/// max over inputs of ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-6)
/// with central differences of step `step`. `grad_scale` multiplies the
/// analytic gradient (1 for a genuine check).
double max_relative_error(const LossFn& loss, const std::vector<Tensor>& inputs, double step = 1e-5,
                          double grad_scale = 1.0);

struct Options {
  double step = 1e-5;
  double tolerance = 1e-4;
  std::size_t instances = 100;  // random instances per layer op
  std::uint64_t seed = 0;
  /// Name of an op whose analytic gradient is deliberately scaled by 1.01.
  std::string inject_fault;
};

struct OpResult {
  std::string op;
  std::size_t instances = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct Report {
  std::vector<OpResult> ops;
  double seconds = 0.0;

  bool passed() const;
};

/// Names accepted by Options::inject_fault.
std::vector<std::string> op_names();

/// Every layer op on random small shapes plus the end-to-end miniature ARNet.
Report run(const Options& opts = {});

}  // namespace arnet::gradcheck
