#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "arnet/params.hpp"

namespace arnet {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers keyed by parameter name, shaped like their parameters.
struct OptimizerState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;
};

/// Bias-corrected Adam update of every trainable, unfrozen tensor in `params`
/// using its accumulated gradient. Throws std::domain_error naming the first
/// parameter whose gradient is non-finite; nothing is modified in that case.
void adam_step(ParamStore& params, OptimizerState& state);

}  // namespace arnet
