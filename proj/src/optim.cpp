#include "arnet/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "arnet/error.hpp"

namespace arnet {

void adam_step(ParamStore& params, OptimizerState& state) {
  for (const auto& e : params.entries()) {
    if (!e.trainable || e.frozen) continue;
    for (double gv : e.value.grad()) {
      if (!std::isfinite(gv)) throw std::domain_error("non-finite gradient in parameter " + e.name);
    }
  }

  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);

  for (auto& e : params.entries()) {
    if (!e.trainable || e.frozen || !e.value.has_grad()) continue;
    auto& m = state.first_moment[e.name];
    auto& v = state.second_moment[e.name];
    const std::size_t n = e.value.size();
    if (m.empty()) {
      m.assign(n, 0.0);
      v.assign(n, 0.0);
    } else if (m.size() != n) {
      throw ShapeError("optimizer state for " + e.name + " does not match parameter size");
    }
    auto grad = e.value.grad();
    auto data = e.value.data();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * grad[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      data[i] -= o.lr * mhat / (std::sqrt(vhat) + o.epsilon);
    }
  }
}

}  // namespace arnet
