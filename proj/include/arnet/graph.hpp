#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "arnet/tensor.hpp"

namespace arnet {

/// Handle to a value recorded on a Graph.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

/// Tape for reverse-mode differentiation.
///
/// Operations append nodes in evaluation order; `backward` walks the tape in
/// reverse. Parameter nodes reference tensors owned elsewhere (a ParamStore)
/// and their gradients are accumulated into `Tensor::grad()` of that tensor,
/// so the tensors must outlive the graph. A graph is single-use: build,
/// backward once, discard.
class Graph {
 public:
  /// Called with the node's accumulated output gradient. Implementations add
  /// into `grad_buffer(input)` for every input that requires a gradient.
  using BackwardFn = std::function<void(Graph&, std::span<const double> out_grad)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  /// Value that never receives a gradient.
  Var constant(Tensor value);
  /// Owned leaf whose gradient is readable through `grad()` after backward.
  Var variable(Tensor value);
  /// Leaf bound to an external tensor; backward accumulates into its grad.
  Var parameter(Tensor& tensor);
  /// Read-only leaf bound to an external tensor; never receives a gradient.
  Var view(const Tensor& tensor);
  /// Result of an operation. `backward` is dropped when no input needs a gradient.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Gradient accumulator of `v` during backward; empty if `v` needs none.
  std::span<double> grad_buffer(Var v);
  /// Gradient of the loss w.r.t. `v` after backward (zeros if unreached).
  std::span<const double> grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must hold one value.
  void backward(Var loss);

 private:
  struct Node {
    Tensor owned;
    Tensor* external = nullptr;
    const Tensor* view = nullptr;
    std::vector<double> grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace arnet
