#include "arnet/graph.hpp"

#include <stdexcept>
#include <string>

#include "arnet/error.hpp"

namespace arnet {

Var Graph::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::variable(Tensor value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::parameter(Tensor& tensor) {
  Node n;
  n.external = &tensor;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::view(const Tensor& tensor) {
  Node n;
  n.view = &tensor;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  for (auto in : inputs) {
    if (node(in).requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Graph::Node& Graph::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::logic_error("graph: invalid variable handle");
  return nodes_[v.id];
}

Graph::Node& Graph::node(Var v) {
  if (!v.valid() || v.id >= nodes_.size()) throw std::logic_error("graph: invalid variable handle");
  return nodes_[v.id];
}

const Tensor& Graph::value(Var v) const {
  const Node& n = node(v);
  if (n.external) return *n.external;
  if (n.view) return *n.view;
  return n.owned;
}

bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

std::span<double> Graph::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) return {};
  if (n.grad.empty()) n.grad.assign(value(v).size(), 0.0);
  return n.grad;
}

std::span<const double> Graph::grad(Var v) const {
  const Node& n = node(v);
  return n.grad;
}

void Graph::backward(Var loss) {
  if (!loss.valid() || loss.id >= nodes_.size()) {
    throw std::logic_error("backward called without a recorded forward pass");
  }
  if (backward_done_) throw std::logic_error("backward already ran on this graph");
  if (value(loss).size() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + value(loss).shape_string());
  }
  backward_done_ = true;
  if (!node(loss).requires_grad) return;

  grad_buffer(loss)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) {
      // Inputs always precede their consumers, so this buffer is final here.
      n.backward(*this, std::span<const double>(n.grad));
    }
    if (n.external) {
      auto dst = n.external->grad();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += n.grad[k];
    }
  }
}

}  // namespace arnet
