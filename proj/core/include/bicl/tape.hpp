#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "bicl/tensor.hpp"

namespace bicl {

using NodeId = std::int32_t;

enum class OpKind {
  leaf,
  matmul,
  add,
  sub,
  elementwise_mul,
  concat,
  relu,
  sigmoid,
  tanh,
  exp,
  log,
  softmax,
  mean,
  sum,
  dot,
  l2_normalize,
  scalar_scale,
};

const char* op_name(OpKind kind);

/// Reverse-mode tape. Forward values are computed eagerly as nodes are
/// recorded; node order is the topological order used by backward().
///
/// A tape is built single-threaded for one forward/backward pass; distinct
/// tapes share no state.
class Tape {
 public:
  /// Records an input tensor. Gradients are produced for it iff
  /// t.requires_grad is set.
  NodeId leaf(Tensor t);

  /// Records a non-differentiable input.
  NodeId constant(Tensor t);

  /// Records one primitive operation and computes its forward value.
  /// `attr` is the constant factor for scalar_scale when no scalar input
  /// node is given.
  NodeId apply(OpKind kind, std::span<const NodeId> inputs, double attr = 0.0);

  NodeId apply(OpKind kind, std::initializer_list<NodeId> inputs, double attr = 0.0) {
    return apply(kind, std::span<const NodeId>(inputs.begin(), inputs.size()), attr);
  }

  // Convenience wrappers over apply().
  NodeId matmul(NodeId a, NodeId b) { return apply(OpKind::matmul, {a, b}); }
  NodeId add(NodeId a, NodeId b) { return apply(OpKind::add, {a, b}); }
  NodeId sub(NodeId a, NodeId b) { return apply(OpKind::sub, {a, b}); }
  NodeId mul(NodeId a, NodeId b) { return apply(OpKind::elementwise_mul, {a, b}); }
  NodeId concat(std::span<const NodeId> parts) { return apply(OpKind::concat, parts); }
  NodeId relu(NodeId a) { return apply(OpKind::relu, {a}); }
  NodeId sigmoid(NodeId a) { return apply(OpKind::sigmoid, {a}); }
  NodeId tanh(NodeId a) { return apply(OpKind::tanh, {a}); }
  NodeId exp(NodeId a) { return apply(OpKind::exp, {a}); }
  NodeId log(NodeId a) { return apply(OpKind::log, {a}); }
  NodeId softmax(NodeId a) { return apply(OpKind::softmax, {a}); }
  NodeId mean(NodeId a) { return apply(OpKind::mean, {a}); }
  NodeId sum(NodeId a) { return apply(OpKind::sum, {a}); }
  NodeId dot(NodeId a, NodeId b) { return apply(OpKind::dot, {a, b}); }
  NodeId l2_normalize(NodeId a) { return apply(OpKind::l2_normalize, {a}); }
  /// x scaled by a compile-time constant.
  NodeId scale(NodeId x, double c) { return apply(OpKind::scalar_scale, {x}, c); }
  /// x scaled by a scalar node (gradients flow into both).
  NodeId scale_by(NodeId x, NodeId s) { return apply(OpKind::scalar_scale, {x, s}); }

  /// Sum of several nodes of identical shape. Empty input is rejected.
  NodeId add_all(std::span<const NodeId> terms);

  const Tensor& value(NodeId id) const;
  bool requires_grad(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  /// Gradient of a scalar root with respect to every requires_grad leaf.
  /// Leaves unreachable from the root get zero gradients.
  std::map<NodeId, Tensor> backward(NodeId root) const;

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> parents;
    Tensor value;
    double attr = 0.0;
    bool requires_grad = false;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
};

// Composites built from the primitives above.

/// Numerically safe log(sum(exp(x))) over a 1-d node, max-subtracted.
NodeId log_sum_exp(Tape& tape, NodeId logits);

/// Element `index` of a 1-d node as a scalar node (dot with a one-hot).
NodeId pick(Tape& tape, NodeId vector, int index);

/// Builds a scalar-valued graph from one leaf; used by grad_check.
using ScalarFn = std::function<NodeId(Tape&, NodeId)>;

/// Compares backward() against central finite differences per coordinate and
/// returns the maximum relative error, with denominator max(|a|, |b|, 1e-8).
double grad_check(const ScalarFn& fn, const Tensor& point, double epsilon);

}  // namespace bicl
