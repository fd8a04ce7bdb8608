#include "bicl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bicl/errors.hpp"

namespace bicl {

namespace {

constexpr double kNormFloor = 1e-8;

void require(bool cond, const std::string& message) {
  if (!cond) throw std::invalid_argument(message);
}

bool is_vector(const Tensor& t) { return t.shape.size() == 1; }

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::elementwise_mul: return "elementwise-mul";
    case OpKind::concat: return "concat";
    case OpKind::relu: return "relu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::tanh: return "tanh";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::softmax: return "softmax";
    case OpKind::mean: return "mean";
    case OpKind::sum: return "sum";
    case OpKind::dot: return "dot";
    case OpKind::l2_normalize: return "l2-normalize";
    case OpKind::scalar_scale: return "scalar-scale";
  }
  return "?";
}

NodeId Tape::leaf(Tensor t) {
  Node n;
  n.kind = OpKind::leaf;
  n.requires_grad = t.requires_grad;
  n.value = std::move(t);
  return push(std::move(n));
}

NodeId Tape::constant(Tensor t) {
  t.requires_grad = false;
  return leaf(std::move(t));
}

NodeId Tape::push(Node node) {
  if (!node.value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op_name(node.kind));
  }
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

const Tape::Node& Tape::node(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw std::invalid_argument("node id " + std::to_string(id) + " is not on the tape");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

const Tensor& Tape::value(NodeId id) const { return node(id).value; }

bool Tape::requires_grad(NodeId id) const { return node(id).requires_grad; }

NodeId Tape::add_all(std::span<const NodeId> terms) {
  require(!terms.empty(), "add_all needs at least one term");
  NodeId acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

NodeId Tape::apply(OpKind kind, std::span<const NodeId> inputs, double attr) {
  Node out;
  out.kind = kind;
  out.attr = attr;
  out.parents.assign(inputs.begin(), inputs.end());
  for (NodeId p : inputs) {
    if (node(p).requires_grad) out.requires_grad = true;
  }

  auto val = [&](std::size_t i) -> const Tensor& { return node(out.parents[i]).value; };
  auto arity = [&](std::size_t n) {
    require(inputs.size() == n, std::string(op_name(kind)) + " expects " + std::to_string(n) + " inputs, got " +
                                    std::to_string(inputs.size()));
  };

  switch (kind) {
    case OpKind::leaf:
      throw std::invalid_argument("leaf is not applicable via apply()");

    case OpKind::matmul: {
      arity(2);
      const Tensor& a = val(0);
      const Tensor& b = val(1);
      require(a.shape.size() == 2, "matmul left operand must be 2-d, got " + shape_string(a.shape));
      require(b.shape.size() == 1 || b.shape.size() == 2,
              "matmul right operand must be 1-d or 2-d, got " + shape_string(b.shape));
      const int m = a.rows();
      const int k = a.cols();
      if (b.shape.size() == 1) {
        require(b.shape[0] == k,
                "matmul shape mismatch: " + shape_string(a.shape) + " * " + shape_string(b.shape));
        Tensor y = Tensor::zeros({m});
        for (int r = 0; r < m; ++r) {
          double s = 0.0;
          const double* row = &a.values[static_cast<std::size_t>(r) * k];
          for (int c = 0; c < k; ++c) s += row[c] * b.values[c];
          y.values[r] = s;
        }
        out.value = std::move(y);
      } else {
        require(b.rows() == k,
                "matmul shape mismatch: " + shape_string(a.shape) + " * " + shape_string(b.shape));
        const int n = b.cols();
        Tensor y = Tensor::zeros({m, n});
        for (int r = 0; r < m; ++r) {
          for (int c = 0; c < k; ++c) {
            const double arc = a.at(r, c);
            if (arc == 0.0) continue;
            const double* brow = &b.values[static_cast<std::size_t>(c) * n];
            double* yrow = &y.values[static_cast<std::size_t>(r) * n];
            for (int j = 0; j < n; ++j) yrow[j] += arc * brow[j];
          }
        }
        out.value = std::move(y);
      }
      break;
    }

    case OpKind::add:
    case OpKind::sub:
    case OpKind::elementwise_mul: {
      arity(2);
      const Tensor& a = val(0);
      const Tensor& b = val(1);
      require(a.same_shape(b), std::string(op_name(kind)) + " shape mismatch: " + shape_string(a.shape) + " vs " +
                                   shape_string(b.shape));
      Tensor y = a;
      y.requires_grad = false;
      for (std::size_t i = 0; i < y.values.size(); ++i) {
        if (kind == OpKind::add) y.values[i] = a.values[i] + b.values[i];
        else if (kind == OpKind::sub) y.values[i] = a.values[i] - b.values[i];
        else y.values[i] = a.values[i] * b.values[i];
      }
      out.value = std::move(y);
      break;
    }

    case OpKind::concat: {
      require(!inputs.empty(), "concat needs at least one input");
      int total = 0;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        require(is_vector(val(i)), "concat expects 1-d inputs, got " + shape_string(val(i).shape));
        total += val(i).shape[0];
      }
      Tensor y = Tensor::zeros({total});
      int offset = 0;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor& part = val(i);
        std::copy(part.values.begin(), part.values.end(), y.values.begin() + offset);
        offset += part.shape[0];
      }
      out.value = std::move(y);
      break;
    }

    case OpKind::relu:
    case OpKind::sigmoid:
    case OpKind::tanh:
    case OpKind::exp:
    case OpKind::log: {
      arity(1);
      Tensor y = val(0);
      y.requires_grad = false;
      for (double& v : y.values) {
        switch (kind) {
          case OpKind::relu: v = v > 0.0 ? v : 0.0; break;
          case OpKind::sigmoid: v = 1.0 / (1.0 + std::exp(-v)); break;
          case OpKind::tanh: v = std::tanh(v); break;
          case OpKind::exp: v = std::exp(v); break;
          case OpKind::log:
            if (v <= 0.0) throw NumericError("log of non-positive value " + std::to_string(v));
            v = std::log(v);
            break;
          default: break;
        }
      }
      out.value = std::move(y);
      break;
    }

    case OpKind::softmax: {
      arity(1);
      const Tensor& x = val(0);
      require(is_vector(x), "softmax expects a 1-d input, got " + shape_string(x.shape));
      Tensor y = x;
      y.requires_grad = false;
      const double mx = *std::max_element(x.values.begin(), x.values.end());
      double z = 0.0;
      for (std::size_t i = 0; i < y.values.size(); ++i) {
        y.values[i] = std::exp(x.values[i] - mx);
        z += y.values[i];
      }
      for (double& v : y.values) v /= z;
      // renormalize so the result sums to 1 within 1e-12
      double s = 0.0;
      for (double v : y.values) s += v;
      for (double& v : y.values) v /= s;
      out.value = std::move(y);
      break;
    }

    case OpKind::mean:
    case OpKind::sum: {
      arity(1);
      const Tensor& x = val(0);
      double s = 0.0;
      for (double v : x.values) s += v;
      if (kind == OpKind::mean) s /= static_cast<double>(x.numel());
      out.value = Tensor::scalar(s);
      break;
    }

    case OpKind::dot: {
      arity(2);
      const Tensor& a = val(0);
      const Tensor& b = val(1);
      require(is_vector(a) && is_vector(b) && a.same_shape(b),
              "dot shape mismatch: " + shape_string(a.shape) + " vs " + shape_string(b.shape));
      double s = 0.0;
      for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
      out.value = Tensor::scalar(s);
      break;
    }

    case OpKind::l2_normalize: {
      arity(1);
      const Tensor& x = val(0);
      require(is_vector(x), "l2-normalize expects a 1-d input, got " + shape_string(x.shape));
      const double n = x.norm2();
      if (n < kNormFloor) throw NumericError("l2-normalize of near-zero vector (norm " + std::to_string(n) + ")");
      Tensor y = x;
      y.requires_grad = false;
      for (double& v : y.values) v /= n;
      out.value = std::move(y);
      break;
    }

    case OpKind::scalar_scale: {
      require(inputs.size() == 1 || inputs.size() == 2,
              "scalar-scale expects one input (constant factor) or two inputs (tensor, scalar)");
      const Tensor& x = val(0);
      double s = attr;
      if (inputs.size() == 2) {
        require(val(1).is_scalar(), "scalar-scale factor must be scalar, got " + shape_string(val(1).shape));
        s = val(1).values[0];
      }
      Tensor y = x;
      y.requires_grad = false;
      for (double& v : y.values) v *= s;
      out.value = std::move(y);
      break;
    }
  }

  return push(std::move(out));
}

std::map<NodeId, Tensor> Tape::backward(NodeId root) const {
  const Node& r = node(root);
  if (r.value.numel() != 1) {
    throw std::invalid_argument("backward root must be scalar, got shape " + shape_string(r.value.shape));
  }

  std::vector<Tensor> grads(nodes_.size());
  std::vector<bool> has_grad(nodes_.size(), false);
  auto accum = [&](NodeId id, int index, double v) {
    if (!has_grad[static_cast<std::size_t>(id)]) {
      grads[static_cast<std::size_t>(id)] = Tensor::zeros(nodes_[static_cast<std::size_t>(id)].value.shape);
      has_grad[static_cast<std::size_t>(id)] = true;
    }
    grads[static_cast<std::size_t>(id)].values[static_cast<std::size_t>(index)] += v;
  };

  grads[static_cast<std::size_t>(root)] = Tensor::scalar(1.0);
  has_grad[static_cast<std::size_t>(root)] = true;

  for (NodeId id = root; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!has_grad[static_cast<std::size_t>(id)] || !n.requires_grad) continue;
    const Tensor& g = grads[static_cast<std::size_t>(id)];
    auto parent_needs = [&](std::size_t i) { return nodes_[static_cast<std::size_t>(n.parents[i])].requires_grad; };
    auto pval = [&](std::size_t i) -> const Tensor& { return nodes_[static_cast<std::size_t>(n.parents[i])].value; };

    switch (n.kind) {
      case OpKind::leaf:
        break;

      case OpKind::matmul: {
        const Tensor& a = pval(0);
        const Tensor& b = pval(1);
        const int m = a.rows();
        const int k = a.cols();
        if (b.shape.size() == 1) {
          // y = A x : dA = g x^T, dx = A^T g
          if (parent_needs(0)) {
            for (int r = 0; r < m; ++r)
              for (int c = 0; c < k; ++c) accum(n.parents[0], r * k + c, g.values[r] * b.values[c]);
          }
          if (parent_needs(1)) {
            for (int c = 0; c < k; ++c) {
              double s = 0.0;
              for (int r = 0; r < m; ++r) s += a.at(r, c) * g.values[r];
              accum(n.parents[1], c, s);
            }
          }
        } else {
          const int nc = b.cols();
          // dA = g B^T, dB = A^T g
          if (parent_needs(0)) {
            for (int r = 0; r < m; ++r)
              for (int c = 0; c < k; ++c) {
                double s = 0.0;
                for (int j = 0; j < nc; ++j) s += g.values[static_cast<std::size_t>(r) * nc + j] * b.at(c, j);
                accum(n.parents[0], r * k + c, s);
              }
          }
          if (parent_needs(1)) {
            for (int c = 0; c < k; ++c)
              for (int j = 0; j < nc; ++j) {
                double s = 0.0;
                for (int r = 0; r < m; ++r) s += a.at(r, c) * g.values[static_cast<std::size_t>(r) * nc + j];
                accum(n.parents[1], c * nc + j, s);
              }
          }
        }
        break;
      }

      case OpKind::add:
      case OpKind::sub: {
        const double sign1 = n.kind == OpKind::sub ? -1.0 : 1.0;
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          if (parent_needs(0)) accum(n.parents[0], static_cast<int>(i), g.values[i]);
          if (parent_needs(1)) accum(n.parents[1], static_cast<int>(i), sign1 * g.values[i]);
        }
        break;
      }

      case OpKind::elementwise_mul: {
        const Tensor& a = pval(0);
        const Tensor& b = pval(1);
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          if (parent_needs(0)) accum(n.parents[0], static_cast<int>(i), g.values[i] * b.values[i]);
          if (parent_needs(1)) accum(n.parents[1], static_cast<int>(i), g.values[i] * a.values[i]);
        }
        break;
      }

      case OpKind::concat: {
        int offset = 0;
        for (std::size_t p = 0; p < n.parents.size(); ++p) {
          const int len = pval(p).shape[0];
          if (parent_needs(p)) {
            for (int i = 0; i < len; ++i) accum(n.parents[p], i, g.values[static_cast<std::size_t>(offset + i)]);
          }
          offset += len;
        }
        break;
      }

      case OpKind::relu: {
        const Tensor& x = pval(0);
        // subgradient at 0 is 0
        for (std::size_t i = 0; i < g.values.size(); ++i)
          if (x.values[i] > 0.0) accum(n.parents[0], static_cast<int>(i), g.values[i]);
        break;
      }

      case OpKind::sigmoid: {
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          const double y = n.value.values[i];
          accum(n.parents[0], static_cast<int>(i), g.values[i] * y * (1.0 - y));
        }
        break;
      }

      case OpKind::tanh: {
        for (std::size_t i = 0; i < g.values.size(); ++i) {
          const double y = n.value.values[i];
          accum(n.parents[0], static_cast<int>(i), g.values[i] * (1.0 - y * y));
        }
        break;
      }

      case OpKind::exp: {
        for (std::size_t i = 0; i < g.values.size(); ++i)
          accum(n.parents[0], static_cast<int>(i), g.values[i] * n.value.values[i]);
        break;
      }

      case OpKind::log: {
        const Tensor& x = pval(0);
        for (std::size_t i = 0; i < g.values.size(); ++i)
          accum(n.parents[0], static_cast<int>(i), g.values[i] / x.values[i]);
        break;
      }

      case OpKind::softmax: {
        const Tensor& y = n.value;
        double gy = 0.0;
        for (std::size_t i = 0; i < g.values.size(); ++i) gy += g.values[i] * y.values[i];
        for (std::size_t i = 0; i < g.values.size(); ++i)
          accum(n.parents[0], static_cast<int>(i), y.values[i] * (g.values[i] - gy));
        break;
      }

      case OpKind::mean:
      case OpKind::sum: {
        const Tensor& x = pval(0);
        const double f = n.kind == OpKind::mean ? 1.0 / static_cast<double>(x.numel()) : 1.0;
        for (int i = 0; i < x.numel(); ++i) accum(n.parents[0], i, g.values[0] * f);
        break;
      }

      case OpKind::dot: {
        const Tensor& a = pval(0);
        const Tensor& b = pval(1);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
          if (parent_needs(0)) accum(n.parents[0], static_cast<int>(i), g.values[0] * b.values[i]);
          if (parent_needs(1)) accum(n.parents[1], static_cast<int>(i), g.values[0] * a.values[i]);
        }
        break;
      }

      case OpKind::l2_normalize: {
        const Tensor& x = pval(0);
        const Tensor& y = n.value;
        const double norm = x.norm2();
        double gy = 0.0;
        for (std::size_t i = 0; i < g.values.size(); ++i) gy += g.values[i] * y.values[i];
        for (std::size_t i = 0; i < g.values.size(); ++i)
          accum(n.parents[0], static_cast<int>(i), (g.values[i] - y.values[i] * gy) / norm);
        break;
      }

      case OpKind::scalar_scale: {
        const Tensor& x = pval(0);
        const double s = n.parents.size() == 2 ? pval(1).values[0] : n.attr;
        if (parent_needs(0)) {
          for (std::size_t i = 0; i < g.values.size(); ++i)
            accum(n.parents[0], static_cast<int>(i), g.values[i] * s);
        }
        if (n.parents.size() == 2 && parent_needs(1)) {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.values.size(); ++i) acc += g.values[i] * x.values[i];
          accum(n.parents[1], 0, acc);
        }
        break;
      }
    }
  }

  std::map<NodeId, Tensor> result;
  for (NodeId id = 0; static_cast<std::size_t>(id) < nodes_.size(); ++id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.kind != OpKind::leaf || !n.requires_grad) continue;
    if (has_grad[static_cast<std::size_t>(id)]) {
      result.emplace(id, std::move(grads[static_cast<std::size_t>(id)]));
    } else {
      result.emplace(id, Tensor::zeros(n.value.shape));
    }
  }
  return result;
}

NodeId log_sum_exp(Tape& tape, NodeId logits) {
  const Tensor& x = tape.value(logits);
  if (x.shape.size() != 1) throw std::invalid_argument("log_sum_exp expects a 1-d node");
  const double mx = *std::max_element(x.values.begin(), x.values.end());
  // LSE(x) = c + log(sum(exp(x - c))) holds for any constant c; using the
  // current max keeps exp() in range and leaves gradients exact.
  const NodeId shift = tape.constant(Tensor(x.shape, std::vector<double>(x.values.size(), mx)));
  const NodeId lse = tape.log(tape.sum(tape.exp(tape.sub(logits, shift))));
  return tape.add(lse, tape.constant(Tensor::scalar(mx)));
}

NodeId pick(Tape& tape, NodeId vector, int index) {
  const Tensor& x = tape.value(vector);
  if (x.shape.size() != 1) throw std::invalid_argument("pick expects a 1-d node");
  if (index < 0 || index >= x.shape[0])
    throw std::invalid_argument("pick index " + std::to_string(index) + " out of range for " + shape_string(x.shape));
  Tensor onehot = Tensor::zeros(x.shape);
  onehot.values[static_cast<std::size_t>(index)] = 1.0;
  return tape.dot(vector, tape.constant(std::move(onehot)));
}

double grad_check(const ScalarFn& fn, const Tensor& point, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("grad_check epsilon must be positive");

  Tensor p = point;
  p.requires_grad = true;
  Tape tape;
  const NodeId x = tape.leaf(p);
  const NodeId y = fn(tape, x);
  if (tape.value(y).numel() != 1) throw std::invalid_argument("grad_check function must produce a scalar");
  if (!std::isfinite(tape.value(y).item())) throw NumericError("grad_check: non-finite function value at point");
  const Tensor analytic = tape.backward(y).at(x);

  auto eval = [&](const Tensor& at) {
    Tensor t = at;
    t.requires_grad = false;
    Tape fresh;
    const NodeId xi = fresh.leaf(std::move(t));
    const NodeId yi = fn(fresh, xi);
    const double v = fresh.value(yi).item();
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value during probing");
    return v;
  };

  double max_rel = 0.0;
  for (std::size_t i = 0; i < point.values.size(); ++i) {
    Tensor lo = point, hi = point;
    hi.values[i] += epsilon;
    lo.values[i] -= epsilon;
    const double fd = (eval(hi) - eval(lo)) / (2.0 * epsilon);
    const double a = analytic.values[i];
    const double rel = std::abs(fd - a) / std::max({std::abs(fd), std::abs(a), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace bicl
