#pragma once

#include <map>
#include <random>
#include <string>

#include "bicl/tape.hpp"
#include "bicl/tensor.hpp"

namespace bicl {

/// Tape node per parameter name for one forward/backward pass.
using BoundParams = std::map<std::string, NodeId>;

/// Named model parameters. Iteration order is the name order, which fixes
/// the gradient accumulation and optimizer update order.
class ParamStore {
 public:
  void insert(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  std::size_t size() const { return params_.size(); }

  std::map<std::string, Tensor>& all() { return params_; }
  const std::map<std::string, Tensor>& all() const { return params_; }

  /// Records every parameter as a tape leaf; trainable leaves request
  /// gradients.
  BoundParams bind(Tape& tape, bool trainable) const;

 private:
  std::map<std::string, Tensor> params_;
};

/// Matrix with entries uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor init_uniform(const std::vector<int>& shape, int fan_in, std::mt19937_64& rng);

}  // namespace bicl
