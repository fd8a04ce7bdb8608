#include "bicl/params.hpp"

#include <cmath>
#include <stdexcept>

#include "bicl/rng.hpp"

namespace bicl {

void ParamStore::insert(const std::string& name, Tensor t) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  t.requires_grad = true;
  params_.emplace(name, std::move(t));
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::invalid_argument("unknown parameter '" + name + "'");
  return it->second;
}

BoundParams ParamStore::bind(Tape& tape, bool trainable) const {
  BoundParams bound;
  for (const auto& [name, tensor] : params_) {
    Tensor t = tensor;
    t.requires_grad = trainable;
    bound.emplace(name, tape.leaf(std::move(t)));
  }
  return bound;
}

Tensor init_uniform(const std::vector<int>& shape, int fan_in, std::mt19937_64& rng) {
  Tensor t = Tensor::zeros(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.values) v = uniform_real(rng, -bound, bound);
  return t;
}

}  // namespace bicl
