#include "bicl/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bicl {

Tensor::Tensor(std::vector<int> shape_, std::vector<double> values_)
    : shape(std::move(shape_)), values(std::move(values_)) {
  long n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dimension must be positive, got shape " + shape_string(shape));
    n *= d;
  }
  if (static_cast<std::size_t>(n) != values.size()) {
    throw std::invalid_argument("tensor shape " + shape_string(shape) + " expects " + std::to_string(n) +
                                " values, got " + std::to_string(values.size()));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::vector<double> v) {
  int n = static_cast<int>(v.size());
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> v) { return Tensor({rows, cols}, std::move(v)); }

Tensor Tensor::zeros(const std::vector<int>& shape) {
  long n = 1;
  for (int d : shape) n *= d;
  return Tensor(shape, std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

int Tensor::numel() const {
  long n = 1;
  for (int d : shape) n *= d;
  return static_cast<int>(n);
}

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("item() on non-scalar tensor of shape " + shape_string(shape));
  return values[0];
}

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::norm2() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

std::string shape_string(const std::vector<int>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  out += "]";
  return out;
}

}  // namespace bicl
