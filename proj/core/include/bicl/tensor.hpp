#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace bicl {

/// Dense row-major tensor of doubles. Plain value type; all autodiff state
/// lives on the Tape, not here.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::vector<int> shape_, std::vector<double> values_);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(int rows, int cols, std::vector<double> v);
  static Tensor zeros(const std::vector<int>& shape);

  int numel() const;
  bool is_scalar() const { return numel() == 1; }
  double item() const;

  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }
  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols() + c]; }

  bool all_finite() const;
  double norm2() const;

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

std::string shape_string(const std::vector<int>& shape);

}  // namespace bicl
