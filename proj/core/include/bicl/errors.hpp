#pragma once

#include <stdexcept>
#include <string>

namespace bicl {

/// Malformed or inconsistent input data (files, schemas, corpora).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure at runtime (non-finite values, domain violations).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bicl
