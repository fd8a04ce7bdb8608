#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bicl {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

/// Finite-difference verification of every primitive, every loss term and the
/// full encoder + K-predictor paths, on small random instances. Deterministic
/// given seed. All entries are expected to stay below tolerance 1e-4.
std::vector<GradCheckEntry> run_gradient_checks(std::uint64_t seed);

inline constexpr double kGradCheckTolerance = 1e-4;

}  // namespace bicl
