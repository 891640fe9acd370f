#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace kocl::check {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  ///< worst observed value vs threshold, or the failure
  double seconds = 0.0;
};

/// gamma = 1 recursion vs the closed-form posterior at every step.
/// Streams cycle through m in {1, 2, 4, 8}. Threshold: relative error 1e-8.
CheckResult blr_equivalence(std::size_t streams, std::size_t steps, std::uint64_t seed);

/// ClassifierFilter statistics vs K independent RegressionFilters fed the
/// one-hot columns, under a shared gamma. Threshold: max abs diff 1e-10.
CheckResult column_equivalence(std::size_t streams, std::size_t steps, std::uint64_t seed);

/// Regression delta gradient vs Richardson-extrapolated central differences
/// (h = 1e-3) of an explicitly formed predictive. Threshold: relative error 1e-6.
CheckResult regression_gradients(std::size_t states, std::uint64_t seed);

/// MC delta and alpha gradients vs central differences with common random
/// numbers. Threshold: relative error 1e-5.
CheckResult classifier_gradients(std::size_t states, std::size_t mc_samples, std::uint64_t seed);

enum class Fault { None, Asymmetry };

/// Randomized predict/update sequence; symmetry, PSD and the sigmaw2
/// eigenvalue bound are checked after every step. With Fault::Asymmetry the
/// final covariance is perturbed off-diagonal before the last check.
CheckResult covariance_invariants(std::size_t steps, std::uint64_t seed, Fault fault = Fault::None);

}  // namespace kocl::check
