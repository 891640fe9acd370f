#pragma once

#include <string>
#include <vector>

#include "kocl/filter_core.hpp"

namespace kocl {

struct CovarianceTolerances {
  double symmetry = 1e-12;  ///< max |A_ij - A_ji|
  double min_eigen = -1e-10;
  double max_eigen_slack = 1e-10;  ///< allowed excess over sigmaw2
};

struct InvariantViolation {
  std::string invariant;  ///< "finite", "symmetry", "psd" or "variance_bound"
  std::string detail;
};

struct CovarianceReport {
  double asymmetry = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  std::vector<InvariantViolation> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks the covariance invariants of a filter started from sigmaw2 * I:
/// symmetry, numerical PSD, and largest eigenvalue at most sigmaw2.
CovarianceReport check_covariance(const PsdMatrix& cov, double sigmaw2,
                                  const CovarianceTolerances& tol = {});

}  // namespace kocl
