#pragma once

// Reference computations that deliberately avoid the filter's fast paths.
// Used by the test suites and the self-check command, never by the library.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "kocl/filter_core.hpp"

namespace kocl::check {

struct Posterior {
  Vector mean;
  Matrix cov;
};

/// Closed-form Bayesian linear regression posterior:
///   A = (sigma^-2 sum phi phi^T + sigmaw^-2 I)^-1,  m = A sigma^-2 sum phi y.
Posterior blr_oracle(const std::vector<Vector>& phis, const std::vector<double>& ys,
                     const Hyperparams& hp);

/// Central difference (f(x + h) - f(x - h)) / 2h.
double central_difference(const std::function<double(double)>& f, double x, double h);

/// Richardson extrapolation of two central differences (steps h and h/2):
/// truncation error O(h^4), so a larger h keeps round-off small.
double richardson_difference(const std::function<double(double)>& f, double x, double h);

/// |a - b| / max(|a|, |b|), or 0 when both are below `floor` in magnitude.
double relative_error(double a, double b, double floor = 1e-300);

/// Frobenius-norm relative error |a - b| / |b|.
double relative_error(const Matrix& a, const Matrix& b);

/// log N(y | phi^T m^-, phi^T A^- phi + sigma2) with (m^-, A^-) formed
/// explicitly from (mean, cov) by the transition with gamma = exp(-delta/2).
double regression_log_predictive(const Vector& mean, const Matrix& cov, const Vector& phi,
                                 double y, double delta, const Hyperparams& hp, bool shrink);

/// Floored MC log predictive of class k computed from explicitly formed
/// (M^-, A^-), one naive softmax per noise row.
double classifier_log_predictive(const Matrix& mean, const Matrix& cov, const Vector& phi,
                                 Eigen::Index k, double delta, double alpha,
                                 const Matrix& noise, const Hyperparams& hp);

/// Random symmetric matrix with eigenvalues drawn from [lo, hi].
Matrix random_spd(Eigen::Index m, double lo, double hi, std::mt19937_64& rng);

Vector random_vector(Eigen::Index m, std::mt19937_64& rng, double scale = 1.0);

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0);

}  // namespace kocl::check
