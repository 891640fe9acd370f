#include "kocl/check/oracles.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace kocl::check {

Posterior blr_oracle(const std::vector<Vector>& phis, const std::vector<double>& ys,
                     const Hyperparams& hp) {
  const Eigen::Index m = phis.empty() ? 0 : phis.front().size();
  Matrix precision = Matrix::Identity(m, m) / hp.sigmaw2;
  Vector rhs = Vector::Zero(m);
  for (std::size_t i = 0; i < phis.size(); ++i) {
    precision += phis[i] * phis[i].transpose() / hp.sigma2;
    rhs += phis[i] * ys[i] / hp.sigma2;
  }
  Eigen::LDLT<Matrix> ldlt(precision);
  Posterior p;
  p.cov = ldlt.solve(Matrix::Identity(m, m));
  p.mean = ldlt.solve(rhs);
  return p;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double richardson_difference(const std::function<double(double)>& f, double x, double h) {
  const double coarse = central_difference(f, x, h);
  const double fine = central_difference(f, x, 0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

double relative_error(double a, double b, double floor) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale < floor) return 0.0;
  return std::abs(a - b) / scale;
}

double relative_error(const Matrix& a, const Matrix& b) {
  const double denom = b.norm();
  if (denom == 0.0) return (a - b).norm();
  return (a - b).norm() / denom;
}

double regression_log_predictive(const Vector& mean, const Matrix& cov, const Vector& phi,
                                 double y, double delta, const Hyperparams& hp, bool shrink) {
  const double gamma = std::exp(-0.5 * delta);
  const Vector m_pred = shrink ? Vector(gamma * mean) : mean;
  const Matrix a_pred = gamma * gamma * cov +
                        (1.0 - gamma * gamma) * hp.sigmaw2 * Matrix::Identity(cov.rows(), cov.cols());
  const double mu = phi.dot(m_pred);
  const double v = phi.dot(a_pred * phi) + hp.sigma2;
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * (y - mu) * (y - mu) / v;
}

double classifier_log_predictive(const Matrix& mean, const Matrix& cov, const Vector& phi,
                                 Eigen::Index k, double delta, double alpha,
                                 const Matrix& noise, const Hyperparams& hp) {
  const double gamma = std::exp(-0.5 * delta);
  const Matrix m_pred = gamma * mean;
  const Matrix a_pred = gamma * gamma * cov +
                        (1.0 - gamma * gamma) * hp.sigmaw2 * Matrix::Identity(cov.rows(), cov.cols());
  const Vector mu = m_pred.transpose() * phi;
  const double s = std::sqrt(std::max(0.0, phi.dot(a_pred * phi)));
  double total = 0.0;
  for (Eigen::Index r = 0; r < noise.rows(); ++r) {
    double denom = 0.0;
    double top = 0.0;
    double zmax = -INFINITY;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      zmax = std::max(zmax, alpha * (mu(j) + s * noise(r, j)));
    }
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      const double e = std::exp(alpha * (mu(j) + s * noise(r, j)) - zmax);
      denom += e;
      if (j == k) top = e;
    }
    total += top / denom;
  }
  return std::log(std::max(total / static_cast<double>(noise.rows()), 1e-12));
}

Matrix random_spd(Eigen::Index m, double lo, double hi, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(lo, hi);
  Matrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) g(i, j) = normal(rng);
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Vector lambda(m);
  for (Eigen::Index i = 0; i < m; ++i) lambda(i) = unif(rng);
  Matrix a = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

Vector random_vector(Eigen::Index m, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(m);
  for (Eigen::Index i = 0; i < m; ++i) v(i) = normal(rng);
  return v;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = normal(rng);
  }
  return a;
}

}  // namespace kocl::check
