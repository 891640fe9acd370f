#include "kocl/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kocl/errors.hpp"

namespace kocl {

Matrix draw_logit_noise(std::uint64_t seed, std::uint64_t step, std::size_t samples,
                        Eigen::Index classes) {
  if (samples < 1) throw ConfigError("Monte-Carlo sample count must be at least 1");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  Matrix eps(static_cast<Eigen::Index>(samples), classes);
  for (Eigen::Index s = 0; s < eps.rows(); ++s) {
    for (Eigen::Index j = 0; j < classes; ++j) eps(s, j) = normal(rng);
  }
  return eps;
}

namespace {

void check_shapes(const LogitMoments& moments, double alpha, const Matrix& noise) {
  if (noise.cols() != moments.mu.size() || noise.rows() < 1) {
    throw DomainError("noise block must be S x K with S >= 1 and K = logit count");
  }
  if (!(alpha > 0.0 && std::isfinite(alpha))) throw DomainError("alpha must be finite and > 0");
}

// Stable in-place softmax.
void softmax(Vector& z) {
  z.array() -= z.maxCoeff();
  z = z.array().exp();
  z /= z.sum();
}

}  // namespace

Vector mc_class_probs(const LogitMoments& moments, double alpha, const Matrix& noise) {
  check_shapes(moments, alpha, noise);
  const double s = std::sqrt(std::max(0.0, moments.s2));
  const Eigen::Index k = moments.mu.size();
  Vector acc = Vector::Zero(k);
  Vector z(k);
  for (Eigen::Index row = 0; row < noise.rows(); ++row) {
    z = alpha * (moments.mu + s * noise.row(row).transpose());
    softmax(z);
    acc += z;
  }
  return acc / static_cast<double>(noise.rows());
}

Vector mc_class_probs(const LogitMoments& moments, double alpha, std::size_t samples,
                      std::uint64_t seed) {
  return mc_class_probs(moments, alpha, draw_logit_noise(seed, 0, samples, moments.mu.size()));
}

Eigen::Index argmax(const Vector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

double floored_log(double p) { return std::log(std::max(p, kProbabilityFloor)); }

McLogProb mc_log_prob(const LogitMoments& moments, const LogitSensitivity& sensitivity,
                      double alpha, const Matrix& noise, Eigen::Index k) {
  check_shapes(moments, alpha, noise);
  const Eigen::Index n_cls = moments.mu.size();
  if (k < 0 || k >= n_cls) throw DomainError("class index outside [0, K)");
  if (sensitivity.dmu.size() != n_cls) throw DomainError("sensitivity has wrong length");

  const double s = std::sqrt(std::max(0.0, moments.s2));
  const double ds = s > 0.0 ? sensitivity.ds2 / (2.0 * s) : 0.0;

  Vector acc = Vector::Zero(n_cls);
  double sum_ddelta = 0.0;
  double sum_dalpha = 0.0;
  Vector c(n_cls);
  Vector t(n_cls);
  Vector pi(n_cls);
  for (Eigen::Index row = 0; row < noise.rows(); ++row) {
    const auto eps = noise.row(row).transpose();
    c = moments.mu + s * eps;          // dz/d alpha
    t = sensitivity.dmu + ds * eps;    // dz/d delta = alpha * t
    pi = alpha * c;
    softmax(pi);
    acc += pi;
    // d pi_k / d theta = pi_k (dz_k - sum_j pi_j dz_j)
    sum_dalpha += pi(k) * (c(k) - pi.dot(c));
    sum_ddelta += pi(k) * alpha * (t(k) - pi.dot(t));
  }

  McLogProb out;
  out.probs = acc / static_cast<double>(noise.rows());
  out.log_prob = floored_log(out.probs(k));
  if (out.probs(k) >= kProbabilityFloor) {
    out.d_delta = sum_ddelta / acc(k);
    out.d_alpha = sum_dalpha / acc(k);
  }
  return out;
}

}  // namespace kocl
