#pragma once

#include <cstddef>
#include <cstdint>

#include "kocl/filter_core.hpp"

namespace kocl {

/// Gaussian over the K logits f = W^T phi under the predicted posterior:
/// mean mu, isotropic variance s2 shared by every class.
struct LogitMoments {
  Vector mu;
  double s2 = 0.0;
};

/// Derivatives of LogitMoments with respect to delta.
struct LogitSensitivity {
  Vector dmu;
  double ds2 = 0.0;
};

/// Probabilities below this are floored before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

/// Standard-normal draws for one stream step, S rows by K columns.
/// Depends only on (seed, step) so any step can be replayed in isolation.
Matrix draw_logit_noise(std::uint64_t seed, std::uint64_t step, std::size_t samples,
                        Eigen::Index classes);

/// Average over noise rows of softmax(alpha * (mu + s * eps)).
Vector mc_class_probs(const LogitMoments& moments, double alpha, const Matrix& noise);

/// Same with noise drawn from draw_logit_noise(seed, 0, samples, K).
Vector mc_class_probs(const LogitMoments& moments, double alpha, std::size_t samples,
                      std::uint64_t seed);

/// Index of the largest entry, lowest index on ties.
Eigen::Index argmax(const Vector& v);

double floored_log(double p);

struct McLogProb {
  Vector probs;
  double log_prob = 0.0;  ///< floored log of probs(k)
  double d_delta = 0.0;
  double d_alpha = 0.0;
};

/// Monte-Carlo log predictive of class k and its gradients with respect to
/// delta and alpha, all evaluated on the same noise draws.
McLogProb mc_log_prob(const LogitMoments& moments, const LogitSensitivity& sensitivity,
                      double alpha, const Matrix& noise, Eigen::Index k);

}  // namespace kocl
