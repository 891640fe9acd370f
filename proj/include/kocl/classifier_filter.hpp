#pragma once

#include <cstddef>
#include <cstdint>

#include "kocl/filter_core.hpp"
#include "kocl/monte_carlo.hpp"

namespace kocl {

struct ClassifierOptions {
  Hyperparams hp;
  double delta_init = 0.0;
  double alpha_init = 1.0;
  double delta_lr = 0.1;
  double alpha_lr = 0.01;
  bool learn_delta = true;
  bool learn_alpha = false;
  std::size_t mc_samples = 32;
  std::uint64_t seed = 0;
  MeanTransition mean_transition = MeanTransition::Shrinking;

  void validate() const;
};

/// Lower clip for the calibration scale.
inline constexpr double kMinAlpha = 1e-6;

struct ClassPrediction {
  Vector probs;
  Eigen::Index predicted = 0;
};

struct GradientPair {
  double d_delta = 0.0;
  double d_alpha = 0.0;
};

/// Record of one observe() call. Scores are computed before any update.
struct ClassStep {
  Vector probs;
  Eigen::Index predicted = 0;
  double log_predictive = 0.0;
  double delta_gradient = 0.0;
  double alpha_gradient = 0.0;
  double gamma = 1.0;  ///< gamma applied in this step's transition
};

/// K-class online learner. The Kalman statistics treat the one-hot label as
/// K Gaussian targets sharing one covariance; predictions combine that
/// posterior with the softmax by Monte-Carlo averaging over the logits.
class ClassifierFilter {
 public:
  ClassifierFilter(Eigen::Index m, Eigen::Index k, ClassifierOptions options);
  /// Starts from an explicit m x K posterior.
  ClassifierFilter(KalmanState state, ClassifierOptions options);

  Eigen::Index dim() const { return state_.dim(); }
  Eigen::Index classes() const { return state_.outputs(); }

  LogitMoments logit_moments(const VectorRef& phi) const;
  LogitMoments logit_moments(const VectorRef& phi, double delta) const;

  /// Noise block for stream step `step` under this filter's seed.
  Matrix noise(std::uint64_t step) const;

  ClassPrediction predict(const VectorRef& phi, const Matrix& noise) const;
  double log_predictive(const VectorRef& phi, Eigen::Index k, const Matrix& noise) const;

  /// Gradients of the floored MC log predictive of class k w.r.t. delta and
  /// alpha; the previous posterior is held fixed.
  GradientPair delta_alpha_gradients(const VectorRef& phi, Eigen::Index k,
                                     const Matrix& noise) const;

  /// Full evaluation (probabilities, log score, both gradients) in one pass.
  McLogProb evaluate(const VectorRef& phi, Eigen::Index k, const Matrix& noise) const;

  /// One gradient-ascent step on delta for this point; returns the gradient.
  double step_delta(const VectorRef& phi, Eigen::Index k, const Matrix& noise);

  /// alpha <- max(kMinAlpha, alpha + alpha_lr * gradient).
  void step_alpha(double gradient);

  /// Optionally applies the transition with the current gamma, then the
  /// Kalman update with the one-hot target for class k.
  void advance(const VectorRef& phi, Eigen::Index k, bool apply_transition);

  /// Score, alpha step (if learned), delta step (if learned), transition,
  /// update. Uses the noise block of the internal step counter.
  ClassStep observe(const VectorRef& phi, Eigen::Index k);
  ClassStep observe(const VectorRef& phi, Eigen::Index k, const Matrix& noise);

  /// observe() with a one-hot label row; throws DomainError otherwise.
  ClassStep observe_one_hot(const VectorRef& phi, const RowVectorRef& y);

  double delta() const { return delta_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_from_delta(delta_); }
  void set_delta(double delta);
  void set_alpha(double alpha);

  std::uint64_t steps_observed() const { return steps_; }
  const KalmanState& state() const { return state_; }
  const ClassifierOptions& options() const { return options_; }

 private:
  LogitSensitivity sensitivity(const Projection& p, double delta) const;
  LogitMoments moments_from(const Projection& p, double delta) const;
  void check_class(Eigen::Index k) const;

  ClassifierOptions options_;
  KalmanState state_;
  double delta_ = 0.0;
  double alpha_ = 1.0;
  std::uint64_t steps_ = 0;
};

}  // namespace kocl
