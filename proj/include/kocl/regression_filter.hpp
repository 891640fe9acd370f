#pragma once

#include "kocl/filter_core.hpp"

namespace kocl {

struct GaussianPrediction {
  double mean = 0.0;
  double variance = 1.0;

  double log_density(double y) const;
};

struct RegressionOptions {
  Hyperparams hp;
  double delta_init = 0.0;
  double delta_lr = 1.0;
  bool learn_delta = true;
  MeanTransition mean_transition = MeanTransition::Shrinking;

  void validate() const;
};

/// One prequential step of the regression learner.
struct RegressionStep {
  GaussianPrediction prediction;  ///< predictive used for scoring
  double log_predictive = 0.0;    ///< log N(y | prediction), before any update
  double delta_gradient = 0.0;    ///< d log-score / d delta at the scoring delta
  double gamma = 1.0;             ///< gamma applied in this step's transition
};

/// Single-output online learner with a learnable forgetting coefficient.
///
/// Each observe() call scores y against the one-step-ahead predictive,
/// takes one gradient-ascent step on delta (gamma = exp(-delta / 2)),
/// applies the transition with the new gamma, and then the Kalman update.
class RegressionFilter {
 public:
  RegressionFilter(Eigen::Index m, RegressionOptions options);
  /// Starts from an explicit single-output posterior.
  RegressionFilter(KalmanState state, RegressionOptions options);

  /// Predictive density of y for features phi under the current delta.
  /// Does not modify the filter.
  GaussianPrediction predict(const VectorRef& phi) const;

  /// Analytic d/d delta of log N(y | predict(phi)), with the previous
  /// posterior held fixed.
  double delta_gradient(const VectorRef& phi, double y) const;

  RegressionStep observe(const VectorRef& phi, double y);

  double delta() const { return delta_; }
  double gamma() const { return gamma_from_delta(delta_); }
  /// Overrides delta (clipped at 0).
  void set_delta(double delta);

  const KalmanState& state() const { return state_; }
  const RegressionOptions& options() const { return options_; }

 private:
  GaussianPrediction predictive_from(const Projection& p, double delta) const;

  RegressionOptions options_;
  KalmanState state_;
  double delta_ = 0.0;
};

}  // namespace kocl
