#include "kocl/regression_filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kocl/errors.hpp"

namespace kocl {

double GaussianPrediction::log_density(double y) const {
  const double r = y - mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * r * r / variance;
}

void RegressionOptions::validate() const {
  hp.validate();
  if (!(std::isfinite(delta_init) && delta_init >= 0.0)) {
    throw ConfigError("delta_init must be finite and >= 0, got " + std::to_string(delta_init));
  }
  if (!(std::isfinite(delta_lr) && delta_lr >= 0.0)) {
    throw ConfigError("delta_lr must be finite and >= 0, got " + std::to_string(delta_lr));
  }
}

RegressionFilter::RegressionFilter(Eigen::Index m, RegressionOptions options)
    : options_(options), state_(m, 1, options.hp), delta_(options.delta_init) {
  options_.validate();
}

RegressionFilter::RegressionFilter(KalmanState state, RegressionOptions options)
    : options_(options), state_(std::move(state)), delta_(options.delta_init) {
  options_.validate();
  if (state_.outputs() != 1) throw DomainError("regression state must have one output column");
}

void RegressionFilter::set_delta(double delta) {
  if (!std::isfinite(delta)) throw NumericError("delta must be finite");
  delta_ = std::max(0.0, delta);
}

GaussianPrediction RegressionFilter::predictive_from(const Projection& p, double delta) const {
  const double gamma = gamma_from_delta(delta);
  const double u = p.mean(0);
  GaussianPrediction out;
  out.mean = options_.mean_transition == MeanTransition::Shrinking ? gamma * u : u;
  out.variance = p.predicted_quad(gamma, options_.hp.sigmaw2) + options_.hp.sigma2;
  return out;
}

GaussianPrediction RegressionFilter::predict(const VectorRef& phi) const {
  return predictive_from(state_.project(phi, options_.hp.sigmaw2), delta_);
}

namespace {

// d/d delta of log N(y | mu(delta), v(delta)) with
//   mu = gamma u (shrinking) or u,  v = sigma2 + sigmaw2 |phi|^2 + gamma^2 e,
//   gamma = exp(-delta/2), so d gamma/d delta = -gamma/2, d gamma^2/d delta = -gamma^2.
double log_density_delta_gradient(const Projection& p, double y, double delta,
                                  const RegressionOptions& opt) {
  const double gamma = gamma_from_delta(delta);
  const double g2 = gamma * gamma;
  const double u = p.mean(0);
  const bool shrink = opt.mean_transition == MeanTransition::Shrinking;
  const double mu = shrink ? gamma * u : u;
  const double v = opt.hp.sigma2 + p.predicted_quad(gamma, opt.hp.sigmaw2);
  const double dmu = shrink ? -0.5 * gamma * u : 0.0;
  const double dv = -g2 * p.excess;
  const double r = y - mu;
  return (r / v) * dmu + (-0.5 / v + 0.5 * r * r / (v * v)) * dv;
}

}  // namespace

double RegressionFilter::delta_gradient(const VectorRef& phi, double y) const {
  if (!std::isfinite(y)) throw NumericError("target is not finite");
  return log_density_delta_gradient(state_.project(phi, options_.hp.sigmaw2), y, delta_, options_);
}

RegressionStep RegressionFilter::observe(const VectorRef& phi, double y) {
  if (!std::isfinite(y)) throw NumericError("target is not finite");
  const Projection proj = state_.project(phi, options_.hp.sigmaw2);

  RegressionStep step;
  step.prediction = predictive_from(proj, delta_);
  step.log_predictive = step.prediction.log_density(y);
  step.delta_gradient = log_density_delta_gradient(proj, y, delta_, options_);

  double next_delta = delta_;
  if (options_.learn_delta) {
    next_delta = std::max(0.0, delta_ + options_.delta_lr * step.delta_gradient);
  }
  // Everything the update divides by is checked before the state moves.
  const GaussianPrediction ahead = predictive_from(proj, next_delta);
  if (!std::isfinite(step.log_predictive) || !std::isfinite(next_delta) ||
      !std::isfinite(ahead.mean) || !(std::isfinite(ahead.variance) && ahead.variance > 0.0)) {
    throw NumericError("non-finite predictive at regression step");
  }

  delta_ = next_delta;
  step.gamma = gamma_from_delta(delta_);
  state_.predict(step.gamma, options_.hp, options_.mean_transition);
  const Eigen::Matrix<double, 1, 1> target(y);
  state_.update(phi, target, options_.hp);
  return step;
}

}  // namespace kocl
