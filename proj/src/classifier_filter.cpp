#include "kocl/classifier_filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kocl/errors.hpp"

namespace kocl {

void ClassifierOptions::validate() const {
  hp.validate();
  if (!(std::isfinite(delta_init) && delta_init >= 0.0)) {
    throw ConfigError("delta_init must be finite and >= 0");
  }
  if (!(std::isfinite(alpha_init) && alpha_init > 0.0)) {
    throw ConfigError("alpha_init must be finite and > 0");
  }
  if (!(std::isfinite(delta_lr) && delta_lr >= 0.0)) throw ConfigError("delta_lr must be >= 0");
  if (!(std::isfinite(alpha_lr) && alpha_lr >= 0.0)) throw ConfigError("alpha_lr must be >= 0");
  if (mc_samples < 1) throw ConfigError("mc_samples must be at least 1");
}

ClassifierFilter::ClassifierFilter(Eigen::Index m, Eigen::Index k, ClassifierOptions options)
    : options_(options),
      state_(m, k, options.hp),
      delta_(options.delta_init),
      alpha_(std::max(kMinAlpha, options.alpha_init)) {
  options_.validate();
}

ClassifierFilter::ClassifierFilter(KalmanState state, ClassifierOptions options)
    : options_(options),
      state_(std::move(state)),
      delta_(options.delta_init),
      alpha_(std::max(kMinAlpha, options.alpha_init)) {
  options_.validate();
}

void ClassifierFilter::set_delta(double delta) {
  if (!std::isfinite(delta)) throw NumericError("delta must be finite");
  delta_ = std::max(0.0, delta);
}

void ClassifierFilter::set_alpha(double alpha) {
  if (!std::isfinite(alpha)) throw NumericError("alpha must be finite");
  alpha_ = std::max(kMinAlpha, alpha);
}

void ClassifierFilter::check_class(Eigen::Index k) const {
  if (k < 0 || k >= classes()) {
    throw DomainError("class index " + std::to_string(k) + " outside [0, " +
                      std::to_string(classes()) + ")");
  }
}

LogitMoments ClassifierFilter::moments_from(const Projection& p, double delta) const {
  const double gamma = gamma_from_delta(delta);
  LogitMoments out;
  out.mu = p.mean.transpose();
  if (options_.mean_transition == MeanTransition::Shrinking) out.mu *= gamma;
  out.s2 = std::max(0.0, p.predicted_quad(gamma, options_.hp.sigmaw2));
  return out;
}

LogitSensitivity ClassifierFilter::sensitivity(const Projection& p, double delta) const {
  const double gamma = gamma_from_delta(delta);
  LogitSensitivity out;
  if (options_.mean_transition == MeanTransition::Shrinking) {
    out.dmu = (-0.5 * gamma) * p.mean.transpose();
  } else {
    out.dmu = Vector::Zero(p.mean.size());
  }
  out.ds2 = -gamma * gamma * p.excess;
  return out;
}

LogitMoments ClassifierFilter::logit_moments(const VectorRef& phi) const {
  return logit_moments(phi, delta_);
}

LogitMoments ClassifierFilter::logit_moments(const VectorRef& phi, double delta) const {
  return moments_from(state_.project(phi, options_.hp.sigmaw2), delta);
}

Matrix ClassifierFilter::noise(std::uint64_t step) const {
  return draw_logit_noise(options_.seed, step, options_.mc_samples, classes());
}

ClassPrediction ClassifierFilter::predict(const VectorRef& phi, const Matrix& noise) const {
  ClassPrediction out;
  out.probs = mc_class_probs(logit_moments(phi), alpha_, noise);
  out.predicted = argmax(out.probs);
  return out;
}

double ClassifierFilter::log_predictive(const VectorRef& phi, Eigen::Index k,
                                        const Matrix& noise) const {
  check_class(k);
  return floored_log(mc_class_probs(logit_moments(phi), alpha_, noise)(k));
}

McLogProb ClassifierFilter::evaluate(const VectorRef& phi, Eigen::Index k,
                                     const Matrix& noise) const {
  check_class(k);
  const Projection p = state_.project(phi, options_.hp.sigmaw2);
  return mc_log_prob(moments_from(p, delta_), sensitivity(p, delta_), alpha_, noise, k);
}

GradientPair ClassifierFilter::delta_alpha_gradients(const VectorRef& phi, Eigen::Index k,
                                                     const Matrix& noise) const {
  const McLogProb e = evaluate(phi, k, noise);
  return {e.d_delta, e.d_alpha};
}

double ClassifierFilter::step_delta(const VectorRef& phi, Eigen::Index k, const Matrix& noise) {
  const double g = evaluate(phi, k, noise).d_delta;
  if (!std::isfinite(g)) throw NumericError("non-finite delta gradient");
  delta_ = std::max(0.0, delta_ + options_.delta_lr * g);
  return g;
}

void ClassifierFilter::step_alpha(double gradient) {
  if (!std::isfinite(gradient)) throw NumericError("non-finite alpha gradient");
  alpha_ = std::max(kMinAlpha, alpha_ + options_.alpha_lr * gradient);
}

void ClassifierFilter::advance(const VectorRef& phi, Eigen::Index k, bool apply_transition) {
  check_class(k);
  if (phi.size() != dim()) throw DomainError("feature vector has wrong length");
  if (!phi.allFinite()) throw NumericError("feature vector has non-finite entries");
  if (apply_transition) state_.predict(gamma(), options_.hp, options_.mean_transition);
  state_.update_one_hot(phi, k, options_.hp);
}

ClassStep ClassifierFilter::observe(const VectorRef& phi, Eigen::Index k) {
  return observe(phi, k, noise(steps_));
}

ClassStep ClassifierFilter::observe(const VectorRef& phi, Eigen::Index k, const Matrix& noise) {
  const McLogProb scored = evaluate(phi, k, noise);
  if (!std::isfinite(scored.log_prob) || !scored.probs.allFinite()) {
    throw NumericError("non-finite class probabilities");
  }

  ClassStep step;
  step.probs = scored.probs;
  step.predicted = argmax(scored.probs);
  step.log_predictive = scored.log_prob;
  step.alpha_gradient = scored.d_alpha;
  step.delta_gradient = scored.d_delta;

  if (options_.learn_alpha) {
    step_alpha(scored.d_alpha);
    // delta is stepped against the recalibrated estimate.
    if (options_.learn_delta) step.delta_gradient = step_delta(phi, k, noise);
  } else if (options_.learn_delta) {
    delta_ = std::max(0.0, delta_ + options_.delta_lr * scored.d_delta);
  }
  step.gamma = gamma();
  advance(phi, k, true);
  ++steps_;
  return step;
}

ClassStep ClassifierFilter::observe_one_hot(const VectorRef& phi, const RowVectorRef& y) {
  if (y.size() != classes()) throw DomainError("label row must have length K");
  Eigen::Index hot = -1;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (y(j) == 1.0 && hot < 0) {
      hot = j;
    } else if (y(j) != 0.0) {
      throw DomainError("label row is not one-hot");
    }
  }
  if (hot < 0) throw DomainError("label row is not one-hot");
  return observe(phi, hot);
}

}  // namespace kocl
