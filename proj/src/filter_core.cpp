#include "kocl/filter_core.hpp"

#include <cmath>
#include <string>

#include "kocl/errors.hpp"

namespace kocl {

Hyperparams Hyperparams::defaults_for(Eigen::Index m, Eigen::Index k) {
  if (m < 1 || k < 1) {
    throw ConfigError("feature dimension and output count must be at least 1");
  }
  Hyperparams hp;
  hp.sigma2 = 1.0 / static_cast<double>(k);
  hp.sigmaw2 = 1.0 / static_cast<double>(m);
  return hp;
}

void Hyperparams::validate() const {
  if (!(std::isfinite(sigma2) && sigma2 > 0.0)) {
    throw ConfigError("sigma2 must be finite and positive, got " + std::to_string(sigma2));
  }
  if (!(std::isfinite(sigmaw2) && sigmaw2 > 0.0)) {
    throw ConfigError("sigmaw2 must be finite and positive, got " + std::to_string(sigmaw2));
  }
  if (!(std::isfinite(jitter) && jitter >= 0.0)) {
    throw ConfigError("jitter must be finite and non-negative, got " + std::to_string(jitter));
  }
}

PsdMatrix PsdMatrix::scaled_identity(Eigen::Index dim, double scale) {
  if (dim < 1) throw ConfigError("covariance dimension must be at least 1");
  return PsdMatrix(scale * Matrix::Identity(dim, dim));
}

PsdMatrix PsdMatrix::from_matrix(Matrix m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw DomainError("covariance must be a non-empty square matrix");
  }
  if (!m.allFinite()) throw NumericError("covariance has non-finite entries");
  PsdMatrix out(std::move(m));
  out.symmetrize();
  return out;
}

PsdMatrix PsdMatrix::adopt_unchecked(Matrix m) { return PsdMatrix(std::move(m)); }

void PsdMatrix::blend_toward_scaled_identity(double weight, double scale) {
  const Eigen::Index n = a_.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double diag = a_(j, j);
    a_.col(j) *= weight;
    a_(j, j) = scale + weight * (diag - scale);
  }
}

void PsdMatrix::rank_one_downdate(const VectorRef& u, double divisor) {
  const Eigen::Index n = a_.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double c = u(j) / divisor;
    a_.col(j) -= c * u;
  }
  symmetrize();
}

void PsdMatrix::add_to_diagonal(double value) { a_.diagonal().array() += value; }

void PsdMatrix::symmetrize() {
  const Eigen::Index n = a_.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = 0.5 * (a_(i, j) + a_(j, i));
      a_(i, j) = v;
      a_(j, i) = v;
    }
  }
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw DomainError("gamma must lie in [0, 1], got " + std::to_string(gamma));
  }
}

double gamma_from_delta(double delta) { return std::exp(-0.5 * delta); }

double delta_from_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError("initial gamma must lie in (0, 1], got " + std::to_string(gamma));
  }
  return -2.0 * std::log(gamma);
}

KalmanState::KalmanState(Eigen::Index m, Eigen::Index k, const Hyperparams& hp) {
  if (m < 1 || k < 1) {
    throw ConfigError("feature dimension and output count must be at least 1 (got m=" +
                      std::to_string(m) + ", K=" + std::to_string(k) + ")");
  }
  hp.validate();
  mean_ = Matrix::Zero(m, k);
  cov_ = PsdMatrix::scaled_identity(m, hp.sigmaw2);
  gain_.resize(m);
  residual_.resize(k);
}

KalmanState::KalmanState(Matrix mean, PsdMatrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.rows() < 1 || mean_.cols() < 1 || mean_.rows() != cov_.dim()) {
    throw DomainError("mean must be m x K with m matching the covariance dimension");
  }
  if (!mean_.allFinite()) throw NumericError("mean has non-finite entries");
  gain_.resize(mean_.rows());
  residual_.resize(mean_.cols());
}

void KalmanState::predict(double gamma, const Hyperparams& hp, MeanTransition transition) {
  check_gamma(gamma);
  if (gamma == 1.0) return;
  if (transition == MeanTransition::Shrinking) mean_ *= gamma;
  cov_.blend_toward_scaled_identity(gamma * gamma, hp.sigmaw2);
}

void KalmanState::check_phi(const VectorRef& phi) const {
  if (phi.size() != dim()) {
    throw DomainError("feature vector has length " + std::to_string(phi.size()) + ", expected " +
                      std::to_string(dim()));
  }
  if (!phi.allFinite()) throw NumericError("feature vector has non-finite entries");
}

double KalmanState::prepare_gain(const VectorRef& phi, const Hyperparams& hp) {
  gain_.noalias() = cov_.matrix() * phi;
  return hp.sigma2 + phi.dot(gain_);
}

void KalmanState::commit(double denom, const Hyperparams& hp) {
  if (!(std::isfinite(denom) && denom > 0.0) || !residual_.allFinite() || !gain_.allFinite()) {
    throw NumericError("non-finite Kalman gain or innovation");
  }
  // M <- M + (A phi / denom) r, with r the innovation row.
  for (Eigen::Index k = 0; k < mean_.cols(); ++k) {
    mean_.col(k) += (residual_(k) / denom) * gain_;
  }
  cov_.rank_one_downdate(gain_, denom);
  if (hp.jitter > 0.0) cov_.add_to_diagonal(hp.jitter);
}

void KalmanState::update(const VectorRef& phi, const RowVectorRef& y, const Hyperparams& hp) {
  check_phi(phi);
  if (y.size() != outputs()) {
    throw DomainError("target row has length " + std::to_string(y.size()) + ", expected " +
                      std::to_string(outputs()));
  }
  if (!y.allFinite()) throw NumericError("target has non-finite entries");
  const double denom = prepare_gain(phi, hp);
  residual_ = y;
  residual_.noalias() -= phi.transpose() * mean_;
  commit(denom, hp);
}

void KalmanState::update_one_hot(const VectorRef& phi, Eigen::Index k, const Hyperparams& hp) {
  check_phi(phi);
  if (k < 0 || k >= outputs()) {
    throw DomainError("class index " + std::to_string(k) + " outside [0, " +
                      std::to_string(outputs()) + ")");
  }
  const double denom = prepare_gain(phi, hp);
  residual_.setZero();
  residual_(k) = 1.0;
  residual_.noalias() -= phi.transpose() * mean_;
  commit(denom, hp);
}

Projection KalmanState::project(const VectorRef& phi, double sigmaw2) const {
  check_phi(phi);
  Projection p;
  p.mean = phi.transpose() * mean_;
  p.sq_norm = phi.squaredNorm();
  const Vector a_phi = cov_.matrix() * phi;
  p.excess = phi.dot(a_phi - sigmaw2 * phi);
  return p;
}

KalmanState init_state(Eigen::Index m, Eigen::Index k, const Hyperparams& hp) {
  return KalmanState(m, k, hp);
}

KalmanState predict_step(KalmanState state, double gamma, const Hyperparams& hp,
                         MeanTransition transition) {
  state.predict(gamma, hp, transition);
  return state;
}

KalmanState update_step(KalmanState state, const VectorRef& phi, const RowVectorRef& y,
                        const Hyperparams& hp) {
  state.update(phi, y, hp);
  return state;
}

}  // namespace kocl
