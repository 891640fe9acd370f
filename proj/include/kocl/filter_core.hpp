#pragma once

#include <Eigen/Core>

namespace kocl {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;
using RowVectorRef = Eigen::Ref<const Eigen::RowVectorXd>;

/// Noise scales of the linear-Gaussian model.
struct Hyperparams {
  double sigma2 = 1.0;   ///< observation noise variance
  double sigmaw2 = 1.0;  ///< stationary prior variance of every weight
  /// Added to the covariance diagonal after each update. Zero disables it.
  double jitter = 0.0;

  /// sigma2 = 1/K, sigmaw2 = 1/m.
  static Hyperparams defaults_for(Eigen::Index m, Eigen::Index k);

  /// Throws ConfigError unless both variances are finite and positive and
  /// jitter is finite and non-negative.
  void validate() const;
};

/// How the transition treats the posterior mean.
enum class MeanTransition {
  Shrinking,    ///< mean <- gamma * mean
  NonShrinking  ///< mean carried forward unchanged; covariance still blends
};

/// Symmetric positive-semidefinite covariance. Every mutating operation
/// leaves the stored matrix exactly symmetric.
class PsdMatrix {
 public:
  PsdMatrix() = default;

  static PsdMatrix scaled_identity(Eigen::Index dim, double scale);

  /// Takes ownership of a square finite matrix and symmetrizes it.
  static PsdMatrix from_matrix(Matrix m);

  /// Stores the matrix as-is. Only for diagnostics and fault injection.
  static PsdMatrix adopt_unchecked(Matrix m);

  Eigen::Index dim() const { return a_.rows(); }
  const Matrix& matrix() const { return a_; }

  /// A <- weight * A + (1 - weight) * scale * I.
  ///
  /// Evaluated as scale * I + weight * (A - scale * I) so that A = scale * I
  /// is a fixed point in floating point for every weight.
  void blend_toward_scaled_identity(double weight, double scale);

  /// A <- A - u u^T / divisor, then symmetrized. Allocation free.
  void rank_one_downdate(const VectorRef& u, double divisor);

  void add_to_diagonal(double value);

  /// A <- (A + A^T) / 2.
  void symmetrize();

 private:
  explicit PsdMatrix(Matrix m) : a_(std::move(m)) {}
  Matrix a_;
};

/// Quadratic summaries of a feature vector against a posterior, enough to
/// evaluate the one-step-ahead predictive under any gamma without forming
/// the predicted covariance.
struct Projection {
  RowVector mean;       ///< phi^T M, length K
  double sq_norm = 0;   ///< |phi|^2
  double excess = 0;    ///< phi^T (A - sigmaw2 I) phi

  /// phi^T A^- phi under the transition with coefficient gamma.
  double predicted_quad(double gamma, double sigmaw2) const {
    return sigmaw2 * sq_norm + gamma * gamma * excess;
  }
};

/// Posterior over an m x K weight matrix with one covariance shared by all
/// K columns. K = 1 is the regression case.
class KalmanState {
 public:
  KalmanState() = default;

  /// Prior: zero mean, covariance sigmaw2 * I.
  KalmanState(Eigen::Index m, Eigen::Index k, const Hyperparams& hp);

  /// Explicit state. Throws DomainError on inconsistent shapes.
  KalmanState(Matrix mean, PsdMatrix cov);

  Eigen::Index dim() const { return mean_.rows(); }
  Eigen::Index outputs() const { return mean_.cols(); }
  const Matrix& mean() const { return mean_; }
  const PsdMatrix& cov() const { return cov_; }

  /// Transition: M <- gamma M (Shrinking), A <- gamma^2 A + (1 - gamma^2) sigmaw2 I.
  /// gamma = 1 is an exact no-op. Throws DomainError outside [0, 1].
  void predict(double gamma, const Hyperparams& hp,
               MeanTransition transition = MeanTransition::Shrinking);

  /// Rank-one observation update with target row y (length K).
  /// Throws NumericError on non-finite input; the state is then unchanged.
  void update(const VectorRef& phi, const RowVectorRef& y, const Hyperparams& hp);

  /// update() with y the one-hot row for class k.
  void update_one_hot(const VectorRef& phi, Eigen::Index k, const Hyperparams& hp);

  Projection project(const VectorRef& phi, double sigmaw2) const;

 private:
  void check_phi(const VectorRef& phi) const;
  // Computes gain_ = A phi and returns sigma2 + phi^T A phi.
  double prepare_gain(const VectorRef& phi, const Hyperparams& hp);
  void commit(double denom, const Hyperparams& hp);

  Matrix mean_;
  PsdMatrix cov_;
  Vector gain_;
  RowVector residual_;
};

/// Throws DomainError unless 0 <= gamma <= 1.
void check_gamma(double gamma);

/// gamma = exp(-delta / 2).
double gamma_from_delta(double delta);

/// delta = -2 log(gamma); gamma must lie in (0, 1].
double delta_from_gamma(double gamma);

KalmanState init_state(Eigen::Index m, Eigen::Index k, const Hyperparams& hp);

KalmanState predict_step(KalmanState state, double gamma, const Hyperparams& hp,
                         MeanTransition transition = MeanTransition::Shrinking);

KalmanState update_step(KalmanState state, const VectorRef& phi, const RowVectorRef& y,
                        const Hyperparams& hp);

}  // namespace kocl
