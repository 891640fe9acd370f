#include "kocl/check/suites.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "kocl/check/oracles.hpp"
#include "kocl/classifier_filter.hpp"
#include "kocl/diagnostics.hpp"
#include "kocl/regression_filter.hpp"

namespace kocl::check {

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt_worst(const char* what, double worst, double threshold) {
  std::ostringstream os;
  os.precision(3);
  os << what << " " << std::scientific << worst << " (threshold " << threshold << ")";
  return os.str();
}

Hyperparams random_hp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  Hyperparams hp;
  hp.sigma2 = u(rng);
  hp.sigmaw2 = u(rng);
  return hp;
}

}  // namespace

CheckResult blr_equivalence(std::size_t streams, std::size_t steps, std::uint64_t seed) {
  constexpr double kThreshold = 1e-8;
  constexpr std::array<Eigen::Index, 4> kDims{1, 2, 4, 8};
  Stopwatch clock;
  CheckResult res{"blr_equivalence", true, {}, 0.0};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;

  for (std::size_t s = 0; s < streams; ++s) {
    const Eigen::Index m = kDims[s % kDims.size()];
    RegressionOptions opt;
    opt.hp = random_hp(rng);
    opt.learn_delta = false;
    RegressionFilter filter(m, opt);
    const Vector w_true = random_vector(m, rng);

    std::vector<Vector> phis;
    std::vector<double> ys;
    for (std::size_t n = 0; n < steps; ++n) {
      Vector phi = random_vector(m, rng);
      const double y = phi.dot(w_true) + std::sqrt(opt.hp.sigma2) * normal(rng);
      filter.observe(phi, y);
      phis.push_back(std::move(phi));
      ys.push_back(y);

      const Posterior ref = blr_oracle(phis, ys, opt.hp);
      const double e_mean = relative_error(Matrix(filter.state().mean()), Matrix(ref.mean));
      const double e_cov = relative_error(filter.state().cov().matrix(), ref.cov);
      worst = std::max({worst, e_mean, e_cov});
    }
  }
  res.passed = worst < kThreshold;
  res.detail = fmt_worst("max relative error", worst, kThreshold);
  res.seconds = clock.seconds();
  return res;
}

CheckResult column_equivalence(std::size_t streams, std::size_t steps, std::uint64_t seed) {
  constexpr double kThreshold = 1e-10;
  Stopwatch clock;
  CheckResult res{"column_equivalence", true, {}, 0.0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> dim_dist(1, 8);
  std::uniform_int_distribution<Eigen::Index> cls_dist(1, 5);
  std::uniform_real_distribution<double> delta_dist(0.0, 0.5);
  double worst = 0.0;

  for (std::size_t s = 0; s < streams; ++s) {
    const Eigen::Index m = dim_dist(rng);
    const Eigen::Index k = cls_dist(rng);
    const Hyperparams hp = random_hp(rng);
    const double delta = delta_dist(rng);

    ClassifierOptions copt;
    copt.hp = hp;
    copt.delta_init = delta;
    copt.learn_delta = false;
    copt.mc_samples = 4;
    ClassifierFilter classifier(m, k, copt);

    RegressionOptions ropt;
    ropt.hp = hp;
    ropt.delta_init = delta;
    ropt.learn_delta = false;
    std::vector<RegressionFilter> columns(static_cast<std::size_t>(k), RegressionFilter(m, ropt));

    std::uniform_int_distribution<Eigen::Index> label_dist(0, k - 1);
    for (std::size_t n = 0; n < steps; ++n) {
      const Vector phi = random_vector(m, rng);
      const Eigen::Index label = label_dist(rng);
      classifier.observe(phi, label);
      for (Eigen::Index j = 0; j < k; ++j) {
        auto& col = columns[static_cast<std::size_t>(j)];
        col.observe(phi, j == label ? 1.0 : 0.0);
        worst = std::max(worst, (classifier.state().mean().col(j) - col.state().mean().col(0))
                                    .cwiseAbs()
                                    .maxCoeff());
        worst = std::max(worst, (classifier.state().cov().matrix() - col.state().cov().matrix())
                                    .cwiseAbs()
                                    .maxCoeff());
      }
    }
  }
  res.passed = worst < kThreshold;
  res.detail = fmt_worst("max abs difference", worst, kThreshold);
  res.seconds = clock.seconds();
  return res;
}

CheckResult regression_gradients(std::size_t states, std::uint64_t seed) {
  constexpr double kThreshold = 1e-6;
  constexpr double kStep = 1e-3;
  Stopwatch clock;
  CheckResult res{"regression_delta_gradient", true, {}, 0.0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> dim_dist(1, 6);
  std::uniform_real_distribution<double> delta_dist(0.01, 3.0);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.5);
  double worst = 0.0;

  for (std::size_t i = 0; i < states; ++i) {
    const Eigen::Index m = dim_dist(rng);
    RegressionOptions opt;
    opt.hp = random_hp(rng);
    opt.delta_init = delta_dist(rng);
    opt.mean_transition = coin(rng) ? MeanTransition::Shrinking : MeanTransition::NonShrinking;
    const Vector mean = random_vector(m, rng);
    const Matrix cov = random_spd(m, 0.05 * opt.hp.sigmaw2, opt.hp.sigmaw2, rng);
    const Vector phi = random_vector(m, rng);
    const double y = normal(rng);

    const RegressionFilter filter(KalmanState(mean, PsdMatrix::from_matrix(cov)), opt);
    const double analytic = filter.delta_gradient(phi, y);
    const bool shrink = opt.mean_transition == MeanTransition::Shrinking;
    const double numeric = richardson_difference(
        [&](double d) { return regression_log_predictive(mean, cov, phi, y, d, opt.hp, shrink); },
        opt.delta_init, kStep);
    worst = std::max(worst, relative_error(analytic, numeric, 1e-12));
  }
  res.passed = worst < kThreshold;
  res.detail = fmt_worst("max relative error", worst, kThreshold);
  res.seconds = clock.seconds();
  return res;
}

CheckResult classifier_gradients(std::size_t states, std::size_t mc_samples, std::uint64_t seed) {
  constexpr double kThreshold = 1e-5;
  constexpr double kStep = 1e-5;
  Stopwatch clock;
  CheckResult res{"classifier_delta_alpha_gradients", true, {}, 0.0};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> dim_dist(1, 6);
  std::uniform_int_distribution<Eigen::Index> cls_dist(2, 6);
  std::uniform_real_distribution<double> delta_dist(0.01, 3.0);
  std::uniform_real_distribution<double> alpha_dist(0.3, 3.0);
  double worst_delta = 0.0;
  double worst_alpha = 0.0;

  for (std::size_t i = 0; i < states; ++i) {
    const Eigen::Index m = dim_dist(rng);
    const Eigen::Index k = cls_dist(rng);
    ClassifierOptions opt;
    opt.hp = random_hp(rng);
    opt.delta_init = delta_dist(rng);
    opt.alpha_init = alpha_dist(rng);
    opt.mc_samples = mc_samples;
    opt.seed = seed + i;
    const Matrix mean = random_matrix(m, k, rng);
    const Matrix cov = random_spd(m, 0.05 * opt.hp.sigmaw2, opt.hp.sigmaw2, rng);
    const Vector phi = random_vector(m, rng);
    const Eigen::Index label = std::uniform_int_distribution<Eigen::Index>(0, k - 1)(rng);

    const ClassifierFilter filter(KalmanState(mean, PsdMatrix::from_matrix(cov)), opt);
    const Matrix noise = filter.noise(i);
    const GradientPair g = filter.delta_alpha_gradients(phi, label, noise);

    const double fd_delta = central_difference(
        [&](double d) {
          return classifier_log_predictive(mean, cov, phi, label, d, opt.alpha_init, noise, opt.hp);
        },
        opt.delta_init, kStep);
    const double fd_alpha = central_difference(
        [&](double a) {
          return classifier_log_predictive(mean, cov, phi, label, opt.delta_init, a, noise, opt.hp);
        },
        opt.alpha_init, kStep);
    worst_delta = std::max(worst_delta, relative_error(g.d_delta, fd_delta, 1e-12));
    worst_alpha = std::max(worst_alpha, relative_error(g.d_alpha, fd_alpha, 1e-12));
  }
  res.passed = worst_delta < kThreshold && worst_alpha < kThreshold;
  res.detail = fmt_worst("delta max relative error", worst_delta, kThreshold) + "; " +
               fmt_worst("alpha max relative error", worst_alpha, kThreshold);
  res.seconds = clock.seconds();
  return res;
}

CheckResult covariance_invariants(std::size_t steps, std::uint64_t seed, Fault fault) {
  constexpr std::array<Eigen::Index, 5> kDims{2, 3, 5, 8, 16};
  Stopwatch clock;
  CheckResult res{"covariance_invariants", true, {}, 0.0};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> log_scale(-2.0, 2.0);

  const std::size_t per_segment = std::max<std::size_t>(1, steps / kDims.size());
  std::size_t done = 0;
  double worst_asym = 0.0;
  double worst_min = INFINITY;
  double worst_excess = -INFINITY;
  KalmanState state;
  Hyperparams hp;

  auto check = [&](const PsdMatrix& cov) {
    const CovarianceReport rep = check_covariance(cov, hp.sigmaw2);
    worst_asym = std::max(worst_asym, rep.asymmetry);
    worst_min = std::min(worst_min, rep.min_eigenvalue);
    worst_excess = std::max(worst_excess, rep.max_eigenvalue - hp.sigmaw2);
    if (!rep.ok() && res.passed) {
      res.passed = false;
      res.detail = "invariant '" + rep.violations.front().invariant + "' violated after step " +
                   std::to_string(done) + ": " + rep.violations.front().detail;
    }
  };

  for (std::size_t seg = 0; done < steps; ++seg) {
    const Eigen::Index m = kDims[seg % kDims.size()];
    hp = random_hp(rng);
    hp.sigma2 *= std::pow(10.0, log_scale(rng));
    state = KalmanState(m, 1, hp);
    for (std::size_t i = 0; i < per_segment && done < steps; ++i, ++done) {
      const double r = unit(rng);
      const double gamma = r < 0.1 ? 0.0 : (r < 0.2 ? 1.0 : unit(rng));
      state.predict(gamma, hp);
      check(state.cov());
      const Vector phi = random_vector(m, rng, std::pow(10.0, log_scale(rng)));
      const Eigen::Matrix<double, 1, 1> y(random_vector(1, rng)(0));
      state.update(phi, y, hp);
      check(state.cov());
    }
  }

  if (fault == Fault::Asymmetry) {
    Matrix a = state.cov().matrix();
    a(0, 1) += 1e-6;
    check(PsdMatrix::adopt_unchecked(a));
  }

  if (res.passed) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << "steps " << done << ", max asymmetry " << worst_asym
       << ", min eigenvalue " << worst_min << ", max eigenvalue - sigmaw2 " << worst_excess;
    res.detail = os.str();
  }
  res.seconds = clock.seconds();
  return res;
}

}  // namespace kocl::check
