#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>
#include <random>

#include "alloc_counter.hpp"
#include "kocl/check/oracles.hpp"
#include "kocl/errors.hpp"
#include "kocl/filter_core.hpp"

using namespace kocl;

namespace {

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

KalmanState random_state(Eigen::Index m, Eigen::Index k, const Hyperparams& hp, std::mt19937_64& rng) {
  return KalmanState(check::random_matrix(m, k, rng),
                     PsdMatrix::from_matrix(check::random_spd(m, 0.1 * hp.sigmaw2, hp.sigmaw2, rng)));
}

}  // namespace

TEST_CASE("prior state") {
  Hyperparams hp;
  hp.sigmaw2 = 0.5;
  const KalmanState s = init_state(2, 1, hp);
  CHECK(s.mean() == Matrix::Zero(2, 1));
  CHECK(s.cov().matrix() == (Matrix(2, 2) << 0.5, 0, 0, 0.5).finished());

  const Hyperparams d = Hyperparams::defaults_for(3, 100);
  CHECK(d.sigma2 == doctest::Approx(0.01));
  CHECK(d.sigmaw2 == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(init_state(0, 1, hp), ConfigError);
  CHECK_THROWS_AS(init_state(2, 0, hp), ConfigError);
  CHECK_THROWS_AS(Hyperparams::defaults_for(0, 3), ConfigError);
  hp.sigma2 = 0.0;
  CHECK_THROWS_AS(init_state(2, 1, hp), ConfigError);
}

TEST_CASE("transition edge cases") {
  std::mt19937_64 rng(7);
  Hyperparams hp;
  hp.sigmaw2 = 1.0 / 4.0;
  const KalmanState s = random_state(4, 3, hp, rng);

  SUBCASE("gamma = 1 copies the state forward bitwise") {
    const KalmanState p = predict_step(s, 1.0, hp);
    CHECK(p.mean() == s.mean());
    CHECK(p.cov().matrix() == s.cov().matrix());
  }
  SUBCASE("gamma = 0 resets to the prior") {
    const KalmanState p = predict_step(s, 0.0, hp);
    CHECK(p.mean() == Matrix::Zero(4, 3));
    CHECK(p.cov().matrix() == Matrix(hp.sigmaw2 * Matrix::Identity(4, 4)));
  }
  SUBCASE("non-shrinking transition keeps the mean") {
    const KalmanState p = predict_step(s, 0.3, hp, MeanTransition::NonShrinking);
    CHECK(p.mean() == s.mean());
    const KalmanState q = predict_step(s, 0.3, hp, MeanTransition::Shrinking);
    CHECK(p.cov().matrix() == q.cov().matrix());
    CHECK(q.mean().isApprox(0.3 * s.mean(), 1e-15));
  }
  SUBCASE("gamma outside [0, 1] is rejected") {
    KalmanState p = s;
    CHECK_THROWS_AS(p.predict(1.5, hp), DomainError);
    CHECK_THROWS_AS(p.predict(-0.1, hp), DomainError);
  }
  SUBCASE("matches the explicit formula") {
    const double g = 0.8;
    const KalmanState p = predict_step(s, g, hp);
    const Matrix expected =
        g * g * s.cov().matrix() + (1 - g * g) * hp.sigmaw2 * Matrix::Identity(4, 4);
    CHECK((p.cov().matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("variance preservation is exact") {
  // 0.25 sigmaw2 + 0.75 sigmaw2 = sigmaw2 at gamma = 0.5, and likewise for any gamma.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    Hyperparams hp;
    hp.sigmaw2 = std::exp(8.0 * u(rng) - 4.0);
    const Eigen::Index m = 1 + t % 6;
    const double g = t == 0 ? 0.5 : u(rng);
    const KalmanState p = predict_step(init_state(m, 2, hp), g, hp);
    REQUIRE(p.cov().matrix() == Matrix(hp.sigmaw2 * Matrix::Identity(m, m)));
  }
}

TEST_CASE("update") {
  Hyperparams hp;  // sigma2 = sigmaw2 = 1

  SUBCASE("scalar hand values") {
    KalmanState s = init_state(1, 1, hp);
    s.update(Vector::Ones(1), RowVector::Ones(1), hp);
    CHECK(s.mean()(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.cov().matrix()(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("zero feature vector carries no information") {
    std::mt19937_64 rng(3);
    const KalmanState s = random_state(5, 3, hp, rng);
    const KalmanState t = update_step(s, Vector::Zero(5), check::random_matrix(1, 3, rng), hp);
    CHECK(t.mean() == s.mean());
    CHECK(t.cov().matrix() == s.cov().matrix());
  }
  SUBCASE("one update from the prior equals the closed-form posterior") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
      Hyperparams h;
      h.sigma2 = 0.1 + t * 0.1;
      h.sigmaw2 = 2.0 - t * 0.05;
      const Eigen::Index m = 1 + t % 5;
      const Vector phi = check::random_vector(m, rng);
      const double y = check::random_vector(1, rng)(0);
      const KalmanState s = update_step(init_state(m, 1, h), phi, RowVector::Constant(1, y), h);
      const check::Posterior ref = check::blr_oracle({phi}, {y}, h);
      CHECK(check::relative_error(Matrix(s.mean()), Matrix(ref.mean)) < 1e-12);
      CHECK(check::relative_error(s.cov().matrix(), ref.cov) < 1e-12);
    }
  }
  SUBCASE("covariance only shrinks and stays exactly symmetric") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
      const Eigen::Index m = 1 + t % 8;
      KalmanState s = random_state(m, 2, hp, rng);
      const Matrix before = s.cov().matrix();
      s.update(check::random_vector(m, rng, 3.0), check::random_matrix(1, 2, rng), hp);
      const Matrix& after = s.cov().matrix();
      CHECK(after == after.transpose());
      const Eigen::SelfAdjointEigenSolver<Matrix> es(sym(before - after));
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
  }
  SUBCASE("jitter is added to the diagonal") {
    Hyperparams h = hp;
    h.jitter = 1e-3;
    KalmanState a = init_state(2, 1, hp);
    KalmanState b = init_state(2, 1, h);
    const Vector phi = (Vector(2) << 1.0, -2.0).finished();
    a.update(phi, RowVector::Ones(1), hp);
    b.update(phi, RowVector::Ones(1), h);
    CHECK((b.cov().matrix() - a.cov().matrix()).isApprox(1e-3 * Matrix::Identity(2, 2), 1e-12));
  }
}

TEST_CASE("update rejects bad input without touching the state") {
  Hyperparams hp;
  std::mt19937_64 rng(13);
  KalmanState s = random_state(3, 2, hp, rng);
  const KalmanState before = s;
  CHECK_THROWS_AS(s.update(Vector::Ones(4), RowVector::Ones(2), hp), DomainError);
  CHECK_THROWS_AS(s.update(Vector::Ones(3), RowVector::Ones(3), hp), DomainError);
  Vector bad = Vector::Ones(3);
  bad(1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(s.update(bad, RowVector::Ones(2), hp), NumericError);
  RowVector bad_y = RowVector::Ones(2);
  bad_y(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(s.update(Vector::Ones(3), bad_y, hp), NumericError);
  CHECK_THROWS_AS(s.update_one_hot(Vector::Ones(3), 2, hp), DomainError);
  CHECK(s.mean() == before.mean());
  CHECK(s.cov().matrix() == before.cov().matrix());
}

TEST_CASE("one-hot update equals update with the one-hot row") {
  Hyperparams hp = Hyperparams::defaults_for(4, 3);
  std::mt19937_64 rng(17);
  KalmanState a = random_state(4, 3, hp, rng);
  KalmanState b = a;
  const Vector phi = check::random_vector(4, rng);
  a.update_one_hot(phi, 1, hp);
  b.update(phi, (RowVector(3) << 0, 1, 0).finished(), hp);
  CHECK(a.mean() == b.mean());
  CHECK(a.cov().matrix() == b.cov().matrix());
}

TEST_CASE("projection summarises the predicted quadratic form") {
  std::mt19937_64 rng(19);
  Hyperparams hp;
  hp.sigmaw2 = 0.7;
  const KalmanState s = random_state(5, 3, hp, rng);
  const Vector phi = check::random_vector(5, rng);
  const Projection p = s.project(phi, hp.sigmaw2);
  CHECK((p.mean - phi.transpose() * s.mean()).norm() < 1e-14);
  for (double g : {0.0, 0.3, 0.9, 1.0}) {
    const KalmanState q = predict_step(s, g, hp);
    const double direct = phi.dot(q.cov().matrix() * phi);
    CHECK(p.predicted_quad(g, hp.sigmaw2) == doctest::Approx(direct).epsilon(1e-13));
  }
  CHECK(init_state(5, 3, hp).project(phi, hp.sigmaw2).excess == 0.0);
}

TEST_CASE("psd matrix construction") {
  CHECK_THROWS_AS(PsdMatrix::from_matrix(Matrix::Ones(2, 3)), DomainError);
  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(PsdMatrix::from_matrix(nan), NumericError);
  const PsdMatrix p = PsdMatrix::from_matrix((Matrix(2, 2) << 1.0, 0.2, 0.4, 1.0).finished());
  CHECK(p.matrix()(0, 1) == doctest::Approx(0.3));
  CHECK(p.matrix() == p.matrix().transpose());
  CHECK(delta_from_gamma(1.0) == 0.0);
  CHECK(gamma_from_delta(delta_from_gamma(0.37)) == doctest::Approx(0.37).epsilon(1e-15));
  CHECK_THROWS_AS(delta_from_gamma(0.0), ConfigError);
}

#ifdef KOCL_COUNT_ALLOCS
TEST_CASE("predict and update do not allocate") {
  const Eigen::Index m = 64;
  const Eigen::Index k = 10;
  const Hyperparams hp = Hyperparams::defaults_for(m, k);
  std::mt19937_64 rng(23);
  KalmanState s = init_state(m, k, hp);
  const Vector phi = check::random_vector(m, rng);
  const RowVector y = check::random_matrix(1, k, rng);
  s.update(phi, y, hp);  // scratch buffers already sized by the constructor

  std::size_t allocs = 0;
  {
    alloc_counter::Scope scope;
    for (int i = 0; i < 10; ++i) {
      s.predict(0.9, hp);
      s.update(phi, y, hp);
      s.update_one_hot(phi, i % k, hp);
    }
    allocs = alloc_counter::count;
  }
  CHECK(allocs == 0);
}
#endif
