#include <doctest.h>

#include <cmath>
#include <random>

#include "kocl/errors.hpp"
#include "kocl/monte_carlo.hpp"

using namespace kocl;

namespace {

Vector exact_softmax(const Vector& z) {
  const Vector e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

TEST_CASE("zero variance gives the plain softmax") {
  const LogitMoments m{(Vector(3) << 0.5, -1.0, 2.0).finished(), 0.0};
  for (double alpha : {0.3, 1.0, 4.0}) {
    const Vector p = mc_class_probs(m, alpha, draw_logit_noise(1, 0, 7, 3));
    CHECK((p - exact_softmax(alpha * m.mu)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("symmetric logits give near-uniform probabilities") {
  const std::size_t samples = 10000;
  const LogitMoments m{Vector::Zero(4), 2.0};
  const Matrix noise = draw_logit_noise(3, 0, samples, 4);
  const Vector p = mc_class_probs(m, 1.0, noise);

  // Standard error from the per-sample spread of one class probability.
  Vector per_sample(samples);
  for (Eigen::Index s = 0; s < noise.rows(); ++s) {
    per_sample(s) = exact_softmax(std::sqrt(2.0) * noise.row(s).transpose())(0);
  }
  const double sd = std::sqrt((per_sample.array() - per_sample.mean()).square().mean());
  const double se = sd / std::sqrt(static_cast<double>(samples));
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(p(j) - 0.25) < 3 * se);
}

TEST_CASE("two-class estimate agrees with an independent brute-force estimate") {
  // Independent estimate of E[sigmoid(f1 - f2)] with f ~ N((1, 0), I).
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  const int n = 1000000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = 1.0 + normal(rng) - normal(rng);
    const double q = 1.0 / (1.0 + std::exp(-d));
    sum += q;
    sum_sq += q * q;
  }
  const double brute = sum / n;
  const double se_brute = std::sqrt((sum_sq / n - brute * brute) / n);

  const std::size_t samples = 200000;
  const Vector p =
      mc_class_probs(LogitMoments{(Vector(2) << 1.0, 0.0).finished(), 1.0}, 1.0, samples, 5);
  // Loose bound: both estimates have standard error near 2e-4 or less.
  const double se_mc = se_brute * std::sqrt(static_cast<double>(n) / samples);
  CHECK(std::abs(p(0) - brute) < 4 * std::hypot(se_brute, se_mc));
  CHECK(p(0) > 0.6);
}

TEST_CASE("probabilities form a distribution") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index k = 1 + t % 12;
    Vector mu(k);
    for (Eigen::Index j = 0; j < k; ++j) mu(j) = 5.0 * normal(rng);
    const LogitMoments m{mu, std::abs(normal(rng)) * 10};
    const Vector p = mc_class_probs(m, 0.1 + t * 0.2, draw_logit_noise(t, t, 16, k));
    REQUIRE(std::abs(p.sum() - 1.0) < 1e-9);
    REQUIRE(p.minCoeff() >= 0.0);
  }
}

TEST_CASE("argmax breaks ties towards the lowest index") {
  CHECK(argmax((Vector(4) << 0.2, 0.4, 0.4, 0.0).finished()) == 1);
  CHECK(argmax(Vector::Constant(5, 0.2)) == 0);
  CHECK(argmax((Vector(3) << -1.0, -2.0, -0.5).finished()) == 2);
}

TEST_CASE("noise depends only on seed and step") {
  const Matrix a = draw_logit_noise(11, 42, 8, 3);
  CHECK(a == draw_logit_noise(11, 42, 8, 3));
  CHECK(a != draw_logit_noise(11, 43, 8, 3));
  CHECK(a != draw_logit_noise(12, 42, 8, 3));
  // Same stream for more samples: the first rows agree.
  CHECK(draw_logit_noise(11, 42, 16, 3).topRows(8) == a);
  CHECK_THROWS_AS(draw_logit_noise(1, 0, 0, 3), ConfigError);
}

TEST_CASE("argmax is invariant to alpha without logit variance") {
  const LogitMoments m{(Vector(5) << 0.1, 0.7, -0.3, 0.69, 0.0).finished(), 0.0};
  const Matrix noise = draw_logit_noise(2, 0, 4, 5);
  for (double alpha : {1e-6, 0.01, 1.0, 50.0}) {
    CHECK(argmax(mc_class_probs(m, alpha, noise)) == 1);
  }
}

TEST_CASE("log probability is floored and gradients vanish below the floor") {
  const LogitMoments m{(Vector(2) << 100.0, -100.0).finished(), 0.0};
  const LogitSensitivity sens{(Vector(2) << 1.0, 0.0).finished(), 0.0};
  const McLogProb r = mc_log_prob(m, sens, 1.0, draw_logit_noise(0, 0, 4, 2), 1);
  CHECK(r.log_prob == doctest::Approx(std::log(kProbabilityFloor)));
  CHECK(r.d_delta == 0.0);
  CHECK(r.d_alpha == 0.0);
  CHECK(floored_log(0.0) == std::log(kProbabilityFloor));
  CHECK(floored_log(0.5) == std::log(0.5));
}

TEST_CASE("monte carlo input checks") {
  const LogitMoments m{Vector::Zero(3), 1.0};
  CHECK_THROWS_AS(mc_class_probs(m, 1.0, Matrix::Zero(4, 2)), DomainError);
  CHECK_THROWS_AS(mc_class_probs(m, 0.0, Matrix::Zero(4, 3)), DomainError);
  CHECK_THROWS_AS(mc_log_prob(m, LogitSensitivity{Vector::Zero(3), 0.0}, 1.0, Matrix::Zero(4, 3), 3),
                  DomainError);
}
