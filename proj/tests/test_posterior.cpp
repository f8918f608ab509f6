#include <doctest.h>

#include "svb/posterior.hpp"
#include "svb/random.hpp"

#include <Eigen/Dense>

#include <cmath>

using svb::PosteriorParams;
using svb::PriorSpec;
using svb::ad::Var;

namespace {

// tests/oracles/derive_values.py
constexpr double kKlInstance = 0.91378453629057768;
constexpr double kRhoExample = 0.89442719099991588;

PosteriorParams<double> make(Eigen::Vector2d m, Eigen::Vector2d v, double u, bool corr = true) {
  PosteriorParams<double> p;
  p.m = m;
  p.v = v;
  p.u = corr ? Eigen::VectorXd::Constant(1, u) : Eigen::VectorXd();
  p.correlation_enabled = corr;
  return p;
}

PosteriorParams<double> random_params(svb::Rng& rng, double spread = 1.0) {
  const auto r = [&] { return spread * (2.0 * rng.uniform() - 1.0); };
  return make({r(), r()}, {r(), r()}, r());
}

PriorSpec random_prior(svb::Rng& rng) {
  Eigen::Matrix2d a;
  a << 0.3 + rng.uniform(), 0.0, rng.uniform() - 0.5, 0.3 + rng.uniform();
  Eigen::Vector2d m;
  m << 2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0;
  return PriorSpec(m, a * a.transpose());
}

}  // namespace

TEST_SUITE("posterior") {

TEST_CASE("prior validation") {
  CHECK_NOTHROW(PriorSpec::isotropic(2, 0.0, 100.0));
  Eigen::Matrix2d asym;
  asym << 1.0, 0.2, 0.1, 1.0;
  CHECK_THROWS_AS(PriorSpec(Eigen::Vector2d::Zero(), asym), std::invalid_argument);
  Eigen::Matrix2d indefinite;
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(PriorSpec(Eigen::Vector2d::Zero(), indefinite), std::invalid_argument);
  CHECK_THROWS_AS(PriorSpec(Eigen::Vector3d::Zero(), Eigen::Matrix2d::Identity()),
                  std::invalid_argument);
  CHECK_THROWS_AS(PriorSpec::isotropic(2, 0.0, -1.0), std::invalid_argument);
  const auto p = PriorSpec::isotropic(2, 0.0, 100.0);
  CHECK(p.log_det() == doctest::Approx(2.0 * std::log(100.0)).epsilon(1e-15));
}

TEST_CASE("build_cholesky examples") {
  const auto identity = svb::build_cholesky(make({0, 0}, {0, 0}, 0.0));
  CHECK(identity == Eigen::Matrix2d::Identity());

  const Eigen::MatrixXd s = svb::build_cholesky(make({0, 0}, {0, 0}, 0.5));
  Eigen::Matrix2d expected;
  expected << 1.0, 0.5, 0.5, 1.25;
  CHECK((s * s.transpose() - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(s(0, 1) == 0.0);

  auto diag = make({0, 0}, {0.3, -0.2}, 0.0, false);
  const Eigen::MatrixXd sd = svb::build_cholesky(diag);
  const Eigen::MatrixXd c = sd * sd.transpose();
  CHECK(c(0, 1) == 0.0);
  CHECK(c(1, 0) == 0.0);
}

TEST_CASE("three-parameter lower triangle ordering") {
  PosteriorParams<double> p;
  p.m = Eigen::Vector3d::Zero();
  p.v = Eigen::Vector3d::Zero();
  p.u = Eigen::Vector3d(1.0, 2.0, 3.0);
  const Eigen::MatrixXd s = svb::build_cholesky(p);
  CHECK(s(1, 0) == 1.0);
  CHECK(s(2, 0) == 2.0);
  CHECK(s(2, 1) == 3.0);
  CHECK(svb::hyper_count(3, true) == 9);
  CHECK(svb::hyper_count(2, false) == 4);
}

TEST_CASE("reparam_sample examples") {
  const auto p = make({0.4, -1.2}, {0.3, 0.1}, 0.7);
  const Eigen::VectorXd at_zero = svb::reparam_sample(p, Eigen::Vector2d::Zero());
  CHECK(at_zero == p.m);

  PosteriorParams<double> one;
  one.m = Eigen::VectorXd::Constant(1, 2.0);
  one.v = Eigen::VectorXd::Constant(1, std::log(3.0));
  one.u = Eigen::VectorXd();
  const Eigen::VectorXd five = svb::reparam_sample(one, Eigen::VectorXd::Constant(1, 1.0));
  CHECK(five[0] == doctest::Approx(5.0).epsilon(1e-15));

  CHECK_THROWS_AS(svb::reparam_sample(p, Eigen::Vector3d::Zero()), std::invalid_argument);
}

TEST_CASE("reparameterised samples reproduce the moments") {
  const auto p = make({0.4, -1.2}, {0.3, -0.5}, 0.7);
  const Eigen::MatrixXd s = svb::build_cholesky(p);
  const Eigen::MatrixXd cov = s * s.transpose();
  svb::Rng rng(31);
  constexpr int n = 100000;
  Eigen::MatrixXd draws(2, n);
  for (int i = 0; i < n; ++i) draws.col(i) = svb::reparam_sample(p, svb::sample_std_normal(2, rng));
  const Eigen::VectorXd mean = draws.rowwise().mean();
  const Eigen::MatrixXd centred = draws.colwise() - mean;
  const Eigen::MatrixXd emp = centred * centred.transpose() / (n - 1);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(mean[k] - p.m[k]) <= 4.0 * std::sqrt(cov(k, k) / n));
  }
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(emp(i, j) / cov(i, j) - 1.0) <= 0.02);
    }
  }
}

TEST_CASE("KL examples") {
  const auto prior = PriorSpec::isotropic(2, 0.0, 1.0);
  CHECK(std::abs(svb::kl_to_prior(make({0, 0}, {0, 0}, 0.0), prior)) <= 1e-12);
  CHECK(svb::kl_to_prior(make({1, 0}, {0, 0}, 0.0), prior) == doctest::Approx(0.5).epsilon(1e-15));

  Eigen::Matrix2d c0;
  c0 << 2.0, 0.3, 0.3, 1.5;
  const PriorSpec general(Eigen::Vector2d(0.0, 1.0), c0);
  const double kl = svb::kl_to_prior(make({0.3, -0.2}, {0.1, -0.4}, 0.6), general);
  CHECK(std::abs(kl - kKlInstance) <= 1e-13);
}

TEST_CASE("KL is zero when q equals a correlated prior") {
  Eigen::Matrix2d c0;
  c0 << 2.0, 0.3, 0.3, 1.5;
  const PriorSpec prior(Eigen::Vector2d(0.5, -1.0), c0);
  const Eigen::Matrix2d l = c0.llt().matrixL();
  const auto q = make({0.5, -1.0}, {std::log(l(0, 0)), std::log(l(1, 1))}, l(1, 0));
  CHECK(std::abs(svb::kl_to_prior(q, prior)) <= 1e-12);
  auto moved = q;
  moved.m[0] += 0.1;
  CHECK(svb::kl_to_prior(moved, PriorSpec(prior.mean(), Eigen::Matrix2d::Identity())) > 1e-4);
}

TEST_CASE("KL matches a Monte Carlo estimate") {
  svb::Rng rng(606);
  int within = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = random_params(rng, 0.8);
    const auto prior = random_prior(rng);
    const auto summary = svb::extract_posterior(q);
    constexpr int n = 100000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd theta = svb::reparam_sample(q, svb::sample_std_normal(2, rng));
      const double d = svb::mvn_log_pdf(theta, summary.mean, summary.covariance) -
                       prior.log_density(theta);
      sum += d;
      sum_sq += d * d;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / (n - 1));
    const double kl = svb::kl_to_prior(q, prior);
    if (std::abs(mean - kl) <= 3.0 * se) ++within;
    CHECK(std::abs(mean - kl) <= 4.0 * se);
  }
  // 3 SE bands hold with probability 0.997 each.
  CHECK(within >= 19);
}

TEST_CASE("extract_posterior examples") {
  const auto unit = svb::extract_posterior(make({0, 0}, {0, 0}, 0.0));
  CHECK(unit.covariance == Eigen::Matrix2d::Identity());
  CHECK(unit.rho == 0.0);

  const auto corr = svb::extract_posterior(make({0, 0}, {0, std::log(0.5)}, 1.0));
  Eigen::Matrix2d expected;
  expected << 1.0, 1.0, 1.0, 1.25;
  CHECK((corr.covariance - expected).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(corr.rho == doctest::Approx(kRhoExample).epsilon(1e-14));

  const auto diag = svb::extract_posterior(make({0, 0}, {0.2, 0.2}, 0.9, false));
  CHECK(diag.rho == 0.0);
  CHECK_FALSE(diag.correlation_enabled);
}

TEST_CASE("flatten and unflatten are inverse") {
  const auto p = make({1.0, 2.0}, {3.0, 4.0}, 5.0);
  const Eigen::VectorXd z = svb::flatten(p);
  CHECK(z == (Eigen::VectorXd(5) << 1, 2, 3, 4, 5).finished());
  const auto back = svb::unflatten(z, 2, true);
  CHECK(back.m == p.m);
  CHECK(back.v == p.v);
  CHECK(back.u == p.u);
  CHECK_THROWS_AS(svb::unflatten(z, 2, false), std::invalid_argument);
}

TEST_CASE("initial posterior sits on the prior mean with unit scale") {
  const auto prior = PriorSpec(Eigen::Vector2d(0.5, -0.5), Eigen::Matrix2d::Identity() * 3.0);
  const auto p = svb::initial_posterior(prior, true);
  CHECK(p.m == prior.mean());
  CHECK(p.v.isZero());
  CHECK(p.u.size() == 1);
  CHECK(p.u.isZero());
  CHECK(svb::initial_posterior(prior, false).u.size() == 0);
}

// Properties over random draws.

TEST_CASE("C = S S^T is positive definite") {
  svb::Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_params(rng, 3.0);
    const Eigen::MatrixXd s = svb::build_cholesky(p);
    const Eigen::MatrixXd c = s * s.transpose();
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("KL is non-negative") {
  svb::Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_params(rng, 2.0);
    CHECK(svb::kl_to_prior(p, random_prior(rng)) >= -1e-10);
  }
}

TEST_CASE("reparameterisation gradient matches FD") {
  svb::Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd eps = svb::sample_std_normal(2, rng);
    const svb::ad::TapeFunction f = [&](std::span<const Var> z) {
      PosteriorParams<Var> p;
      p.m = svb::VectorX<Var>(2);
      p.v = svb::VectorX<Var>(2);
      p.u = svb::VectorX<Var>(1);
      p.m << z[0], z[1];
      p.v << z[2], z[3];
      p.u << z[4];
      const svb::VectorX<Var> th = svb::reparam_sample(p, eps);
      return cosh(th[0]) * th[1] + exp(0.3 * th[1]) - square(th[0]);
    };
    const Eigen::VectorXd at = svb::flatten(random_params(rng));
    CHECK(svb::ad::finite_diff_check(f, at, 1e-5).passed);
  }
}

TEST_CASE("diagonal variant equals full variant with u = 0 bitwise") {
  svb::Rng rng(3);
  const auto prior = PriorSpec::isotropic(2, 0.0, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto full = random_params(rng, 2.0);
    full.u.setZero();
    auto diag = full;
    diag.correlation_enabled = false;
    diag.u.resize(0);
    const Eigen::VectorXd eps = svb::sample_std_normal(2, rng);
    CHECK(svb::reparam_sample(full, eps) == svb::reparam_sample(diag, eps));
    CHECK(svb::kl_to_prior(full, prior) == svb::kl_to_prior(diag, prior));
  }
}

TEST_CASE("mvn_log_pdf") {
  Eigen::Matrix2d c;
  c << 2.0, 0.5, 0.5, 1.0;
  const Eigen::Vector2d x(0.3, -0.4);
  const Eigen::Vector2d m(0.1, 0.2);
  const Eigen::Vector2d d = x - m;
  const double expected =
      -std::log(2.0 * M_PI) - 0.5 * std::log(c.determinant()) - 0.5 * d.dot(c.inverse() * d);
  CHECK(svb::mvn_log_pdf(x, m, c) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(svb::mvn_log_pdf(x, m, -c), std::invalid_argument);
}

}  // TEST_SUITE
