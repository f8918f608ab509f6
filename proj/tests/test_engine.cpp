#include <doctest.h>

#include "svb/engine.hpp"
#include "svb/errors.hpp"

#include <cmath>
#include <numeric>
#include <vector>

using svb::ModelKind;
using svb::PosteriorParams;
using svb::PriorSpec;
using svb::TrainConfig;
using svb::ad::Var;

namespace {

const PriorSpec kPrior = PriorSpec::isotropic(2, 0.0, 100.0);

svb::Dataset example1(std::uint64_t seed) {
  return svb::sample_data(ModelKind::Gaussian, {1.0, 0.25}, 100, seed);
}

PosteriorParams<Var> from_span(std::span<const Var> z, bool corr) {
  PosteriorParams<Var> p;
  p.correlation_enabled = corr;
  p.m = svb::VectorX<Var>(2);
  p.v = svb::VectorX<Var>(2);
  p.m << z[0], z[1];
  p.v << z[2], z[3];
  if (corr) {
    p.u = svb::VectorX<Var>(1);
    p.u << z[4];
  }
  return p;
}

double mean_of(const std::vector<double>& v, std::size_t a, std::size_t b) {
  return std::accumulate(v.begin() + a, v.begin() + b, 0.0) / static_cast<double>(b - a);
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("free energy at a frozen point matches the reference") {
  // tests/oracles/derive_values.py: fe_loglik, fe_kl, fe_total
  const std::vector<double> ys{0.5, 1.5, 2.0, -0.3, 0.9};
  PosteriorParams<double> p;
  p.m = Eigen::Vector2d(0.5, 0.2);
  p.v = Eigen::Vector2d(-0.5, 0.1);
  p.u = Eigen::VectorXd::Constant(1, 0.25);
  const std::vector<Eigen::VectorXd> eps{Eigen::Vector2d(0.3, -1.1)};
  const auto terms = svb::estimate_free_energy(ModelKind::Gaussian, ys, ys.size(), p, kPrior, eps);
  CHECK(std::abs(terms.mc_loglik - -6.6636669211368936) <= 1e-13);
  CHECK(std::abs(terms.kl - 4.0148790969847494) <= 1e-13);
  CHECK(std::abs(terms.free_energy - -10.678546018121643) <= 1e-13);
}

TEST_CASE("q equal to prior with zero noise gives loglik at the prior mean") {
  const auto data = example1(1);
  const PriorSpec unit = PriorSpec::isotropic(2, 0.0, 1.0);
  const auto q = svb::initial_posterior(unit, true);
  const std::vector<Eigen::VectorXd> eps{Eigen::Vector2d::Zero()};
  const auto terms =
      svb::estimate_free_energy(ModelKind::Gaussian, data.view(), data.size(), q, unit, eps);
  const double ll =
      svb::gaussian_loglik(svb::ThetaVector<double>{0.0, 0.0}, data.view(), data.size());
  CHECK(terms.kl == 0.0);
  CHECK(terms.free_energy == ll);
}

TEST_CASE("different noise changes F but not KL") {
  const auto data = example1(2);
  auto q = svb::initial_posterior(kPrior, true);
  q.m << 0.8, 1.2;
  q.u[0] = 0.1;
  svb::Rng rng(3);
  const std::vector<Eigen::VectorXd> e1{svb::sample_std_normal(2, rng)};
  const std::vector<Eigen::VectorXd> e2{svb::sample_std_normal(2, rng)};
  const auto a = svb::estimate_free_energy(ModelKind::Gaussian, data.view(), data.size(), q, kPrior, e1);
  const auto b = svb::estimate_free_energy(ModelKind::Gaussian, data.view(), data.size(), q, kPrior, e2);
  CHECK(a.free_energy != b.free_energy);
  CHECK(a.kl == b.kl);
}

TEST_CASE("F decomposes into MC likelihood minus KL") {
  const auto data = example1(4);
  svb::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    PosteriorParams<double> q = svb::initial_posterior(kPrior, true);
    q.m << 3.0 * rng.uniform() - 1.0, 3.0 * rng.uniform() - 1.0;
    q.v << rng.uniform() - 1.0, rng.uniform() - 1.0;
    q.u[0] = rng.uniform() - 0.5;
    std::vector<Eigen::VectorXd> eps;
    for (int l = 0; l < 3; ++l) eps.push_back(svb::sample_std_normal(2, rng));
    const auto t = svb::estimate_free_energy(ModelKind::Gaussian, data.view(), data.size(), q, kPrior, eps);
    CHECK(std::abs(t.free_energy - (t.mc_loglik - t.kl)) <= 1e-10 * std::abs(t.free_energy));
  }
}

TEST_CASE("frozen-noise gradient of F matches finite differences") {
  svb::Rng rng(90);
  for (ModelKind kind : {ModelKind::Gaussian, ModelKind::FoldedNormal}) {
    const auto data = svb::sample_data(kind, {1.0, 0.25}, 100, 8);
    for (bool corr : {true, false}) {
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<Eigen::VectorXd> eps;
        for (int l = 0; l < 2; ++l) eps.push_back(svb::sample_std_normal(2, rng));
        const svb::ad::TapeFunction f = [&](std::span<const Var> z) {
          return svb::estimate_free_energy(kind, data.view(), data.size(), from_span(z, corr),
                                           kPrior, eps)
              .free_energy;
        };
        Eigen::VectorXd at(corr ? 5 : 4);
        at[0] = 2.0 * rng.uniform();
        at[1] = 0.5 + rng.uniform();
        at[2] = -2.0 + rng.uniform();
        at[3] = -2.0 + rng.uniform();
        if (corr) at[4] = 0.2 * rng.uniform() - 0.1;
        CHECK(svb::ad::finite_diff_check(f, at, 1e-4).passed);
      }
    }
  }
}

TEST_CASE("gradient check along a real trajectory") {
  const auto data = example1(6);
  svb::Rng rng(61);
  for (std::size_t epochs : {1, 5, 10, 20, 40, 60, 100, 150, 250, 400}) {
    TrainConfig config;
    config.epochs = epochs;
    config.seed = 6;
    config.final_fe_samples = 2;
    const auto r = svb::fit(ModelKind::Gaussian, data, kPrior, config);
    const std::vector<Eigen::VectorXd> eps{svb::sample_std_normal(2, rng)};
    const svb::ad::TapeFunction f = [&](std::span<const Var> z) {
      return svb::estimate_free_energy(ModelKind::Gaussian, data.view(), data.size(),
                                       from_span(z, true), kPrior, eps)
          .free_energy;
    };
    CHECK(svb::ad::finite_diff_check(f, svb::flatten(r.params), 1e-4).passed);
  }
}

TEST_CASE("make_batches") {
  std::vector<double> data(100);
  std::iota(data.begin(), data.end(), 0.0);
  const auto ten = svb::make_batches(data, 10);
  REQUIRE(ten.size() == 10);
  for (std::size_t b = 0; b < 10; ++b) {
    CHECK(ten[b].size() == 10);
    CHECK(ten[b][0] == 10.0 * static_cast<double>(b));
  }
  const auto whole = svb::make_batches(data, 100);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].size() == 100);

  CHECK_THROWS_AS(svb::make_batches(data, 0), std::invalid_argument);
  CHECK_THROWS_AS(svb::make_batches(data, 101), std::invalid_argument);
}

TEST_CASE("remainder batch keeps the partition identity") {
  const auto data = svb::sample_data(ModelKind::Gaussian, {1.0, 0.25}, 10, 5);
  const auto batches = svb::make_batches(data.view(), 3);
  REQUIRE(batches.size() == 4);
  CHECK(batches[0].size() == 3);
  CHECK(batches[3].size() == 1);
  // Weighting each batch by its share M/N recovers the full log-likelihood
  // exactly: (M/N) * (N/M) * sum = sum, and the normaliser weights sum to 1.
  const svb::ThetaVector<double> theta{0.7, 1.1};
  double acc = 0.0;
  for (const auto& b : batches) {
    acc += static_cast<double>(b.size()) / 10.0 * svb::gaussian_loglik(theta, b, 10);
  }
  const double full = svb::gaussian_loglik(theta, data.view(), 10);
  CHECK(std::abs(acc - full) <= 1e-10 * std::abs(full));
}

TEST_CASE("config validation") {
  const auto data = example1(1);
  TrainConfig c;
  c.epochs = 0;
  CHECK_THROWS_AS(svb::fit(ModelKind::Gaussian, data, kPrior, c), std::invalid_argument);
  c = TrainConfig{};
  c.mc_samples = 0;
  CHECK_THROWS_AS(svb::fit(ModelKind::Gaussian, data, kPrior, c), std::invalid_argument);
  c = TrainConfig{};
  c.batch_size = 101;
  CHECK_THROWS_AS(svb::fit(ModelKind::Gaussian, data, kPrior, c), std::invalid_argument);
  c = TrainConfig{};
  CHECK_THROWS_AS(svb::fit(ModelKind::Gaussian, svb::Dataset{}, kPrior, c), std::invalid_argument);
  c.init = svb::initial_posterior(kPrior, false);
  CHECK_THROWS_AS(svb::fit(ModelKind::Gaussian, data, kPrior, c), std::invalid_argument);
}

TEST_CASE("folded model rejects non-positive data") {
  svb::Dataset data{{1.0, 2.0, -0.5}};
  CHECK_THROWS_AS(svb::fit(ModelKind::FoldedNormal, data, kPrior, TrainConfig{}),
                  std::domain_error);
}

TEST_CASE("lr = 0 leaves the initialisation untouched") {
  TrainConfig c;
  c.epochs = 1;
  c.adam.learning_rate = 0.0;
  const auto r = svb::fit(ModelKind::Gaussian, example1(1), kPrior, c);
  const auto init = svb::initial_posterior(kPrior, true);
  CHECK(r.params.m == init.m);
  CHECK(r.params.v == init.v);
  CHECK(r.params.u == init.u);
  CHECK(r.steps == 1);
}

TEST_CASE("custom initialisation is honoured") {
  TrainConfig c;
  c.epochs = 1;
  c.adam.learning_rate = 0.0;
  auto init = svb::initial_posterior(kPrior, true);
  init.m << 1.0, 1.5;
  init.v << -1.0, -2.0;
  init.u[0] = 0.05;
  c.init = init;
  const auto r = svb::fit(ModelKind::Gaussian, example1(1), kPrior, c);
  CHECK(svb::flatten(r.params) == svb::flatten(init));
}

TEST_CASE("fits are deterministic") {
  for (std::size_t batch : {0, 10}) {
    TrainConfig c;
    c.seed = 77;
    c.batch_size = batch;
    c.shuffle = batch != 0;
    const auto a = svb::fit(ModelKind::Gaussian, example1(2), kPrior, c);
    const auto b = svb::fit(ModelKind::Gaussian, example1(2), kPrior, c);
    CHECK(svb::flatten(a.params) == svb::flatten(b.params));
    CHECK(a.final_free_energy.mean == b.final_free_energy.mean);
    CHECK(a.final_free_energy.se == b.final_free_energy.se);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
      REQUIRE(a.trace[i].free_energy == b.trace[i].free_energy);
    }
  }
}

TEST_CASE("trace shape") {
  TrainConfig c;
  c.epochs = 7;
  c.batch_size = 30;  // 30, 30, 30, 10
  const auto r = svb::fit(ModelKind::Gaussian, example1(3), kPrior, c);
  REQUIRE(r.trace.size() == 28);
  CHECK(r.steps == 28);
  CHECK(r.trace[5].epoch == 1);
  CHECK(r.trace[5].step == 1);
  CHECK(r.trace.back().step == 3);
  for (const auto& rec : r.trace) {
    CHECK(rec.free_energy == doctest::Approx(rec.mc_loglik - rec.kl).epsilon(1e-12));
  }
}

TEST_CASE("final free energy standard error") {
  const auto data = example1(5);
  auto q = svb::initial_posterior(kPrior, true);
  q.m << 1.0, 1.4;
  q.v << -1.5, -1.9;
  svb::Rng rng(5);
  svb::Rng replay(5);
  const auto est = svb::final_free_energy(ModelKind::Gaussian, data, q, kPrior, 500, rng);
  const double kl = svb::kl_to_prior(q, kPrior);
  std::vector<double> values;
  for (int i = 0; i < 500; ++i) {
    const Eigen::VectorXd th = svb::reparam_sample(q, svb::sample_std_normal(2, replay));
    values.push_back(svb::gaussian_loglik(svb::ThetaVector<double>{th[0], th[1]}, data.view(),
                                          data.size()) -
                     kl);
  }
  const double mean = mean_of(values, 0, values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / 499.0);
  CHECK(est.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(est.se == doctest::Approx(sd / std::sqrt(500.0)).epsilon(1e-10));
  CHECK(est.samples == 500);
}

TEST_CASE("Example 1 posterior lands near the sample moments") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto data = example1(seed);
    TrainConfig c;
    c.seed = seed;
    const auto r = svb::fit(ModelKind::Gaussian, data, kPrior, c);
    const double mean = mean_of(data.values, 0, data.size());
    double ss = 0.0;
    for (double y : data.values) ss += (y - mean) * (y - mean);
    const double var = ss / static_cast<double>(data.size() - 1);
    CHECK(std::abs(r.posterior.mean[0] - mean) <= 0.3);
    CHECK(std::abs(r.posterior.mean[1] - std::log(var)) <= 0.35);
    REQUIRE(r.trace.size() == 400);

    std::vector<double> f;
    for (const auto& rec : r.trace) f.push_back(rec.free_energy);
    CHECK(mean_of(f, 300, 400) > mean_of(f, 0, 20));
  }
}

TEST_CASE("a runaway learning rate aborts with a diagnostic") {
  TrainConfig c;
  c.adam.learning_rate = 200.0;
  c.epochs = 50;
  try {
    (void)svb::fit(ModelKind::Gaussian, example1(1), kPrior, c);
    FAIL("expected divergence");
  } catch (const svb::DivergenceError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("step") != std::string::npos);
    CHECK(msg.find("zeta") != std::string::npos);
  }
}

}  // TEST_SUITE
