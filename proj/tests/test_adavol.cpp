#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "m6cast/adavol.hpp"
#include "m6cast/backtest.hpp"
#include "m6cast/rng.hpp"
#include "oracles.hpp"

using namespace m6cast;
using adavol::AdaVolConfig;
using adavol::AdaVolState;
using garch::GarchParams;

TEST_CASE("init matches the initialisation rule") {
  const AdaVolConfig cfg = AdaVolConfig::defaults();
  const AdaVolState s = adavol::init(cfg);
  CHECK(s.t == 0);
  CHECK(s.mu == 0.0);
  CHECK(s.gamma2 == 0.0);
  REQUIRE(s.G.size() == 2);
  CHECK(s.G[0] == 1e-8);
  CHECK(s.G[1] == 1e-8);
  CHECK(s.theta.alpha[0] == 0.1);
  CHECK(s.theta.beta[0] == 0.8);
}

TEST_CASE("init projects an infeasible theta0 and warns") {
  AdaVolConfig cfg = AdaVolConfig::defaults();
  cfg.theta0 = GarchParams({0.7}, {0.7});
  std::string warning;
  const AdaVolState s = adavol::init(cfg, &warning);
  CHECK(!warning.empty());
  CHECK(s.theta.alpha[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(s.theta.beta[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(s.theta.feasible(cfg.delta));
}

TEST_CASE("update_stats applies the two recursions literally") {
  // t=1: the mu0 = 0 prior acts as a pseudo-observation
  auto [mu1, g1] = adavol::update_stats(1, 0.0, 0.0, 2.0);
  CHECK(mu1 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g1 == doctest::Approx(1.0).epsilon(1e-15));
  // t=2 fixed point
  auto [mu2, g2] = adavol::update_stats(2, 1.0, 1.0, 1.0);
  CHECK(mu2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(adavol::update_stats(0, 0.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("project_theta wrapper: pinned cases") {
  const garch::GarchOrder order{1, 1};
  auto p = adavol::project_theta({0.1, 0.8}, 1e-6, order);
  CHECK(p.alpha[0] == 0.1);
  CHECK(p.beta[0] == 0.8);
  p = adavol::project_theta({-0.3, 0.5}, 1e-6, order);
  CHECK(p.alpha[0] == 0.0);
  CHECK(p.beta[0] == 0.5);
  CHECK_THROWS_AS(adavol::project_theta({std::nan(""), 0.0}, 1e-6, order), std::invalid_argument);
}

TEST_CASE("first observation pins sigma1^2 = eps1^2 with zero gradient") {
  AdaVolConfig cfg = AdaVolConfig::defaults();
  AdaVolState s = adavol::init(cfg);
  const double forecast = adavol::step(s, 0.02);
  CHECK(s.t == 1);
  CHECK(s.vol.sigma2_lags[0] == doctest::Approx(4e-4).epsilon(1e-15));
  CHECK(s.theta.alpha[0] == 0.1);  // zero gradient leaves theta0 untouched
  CHECK(s.theta.beta[0] == 0.8);
  CHECK(s.G[0] == 1e-8);
  // forecast = gamma1^2 + 0.1 (eps^2 - gamma1^2) + 0.8 (sigma1^2 - gamma1^2)
  const double gamma1 = (0.02 - 0.01) * (0.02 - 0.01);
  const double want = gamma1 + 0.1 * (4e-4 - gamma1) + 0.8 * (4e-4 - gamma1);
  CHECK(forecast == doctest::Approx(want).epsilon(1e-14));
  CHECK(s.sigma2_next == forecast);
}

TEST_CASE("non-finite observations are rejected without touching state") {
  AdaVolState s = adavol::init(AdaVolConfig::defaults());
  adavol::step(s, 0.01);
  const AdaVolState before = s;
  CHECK_THROWS_AS(adavol::step(s, std::nan("")), std::invalid_argument);
  CHECK(s.t == before.t);
  CHECK(s.mu == before.mu);
  CHECK(s.theta.alpha == before.theta.alpha);
}

TEST_CASE("theta stays feasible and G monotone along a run") {
  AdaVolConfig cfg = AdaVolConfig::defaults();
  AdaVolState s = adavol::init(cfg);
  const auto series =
      backtest::simulate_garch({1, 1}, GarchParams({0.15}, {0.7}), 2.0, 3000, 99);
  std::vector<double> prev_g = s.G;
  for (double x : series) {
    adavol::step(s, x);
    CHECK(s.theta.feasible(cfg.delta));
    for (std::size_t k = 0; k < s.G.size(); ++k) {
      CHECK(s.G[k] >= prev_g[k]);
      CHECK(s.G[k] >= cfg.eps);
    }
    prev_g = s.G;
  }
}

TEST_CASE("theta0 = 0 on i.i.d. data: recursion collapses toward gamma2") {
  AdaVolConfig cfg = AdaVolConfig::defaults();
  cfg.theta0 = GarchParams({0.0}, {0.0});
  cfg.eta = 0.01;
  AdaVolState s = adavol::init(cfg);
  for (std::uint32_t t = 0; t < 3000; ++t)
    adavol::step(s, rng::normal_at(5, rng::Stream::simulation, 1, 0, t));
  CHECK(s.theta.sum() < 0.3);
  CHECK(std::abs(s.sigma2_next / s.gamma2 - 1.0) < 0.25);
}

TEST_CASE("determinism: identical inputs give bit-identical states") {
  const auto series = backtest::simulate_garch({1, 1}, GarchParams({0.1}, {0.8}), 1.5, 500, 3);
  AdaVolState a = adavol::init(AdaVolConfig::defaults());
  AdaVolState b = adavol::init(AdaVolConfig::defaults());
  for (double x : series) {
    const double fa = adavol::step(a, x);
    const double fb = adavol::step(b, x);
    CHECK(fa == fb);
  }
  CHECK(a.theta.alpha[0] == b.theta.alpha[0]);
  CHECK(a.theta.beta[0] == b.theta.beta[0]);
  CHECK(a.mu == b.mu);
  CHECK(a.gamma2 == b.gamma2);
}

TEST_CASE("theta trajectory is invariant to observation scale") {
  const auto series = backtest::simulate_garch({1, 1}, GarchParams({0.1}, {0.8}), 1.0, 2000, 17);
  const double c = 250.0;  // index points instead of unit scale
  AdaVolState a = adavol::init(AdaVolConfig::defaults());
  AdaVolState b = adavol::init(AdaVolConfig::defaults());
  for (double x : series) {
    adavol::step(a, x);
    adavol::step(b, c * x);
    const auto ta = a.theta.flat();
    const auto tb = b.theta.flat();
    for (std::size_t k = 0; k < ta.size(); ++k)
      CHECK(std::abs(ta[k] - tb[k]) <= 1e-6 * std::max(1.0, std::abs(ta[k])));
  }
}

TEST_CASE("estimator walks toward the truth on simulated data") {
  // light single-seed version of the recovery criterion
  AdaVolConfig cfg = AdaVolConfig::defaults();
  cfg.ql = garch::QlConvention::standard;
  cfg.theta0 = GarchParams({0.05}, {0.5});
  AdaVolState s = adavol::init(cfg);
  const auto series = backtest::simulate_garch({1, 1}, GarchParams({0.1}, {0.8}), 1e-4, 20000, 1);
  for (double x : series) adavol::step(s, x);
  CHECK(std::abs(s.theta.alpha[0] - 0.1) <= 0.15);
  CHECK(std::abs(s.theta.beta[0] - 0.8) <= 0.15);
}

TEST_CASE("JSON round trip preserves the full state bit-for-bit") {
  AdaVolState s = adavol::init(AdaVolConfig::defaults());
  const auto series = backtest::simulate_garch({1, 1}, GarchParams({0.12}, {0.75}), 1.0, 257, 21);
  for (double x : series) adavol::step(s, x);

  const std::string text = adavol::to_json(s);
  AdaVolState r = adavol::from_json(text);
  CHECK(r.t == s.t);
  CHECK(r.mu == s.mu);
  CHECK(r.gamma2 == s.gamma2);
  CHECK(r.G == s.G);
  CHECK(r.theta.alpha == s.theta.alpha);
  CHECK(r.theta.beta == s.theta.beta);
  CHECK(r.vol.eps2_lags == s.vol.eps2_lags);
  CHECK(r.vol.sigma2_lags == s.vol.sigma2_lags);
  CHECK(r.sigma2_next == s.sigma2_next);

  // warm restart: both continue identically
  for (std::uint32_t t = 0; t < 50; ++t) {
    const double x = rng::normal_at(9, rng::Stream::simulation, 2, 0, t);
    CHECK(adavol::step(s, x) == adavol::step(r, x));
  }

  const std::string path = "adavol_state_test.json";
  adavol::save(s, path);
  const AdaVolState loaded = adavol::load(path);
  CHECK(loaded.t == s.t);
  CHECK(loaded.theta.alpha == s.theta.alpha);
  std::remove(path.c_str());
  CHECK_THROWS(adavol::load("does_not_exist.json"));
}
