#include <doctest.h>

#include <cmath>
#include <vector>

#include "m6cast/backtest.hpp"
#include "m6cast/garch.hpp"
#include "m6cast/rng.hpp"
#include "oracles.hpp"

using namespace m6cast;
using garch::GarchOrder;
using garch::GarchParams;
using garch::QlConvention;
using garch::VolState;

namespace {

VolState state_with(std::vector<double> eps2, std::vector<double> sigma2, const GarchOrder& order) {
  VolState s;
  s.eps2_lags = std::move(eps2);
  s.sigma2_lags = std::move(sigma2);
  s.sens_lags.assign(s.sigma2_lags.size(),
                     std::vector<double>(static_cast<std::size_t>(order.dim()), 0.0));
  s.initialized = true;
  return s;
}

// Feasible random theta with sum <= 0.95, spread over p+q coordinates.
GarchParams random_theta(const GarchOrder& order, std::uint32_t id) {
  std::vector<double> raw(static_cast<std::size_t>(order.dim()));
  double sum = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const double u = rng::uniform_at(2024, rng::Stream::perturbation, id, 7,
                                     static_cast<std::uint32_t>(k));
    raw[k] = u;
    sum += u;
  }
  const double cap = 0.2 + 0.75 * rng::uniform_at(2024, rng::Stream::perturbation, id, 8, 0);
  for (double& v : raw) v *= cap / std::max(sum, 1e-12);
  return GarchParams::from_flat(raw, order);
}

}  // namespace

TEST_CASE("volatility_step: pinned substitutions") {
  // theta = 0 collapses to gamma2
  {
    const GarchOrder order{1, 1};
    const GarchParams theta({0.0}, {0.0});
    const VolState s = state_with({5.0}, {3.0}, order);
    CHECK(garch::volatility_step(s, theta, 1.7) == doctest::Approx(1.7).epsilon(1e-15));
  }
  // GARCH(1,0)
  {
    const GarchOrder order{1, 0};
    const GarchParams theta({0.5}, {});
    const VolState s = state_with({2.0}, {}, order);
    CHECK(garch::volatility_step(s, theta, 1.0) == doctest::Approx(1.5).epsilon(1e-15));
  }
  // GARCH(1,1)
  {
    const GarchOrder order{1, 1};
    const GarchParams theta({0.1}, {0.8});
    const VolState s = state_with({4.0}, {2.0}, order);
    CHECK(garch::volatility_step(s, theta, 1.0) == doctest::Approx(2.1).epsilon(1e-15));
  }
}

TEST_CASE("volatility_step positivity lower bound") {
  const GarchOrder order{2, 1};
  for (std::uint32_t id = 0; id < 50; ++id) {
    const GarchParams theta = random_theta(order, id);
    const double gamma2 = 0.5 + rng::uniform_at(1, rng::Stream::perturbation, id, 9, 0);
    VolState s = state_with({rng::uniform_at(1, rng::Stream::perturbation, id, 10, 0),
                             rng::uniform_at(1, rng::Stream::perturbation, id, 10, 1)},
                            {rng::uniform_at(1, rng::Stream::perturbation, id, 10, 2)}, order);
    const double s2 = garch::volatility_step(s, theta, gamma2);
    CHECK(s2 >= (1.0 - theta.sum()) * gamma2 * (1.0 - 1e-12));
    CHECK(s2 > 0.0);
  }
}

TEST_CASE("ql_loss: pinned values and the convention switch") {
  CHECK(garch::ql_loss(1.0, 0.0) == 0.0);
  CHECK(garch::ql_loss(1.0, 1.0) == 1.0);
  CHECK(garch::ql_loss(std::exp(2.0), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  // standard convention doubles the log term
  CHECK(garch::ql_loss(std::exp(2.0), 0.0, QlConvention::standard) ==
        doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(garch::ql_loss(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(garch::ql_loss(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("loss_gradient: stationarity and pinned values") {
  // paper convention: gradient vanishes at sigma2 = 2 x^2
  {
    const double x = 0.7;
    const auto g = garch::loss_gradient(2.0 * x * x, {1.0, -2.0}, x, QlConvention::paper);
    CHECK(std::abs(g[0]) < 1e-15);
    CHECK(std::abs(g[1]) < 1e-15);
  }
  // standard convention: gradient vanishes at sigma2 = x^2
  {
    const double x = 0.7;
    const auto g = garch::loss_gradient(x * x, {1.0, -2.0}, x, QlConvention::standard);
    CHECK(std::abs(g[0]) < 1e-15);
  }
  const auto g = garch::loss_gradient(1.0, {1.0, 0.0}, 0.0, QlConvention::paper);
  CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g[1] == 0.0);
}

TEST_CASE("first-step sensitivities match hand computation") {
  // GARCH(1,0): d sigma2 / d alpha1 = eps2 - gamma2
  {
    const GarchOrder order{1, 0};
    const GarchParams theta({0.5}, {});
    const VolState s = state_with({2.0}, {}, order);
    const auto out = garch::volatility_sensitivity_step(s, theta, 1.0);
    CHECK(out.dsigma2_dtheta[0] == doctest::Approx(1.0).epsilon(1e-15));
  }
  // GARCH(1,1) with zero sens lags
  {
    const GarchOrder order{1, 1};
    const GarchParams theta({0.1}, {0.8});
    const VolState s = state_with({4.0}, {2.0}, order);
    const auto out = garch::volatility_sensitivity_step(s, theta, 1.0);
    CHECK(out.dsigma2_dtheta[0] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(out.dsigma2_dtheta[1] == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("sensitivity recursion matches finite differences over full histories") {
  for (int p = 0; p <= 2; ++p) {
    for (int q = 0; q <= 2; ++q) {
      if (p + q == 0) continue;
      const GarchOrder order{p, q};
      for (std::uint32_t trial = 0; trial < 4; ++trial) {
        const std::uint32_t id = static_cast<std::uint32_t>(100 * p + 10 * q) + trial;
        const GarchParams theta = random_theta(order, id);
        const auto series = backtest::simulate_garch({1, 1}, GarchParams({0.1}, {0.8}), 1.0, 60,
                                                     rng::derive_seed(55, id));
        const auto path = garch::evaluate_ql_path(series, order, theta, QlConvention::paper);

        // recompute the final-step sensitivity through the recursion
        const auto fd = oracles::fd_sigma2_sensitivity(series, order, theta);
        // reconstruct analytic sensitivity of the last sigma2: rerun the path
        // and capture the final step directly
        VolState vol;
        double mu = 0.0, gamma2 = 0.0, gamma2_prev = 0.0;
        std::vector<double> last_sens;
        for (std::size_t t = 1; t <= series.size(); ++t) {
          const double x = series[t - 1];
          gamma2_prev = gamma2;
          const double td = static_cast<double>(t);
          mu = td / (td + 1.0) * mu + x / (td + 1.0);
          gamma2 = (td - 1.0) / td * gamma2 + (x - mu) * (x - mu) / td;
          if (t == 1) {
            vol.seed_first(x * x, x * x, order);
            last_sens.assign(static_cast<std::size_t>(order.dim()), 0.0);
            continue;
          }
          const auto step = garch::volatility_sensitivity_step(vol, theta, gamma2_prev);
          last_sens = step.dsigma2_dtheta;
          vol.push(x * x, step.sigma2, step.dsigma2_dtheta);
        }
        for (std::size_t k = 0; k < last_sens.size(); ++k) {
          const double denom = std::max(std::abs(fd[k]), 1e-3);
          CHECK(std::abs(last_sens[k] - fd[k]) / denom < 1e-6);
        }
        // and the summed-loss gradient against its own finite differences
        const auto fd_grad = oracles::fd_ql_gradient(series, order, theta, QlConvention::paper);
        for (std::size_t k = 0; k < fd_grad.size(); ++k) {
          const double denom = std::max(std::abs(fd_grad[k]), 1e-2);
          CHECK(std::abs(path.grad[k] - fd_grad[k]) / denom < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("scale equivariance: c^2 in observations and gamma2 scales sigma2 by c^2") {
  const GarchOrder order{2, 2};
  const GarchParams theta({0.05, 0.03}, {0.6, 0.1});
  const double c = 3.7;
  const auto series = backtest::simulate_garch({1, 1}, GarchParams({0.1}, {0.8}), 1.0, 200, 7);
  std::vector<double> scaled = series;
  for (double& v : scaled) v *= c;

  const auto base = garch::evaluate_ql_path(series, order, theta, QlConvention::paper);
  const auto big = garch::evaluate_ql_path(scaled, order, theta, QlConvention::paper);
  for (std::size_t t = 0; t < base.sigma2.size(); ++t) {
    const double want = base.sigma2[t] * c * c;
    CHECK(std::abs(big.sigma2[t] - want) / want < 1e-12);
  }
  // gradient is scale-invariant
  for (std::size_t k = 0; k < base.grad.size(); ++k) {
    const double denom = std::max(std::abs(base.grad[k]), 1e-6);
    CHECK(std::abs(big.grad[k] - base.grad[k]) / denom < 1e-9);
  }
}

TEST_CASE("degenerate all-zero input stays finite through the floor") {
  const std::vector<double> zeros(10, 0.0);
  const auto path = garch::evaluate_ql_path(zeros, {1, 1}, GarchParams({0.1}, {0.8}),
                                            QlConvention::paper);
  CHECK(std::isfinite(path.loss));
  for (double s2 : path.sigma2) CHECK(s2 > 0.0);
}
