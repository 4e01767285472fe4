#include "m6cast/garch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace m6cast::garch {

double GarchParams::sum() const {
  double s = 0.0;
  for (double a : alpha) s += a;
  for (double b : beta) s += b;
  return s;
}

bool GarchParams::feasible(double delta) const {
  for (double a : alpha)
    if (!(a >= 0.0)) return false;
  for (double b : beta)
    if (!(b >= 0.0)) return false;
  return sum() <= 1.0 - delta;
}

std::vector<double> GarchParams::flat() const {
  std::vector<double> v;
  v.reserve(alpha.size() + beta.size());
  v.insert(v.end(), alpha.begin(), alpha.end());
  v.insert(v.end(), beta.begin(), beta.end());
  return v;
}

GarchParams GarchParams::from_flat(const std::vector<double>& v, const GarchOrder& order) {
  if (static_cast<int>(v.size()) != order.dim())
    throw std::invalid_argument("GarchParams::from_flat: size mismatch");
  GarchParams theta;
  theta.alpha.assign(v.begin(), v.begin() + order.p);
  theta.beta.assign(v.begin() + order.p, v.end());
  return theta;
}

void VolState::seed_first(double eps2_first, double sigma2_first, const GarchOrder& order) {
  eps2_lags.assign(static_cast<std::size_t>(order.p), eps2_first);
  sigma2_lags.assign(static_cast<std::size_t>(order.q), sigma2_first);
  sens_lags.assign(static_cast<std::size_t>(order.q),
                   std::vector<double>(static_cast<std::size_t>(order.dim()), 0.0));
  initialized = true;
}

void VolState::push(double eps2, double sigma2, const std::vector<double>& sens) {
  if (!eps2_lags.empty()) {
    std::rotate(eps2_lags.rbegin(), eps2_lags.rbegin() + 1, eps2_lags.rend());
    eps2_lags[0] = eps2;
  }
  if (!sigma2_lags.empty()) {
    std::rotate(sigma2_lags.rbegin(), sigma2_lags.rbegin() + 1, sigma2_lags.rend());
    sigma2_lags[0] = sigma2;
    std::rotate(sens_lags.rbegin(), sens_lags.rbegin() + 1, sens_lags.rend());
    sens_lags[0] = sens;
  }
}

double variance_floor(double gamma2) {
  return 1e-12 * std::max(gamma2, 1e-300);
}

double volatility_step(const VolState& state, const GarchParams& theta, double gamma2) {
  if (!state.initialized) throw std::logic_error("volatility_step: state not initialized");
  if (!(gamma2 >= 0.0)) throw std::invalid_argument("volatility_step: gamma2 must be >= 0");
  double s2 = gamma2;
  for (std::size_t i = 0; i < theta.alpha.size(); ++i)
    s2 += theta.alpha[i] * (state.eps2_lags[i] - gamma2);
  for (std::size_t j = 0; j < theta.beta.size(); ++j)
    s2 += theta.beta[j] * (state.sigma2_lags[j] - gamma2);
  // For feasible theta and clean lag buffers, sigma_t^2 >= (1 - sum(theta)) * gamma2.
  // Falling measurably below that bound means the lags were corrupted.
  const double lower = (1.0 - theta.sum()) * gamma2;
  if (s2 < lower - 1e-9 * (gamma2 + std::abs(s2)))
    throw std::logic_error("volatility_step: positivity bound violated (corrupt lag state)");
  return std::max(s2, variance_floor(gamma2));
}

double ql_loss(double sigma2, double x, QlConvention conv) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("ql_loss: sigma2 must be positive");
  const double log_term =
      conv == QlConvention::paper ? 0.5 * std::log(sigma2) : std::log(sigma2);
  return log_term + x * x / sigma2;
}

double ql_dloss_dsigma2(double sigma2, double x, QlConvention conv) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("ql_dloss_dsigma2: sigma2 must be positive");
  const double c = conv == QlConvention::paper ? 0.5 : 1.0;
  return c / sigma2 - x * x / (sigma2 * sigma2);
}

SigmaAndSens volatility_sensitivity_step(const VolState& state, const GarchParams& theta,
                                         double gamma2) {
  if (!state.initialized)
    throw std::logic_error("volatility_sensitivity_step: state not initialized");
  if (!(gamma2 >= 0.0))
    throw std::invalid_argument("volatility_sensitivity_step: gamma2 must be >= 0");

  const std::size_t p = theta.alpha.size();
  const std::size_t q = theta.beta.size();
  SigmaAndSens out;
  out.dsigma2_dtheta.assign(p + q, 0.0);

  double s2 = gamma2;
  for (std::size_t i = 0; i < p; ++i) {
    const double base = state.eps2_lags[i] - gamma2;
    s2 += theta.alpha[i] * base;
    out.dsigma2_dtheta[i] = base;
  }
  for (std::size_t j = 0; j < q; ++j) {
    const double base = state.sigma2_lags[j] - gamma2;
    s2 += theta.beta[j] * base;
    out.dsigma2_dtheta[p + j] = base;
  }
  // beta feedback through the lagged sensitivities, shared by every component
  for (std::size_t j = 0; j < q; ++j) {
    const double bj = theta.beta[j];
    if (bj == 0.0) continue;
    const std::vector<double>& lag = state.sens_lags[j];
    for (std::size_t k = 0; k < p + q; ++k) out.dsigma2_dtheta[k] += bj * lag[k];
  }

  const double floor = variance_floor(gamma2);
  if (s2 <= floor) {
    out.sigma2 = floor;
    std::fill(out.dsigma2_dtheta.begin(), out.dsigma2_dtheta.end(), 0.0);
  } else {
    out.sigma2 = s2;
  }
  return out;
}

std::vector<double> loss_gradient(double sigma2, const std::vector<double>& dsigma2_dtheta,
                                  double x, QlConvention conv) {
  const double dl = ql_dloss_dsigma2(sigma2, x, conv);
  std::vector<double> grad(dsigma2_dtheta.size());
  for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = dl * dsigma2_dtheta[k];
  return grad;
}

PathEval evaluate_ql_path(const std::vector<double>& eps, const GarchOrder& order,
                          const GarchParams& theta, QlConvention conv) {
  if (!order.valid()) throw std::invalid_argument("evaluate_ql_path: invalid order");
  if (theta.dim() != order.dim())
    throw std::invalid_argument("evaluate_ql_path: theta/order size mismatch");
  if (eps.empty()) throw std::invalid_argument("evaluate_ql_path: empty series");

  PathEval out;
  out.grad.assign(static_cast<std::size_t>(order.dim()), 0.0);
  out.sigma2.reserve(eps.size());

  VolState vol;
  double mu = 0.0, gamma2 = 0.0;
  std::int64_t t = 0;
  for (double x : eps) {
    t += 1;
    const double gamma2_prev = gamma2;
    const double td = static_cast<double>(t);
    mu = td / (td + 1.0) * mu + 1.0 / (td + 1.0) * x;
    gamma2 = (td - 1.0) / td * gamma2 + (x - mu) * (x - mu) / td;

    double sigma2;
    std::vector<double> sens(static_cast<std::size_t>(order.dim()), 0.0);
    if (t == 1) {
      sigma2 = std::max(x * x, variance_floor(gamma2_prev));
      vol.seed_first(x * x, sigma2, order);
      out.sigma2.push_back(sigma2);
      out.loss += ql_loss(sigma2, x, conv);
      continue;  // sigma_1^2 is pinned; zero gradient, lags already seeded
    }
    const SigmaAndSens step = volatility_sensitivity_step(vol, theta, gamma2_prev);
    sigma2 = step.sigma2;
    sens = step.dsigma2_dtheta;
    out.sigma2.push_back(sigma2);
    out.loss += ql_loss(sigma2, x, conv);
    const double dl = ql_dloss_dsigma2(sigma2, x, conv);
    for (std::size_t k = 0; k < sens.size(); ++k) out.grad[k] += dl * sens[k];
    vol.push(x * x, sigma2, sens);
  }
  return out;
}

}  // namespace m6cast::garch
