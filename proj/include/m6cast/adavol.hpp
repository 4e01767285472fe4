#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "m6cast/garch.hpp"

namespace m6cast::adavol {

/// Online estimator configuration. eta and eps are the AdaGrad constants;
/// delta closes the constraint set to Theta_delta = { theta >= 0,
/// sum(theta) <= 1 - delta } so the Euclidean projection is well defined.
struct AdaVolConfig {
  garch::GarchOrder order{1, 1};
  double eta = 0.1;
  double eps = 1e-8;
  garch::GarchParams theta0;
  double delta = 1e-6;
  garch::QlConvention ql = garch::QlConvention::paper;

  /// theta0 = (0.1, 0.8) for GARCH(1,1); for other orders the same masses
  /// 0.1 and 0.8 are spread evenly over the alpha and beta blocks.
  static AdaVolConfig defaults(garch::GarchOrder order = {1, 1});

  void validate() const;  // throws std::invalid_argument
};

/// Full state of one online estimator. Updating is strictly sequential;
/// distinct states are independent values.
struct AdaVolState {
  AdaVolConfig config;
  std::int64_t t = 0;
  double mu = 0.0;
  double gamma2 = 0.0;
  std::vector<double> G;        // accumulated squared gradients, >= eps
  garch::GarchParams theta;
  garch::VolState vol;
  double sigma2_next = 0.0;     // one-step-ahead forecast, valid once t >= 1
};

/// Initial state per the estimator's initialisation rule: t = 0, mu = 0,
/// gamma2 = 0, G = eps * 1, theta = theta0 (projected onto Theta_delta if
/// infeasible; `warning` receives a note when that happens).
AdaVolState init(const AdaVolConfig& config, std::string* warning = nullptr);

/// Running mean/variance recursions, evaluated for the already-incremented
/// observation counter t:
///   mu_t     = t/(t+1) mu_{t-1} + 1/(t+1) eps_t
///   gamma2_t = (t-1)/t gamma2_{t-1} + (eps_t - mu_t)^2 / t
std::pair<double, double> update_stats(std::int64_t t, double mu_prev, double gamma2_prev,
                                       double eps_obs);

/// Euclidean projection of a raw parameter vector onto Theta_delta.
garch::GarchParams project_theta(const std::vector<double>& theta_raw, double delta,
                                 const garch::GarchOrder& order);

/// One online update with observation eps_obs (already centered by the
/// caller when centering is wanted). Returns the one-step volatility
/// forecast sigma^2_{t+1}(theta_t). Throws on non-finite input, leaving the
/// state untouched.
double step(AdaVolState& state, double eps_obs);

/// Versioned JSON round trip (full double precision) for warm restarts.
std::string to_json(const AdaVolState& state);
AdaVolState from_json(const std::string& text);
void save(const AdaVolState& state, const std::string& path);
AdaVolState load(const std::string& path);

}  // namespace m6cast::adavol
