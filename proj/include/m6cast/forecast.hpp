#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "m6cast/adavol.hpp"
#include "m6cast/returns.hpp"

namespace m6cast::forecast {

struct GaussianMarginal {
  double mean = 0.0;
  double std = 0.0;  // per-day volatility, > 0
};

struct EmpiricalMarginal {
  std::vector<double> samples;  // historical daily log-returns, non-empty
};

using Marginal = std::variant<GaussianMarginal, EmpiricalMarginal>;

/// The sampling law of the horizon return matrix: frozen per-asset daily
/// marginals, an optional correlation matrix coupling the Gaussian assets,
/// and the horizon length. Immutable once assembled.
struct JointForecast {
  std::vector<int> assets;
  std::vector<Marginal> marginals;
  std::optional<Eigen::MatrixXd> correlation;  // unit diagonal, PSD
  int horizon_days = 20;

  void validate() const;  // throws std::invalid_argument
};

/// One draw of the horizon: daily log-returns, row-major [day][asset].
struct ReturnSample {
  int horizon = 0;
  int n_assets = 0;
  std::vector<double> data;

  [[nodiscard]] double at(int day, int asset_col) const {
    return data[static_cast<std::size_t>(day) * n_assets + asset_col];
  }
};

/// Freeze the per-asset marginals at submission time: Gaussian(mu_hat_a,
/// sqrt(sigma2_next)) from each estimator state, empirical marginals drawn
/// from the asset's own returns over `empirical_window`.
JointForecast build_marginals(const returns::ReturnPanel& history,
                              const std::map<int, adavol::AdaVolState>& states,
                              const returns::ClassMeans& means,
                              const std::set<int>& empirical_assets,
                              const returns::DateRange& empirical_window,
                              int horizon_days = 20);

/// Pairwise-complete sample correlations of daily log-returns over `window`.
/// Pairs with fewer than `min_overlap` common observations get 0. The
/// assembled matrix is made PSD by clipping negative eigenvalues to zero and
/// rescaling back to a unit diagonal.
Eigen::MatrixXd estimate_correlations(const returns::ReturnPanel& panel,
                                      const returns::DateRange& window, int min_overlap = 60);

/// Repeatable sampler over a frozen forecast. Draw s is a pure function of
/// (seed, s): Gaussian assets use one normal per (sample, day, asset) —
/// coupled through a factor of the covariance when a correlation matrix is
/// present — and empirical assets one uniform index per (sample, day, asset).
class HorizonSampler {
 public:
  explicit HorizonSampler(const JointForecast& forecast);

  [[nodiscard]] ReturnSample draw(std::uint64_t seed, std::uint32_t sample_index) const;

  [[nodiscard]] int horizon() const { return forecast_->horizon_days; }
  [[nodiscard]] int n_assets() const { return static_cast<int>(forecast_->assets.size()); }

 private:
  const JointForecast* forecast_;
  std::vector<int> gaussian_cols_;
  std::vector<double> gauss_mean_;
  Eigen::MatrixXd factor_;  // covariance factor, empty when uncorrelated
};

std::vector<ReturnSample> sample_horizon_returns(const JointForecast& forecast, int n_samples,
                                                 std::uint64_t seed);

/// Forecast snapshot round trip (marginal parameters, correlation, horizon).
std::string to_json(const JointForecast& forecast);
JointForecast forecast_from_json(const std::string& text);

}  // namespace m6cast::forecast
