#pragma once

#include <cstdint>
#include <vector>

namespace m6cast::garch {

/// Which quasi-likelihood loss the estimator differentiates.
///
/// `paper` is l(sigma2, x) = (1/2) ln(sigma2) + x^2 / sigma2, whose pointwise
/// minimiser is sigma2 = 2 x^2. `standard` is the usual Gaussian QMLE loss
/// ln(sigma2) + x^2 / sigma2 with minimiser sigma2 = x^2. Both are exposed;
/// callers pick.
enum class QlConvention { paper, standard };

struct GarchOrder {
  int p = 1;  // ARCH lags (squared observations)
  int q = 1;  // GARCH lags (conditional variances)

  [[nodiscard]] int dim() const { return p + q; }
  [[nodiscard]] bool valid() const { return p >= 0 && q >= 0 && p + q >= 1; }
};

/// theta = (alpha_1..alpha_p, beta_1..beta_q), constrained to
/// Theta = { theta >= 0, sum(theta) < 1 }.
struct GarchParams {
  std::vector<double> alpha;
  std::vector<double> beta;

  GarchParams() = default;
  GarchParams(std::vector<double> a, std::vector<double> b)
      : alpha(std::move(a)), beta(std::move(b)) {}

  [[nodiscard]] int dim() const { return static_cast<int>(alpha.size() + beta.size()); }
  [[nodiscard]] double sum() const;
  /// theta >= 0 componentwise and sum(theta) <= 1 - delta.
  [[nodiscard]] bool feasible(double delta = 0.0) const;
  [[nodiscard]] std::vector<double> flat() const;
  static GarchParams from_flat(const std::vector<double>& v, const GarchOrder& order);
};

/// Lag buffers for the variance recursion. Index 0 is the most recent lag
/// (t-1). Sensitivity lags hold d sigma^2_{t-j} / d theta, each of length
/// p + q, and are zero at initialisation.
struct VolState {
  std::vector<double> eps2_lags;                // epsilon^2_{t-1} .. epsilon^2_{t-p}
  std::vector<double> sigma2_lags;              // sigma^2_{t-1} .. sigma^2_{t-q}
  std::vector<std::vector<double>> sens_lags;   // q vectors of length p+q
  bool initialized = false;

  /// Fill every lag slot from the first observation: eps2 lags with eps1^2,
  /// sigma2 lags with sigma1^2 (= eps1^2 by the initialisation rule), and
  /// zero sensitivities.
  void seed_first(double eps2_first, double sigma2_first, const GarchOrder& order);

  /// Shift the buffers by one step. `sens` must have length p+q when q > 0.
  void push(double eps2, double sigma2, const std::vector<double>& sens);
};

/// Positivity floor for the conditional variance.
double variance_floor(double gamma2);

/// One step of the variance-targeted recursion:
///   sigma_t^2 = gamma2 + sum_i alpha_i (eps2_{t-i} - gamma2)
///                      + sum_j beta_j  (sigma2_{t-j} - gamma2),
/// floored at variance_floor(gamma2).
double volatility_step(const VolState& state, const GarchParams& theta, double gamma2);

/// Quasi-likelihood loss of one observation; sigma2 must be positive.
double ql_loss(double sigma2, double x, QlConvention conv = QlConvention::paper);

/// d loss / d sigma2 for the chosen convention.
double ql_dloss_dsigma2(double sigma2, double x, QlConvention conv = QlConvention::paper);

struct SigmaAndSens {
  double sigma2 = 0.0;
  std::vector<double> dsigma2_dtheta;  // length p+q: alphas first, then betas
};

/// Variance step together with the recursive sensitivities
///   d sigma_t^2 / d alpha_i = (eps2_{t-i} - gamma2) + sum_j beta_j d sigma2_{t-j} / d alpha_i
///   d sigma_t^2 / d beta_j  = (sigma2_{t-j} - gamma2) + sum_k beta_k d sigma2_{t-k} / d beta_j.
/// gamma2 does not depend on theta, so treating it as a constant is exact.
/// If the positivity floor binds, the sensitivity is the zero vector (the
/// output is pinned).
SigmaAndSens volatility_sensitivity_step(const VolState& state, const GarchParams& theta,
                                         double gamma2);

/// Chain rule: grad = (d loss / d sigma2) * dsigma2_dtheta.
std::vector<double> loss_gradient(double sigma2, const std::vector<double>& dsigma2_dtheta,
                                  double x, QlConvention conv = QlConvention::paper);

/// Fixed-theta evaluation of the summed QL loss and its gradient over a
/// series, using the same skeleton as the online estimator: running
/// mean/variance targeting, sigma_1^2 = eps_1^2 (theta-independent, zero
/// gradient), sigma_t^2 driven by gamma^2_{t-1}.
struct PathEval {
  double loss = 0.0;
  std::vector<double> grad;
  std::vector<double> sigma2;  // sigma_t^2 for t = 1..n
};

PathEval evaluate_ql_path(const std::vector<double>& eps, const GarchOrder& order,
                          const GarchParams& theta, QlConvention conv = QlConvention::paper);

}  // namespace m6cast::garch
