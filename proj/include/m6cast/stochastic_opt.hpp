#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "m6cast/forecast.hpp"
#include "m6cast/scoring.hpp"

namespace m6cast::opt {

enum class OptimizerKind { adam, annealing_sgd };

/// Shared knobs for both stochastic minimizations. The step at iteration k
/// (1-based) is base_step / k^schedule_exponent.
struct OptConfig {
  int batch_size = 100;
  int total_iterations = 2000;
  double base_step = 0.05;
  double schedule_exponent = 0.5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  OptimizerKind kind = OptimizerKind::annealing_sgd;
  int restarts = 1;
  std::string trace_path;  // CSV trace of (iteration, objective, step_norm) when non-empty

  /// Forecast-matrix defaults: annealing SGD with per-asset steps.
  static OptConfig for_matrix();
  /// Portfolio defaults: adaptive-moment updates, smaller base step.
  static OptConfig for_portfolio();

  void validate() const;
};

/// Bias-corrected adaptive-moment state over a flat parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long k = 0;

  explicit AdamState(std::size_t dim = 0) : m(dim, 0.0), v(dim, 0.0) {}
};

/// One update: advances k, returns delta = -alpha_k * mhat / (sqrt(vhat) + eps).
std::vector<double> adam_step(AdamState& state, const std::vector<double>& grad, double alpha_k,
                              double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

/// Row-wise Euclidean projection onto the probability simplex.
scoring::SubmissionMatrix project_simplex_rows(const std::vector<scoring::Row5>& raw);

/// Feasibility band on gross exposure: shrink onto sum|x| = 1 from above,
/// grow onto sum|x| = 0.25 from below, uniform long fallback at x = 0.
scoring::PortfolioWeights project_portfolio(const std::vector<double>& raw);

/// Minimize the Monte-Carlo expected RPS over submission matrices: each
/// iteration draws a fresh mini-batch from the forecast, takes the exact
/// per-sample RPS gradient in M, steps and re-projects the rows.
scoring::SubmissionMatrix minimize_expected_rps(const forecast::JointForecast& forecast,
                                                const OptConfig& config,
                                                const scoring::SubmissionMatrix& m_init);

/// Same optimizer over a frozen sample set (the full set is the batch every
/// iteration). The fixed-sample minimizer is the element-wise mean of the
/// quintile matrices, which anchors the correctness tests.
scoring::SubmissionMatrix minimize_expected_rps(const std::vector<scoring::QuintileMatrix>& frozen,
                                                const OptConfig& config,
                                                const scoring::SubmissionMatrix& m_init);

/// IR of one sampled horizon under weights x; nullopt when the draw is
/// degenerate (zero dispersion or a full-capital-loss day).
std::optional<double> sample_information_ratio(const std::vector<double>& x,
                                               const forecast::ReturnSample& sample);

/// Analytic gradient of sample_information_ratio in x.
std::optional<std::pair<double, std::vector<double>>> sample_ir_with_gradient(
    const std::vector<double>& x, const forecast::ReturnSample& sample);

/// Central finite-difference fallback for the IR gradient, h = 1e-6.
std::optional<std::vector<double>> finite_difference_ir_gradient(
    const std::vector<double>& x, const forecast::ReturnSample& sample, double h = 1e-6);

struct PortfolioResult {
  scoring::PortfolioWeights weights;
  double expected_ir = 0.0;          // held-out Monte-Carlo estimate of the returned weights
  double uniform_expected_ir = 0.0;  // same estimate for the uniform portfolio
  long degenerate_samples = 0;       // zero-dispersion or wiped-out draws skipped in batches
  bool fell_back_to_uniform = false;
};

/// Maximize the Monte-Carlo expected information ratio over portfolio
/// weights, projecting every iterate onto the exposure band. The returned
/// weights are whichever of {optimized candidate(s), uniform portfolio}
/// scores the better expected IR on a held-out 10^4-sample set.
PortfolioResult optimize_portfolio(const forecast::JointForecast& forecast, const OptConfig& config,
                                   const scoring::PortfolioWeights& x_init);

}  // namespace m6cast::opt
