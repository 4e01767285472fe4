#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace m6cast::scoring {

constexpr int kQuintiles = 5;

using Row5 = std::array<double, kQuintiles>;

/// Realized quintile membership, one row per asset; fractional under ties.
/// Rows sum to 1; column sums equal N/5 whenever N is divisible by 5.
struct QuintileMatrix {
  std::vector<Row5> rows;

  [[nodiscard]] std::size_t size() const { return rows.size(); }
  void validate() const;  // throws std::invalid_argument
};

/// Forecast probabilities, one simplex row per asset.
struct SubmissionMatrix {
  std::vector<Row5> rows;

  [[nodiscard]] std::size_t size() const { return rows.size(); }
  void validate(double tol = 1e-6) const;
};

/// Signed capital fractions per asset; feasible when 0.25 <= sum|x| <= 1.
struct PortfolioWeights {
  std::vector<double> w;

  [[nodiscard]] double gross() const;
};

SubmissionMatrix uniform_submission(std::size_t n_assets);

/// Quintile assignment from 4-week returns: rank descending, quintile 1 is
/// the best performers; assets tied across a rank block share that block's
/// quintile mass equally.
QuintileMatrix quintiles_from_returns(const std::vector<double>& horizon_returns);

/// Ranked probability score:
///   (1/N) sum_a (1/5) sum_k (cum_k(M_a) - cum_k(Q_a))^2,
/// which is 0.16 for the uniform submission against balanced tie-free
/// quintiles and at most 0.8.
double rps(const SubmissionMatrix& m, const QuintileMatrix& q);

/// Exact gradient of rps() with respect to M (the score is quadratic in M).
std::vector<Row5> rps_gradient(const SubmissionMatrix& m, const QuintileMatrix& q);

/// Element-wise mean of the history, the constant matrix minimising the
/// summed RPS over it.
SubmissionMatrix best_constant(const std::vector<QuintileMatrix>& history);

/// Information ratio over a window of daily simple returns (rows = days):
/// sum of daily portfolio log-returns divided by their (T-1) standard
/// deviation. nullopt when the deviation is zero (degenerate window); throws
/// if the portfolio loses 100% or more on some day.
std::optional<double> information_ratio(const PortfolioWeights& x,
                                        const std::vector<std::vector<double>>& daily_simple_returns);

/// `asset_id,q1..q5` CSV round trip, full double precision.
void write_matrix_csv(const std::vector<int>& assets, const std::vector<Row5>& rows,
                      const std::string& path);
std::pair<std::vector<int>, std::vector<Row5>> read_matrix_csv(const std::string& path);

}  // namespace m6cast::scoring
