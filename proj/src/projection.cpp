#include "m6cast/projection.hpp"

#include <algorithm>
#include <stdexcept>

namespace m6cast::proj {

namespace {

// Threshold tau such that sum_i max(y_i - tau, 0) == total, for y sorted
// descending with sum(y) >= total.
double simplex_threshold(std::vector<double> y, double total) {
  std::sort(y.begin(), y.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = y.front() - total;  // j = 0 always satisfies y[0] - candidate = total > 0
  for (std::size_t j = 0; j < y.size(); ++j) {
    cumsum += y[j];
    const double candidate = (cumsum - total) / static_cast<double>(j + 1);
    if (y[j] - candidate > 0.0) tau = candidate;
  }
  return tau;
}

}  // namespace

std::vector<double> project_nonneg_capped_sum(std::vector<double> x, double cap) {
  if (cap <= 0.0) throw std::invalid_argument("project_nonneg_capped_sum: cap must be positive");
  double sum = 0.0;
  for (double& v : x) {
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (sum <= cap) return x;
  // Aim a hair below the cap so that any downstream floating-point summation
  // of the result still lands at or under it.
  const double target = cap * (1.0 - static_cast<double>(x.size() + 4) * 1e-16);
  const double tau = simplex_threshold(x, target);
  for (double& v : x) v = std::max(v - tau, 0.0);
  return x;
}

std::vector<double> project_simplex(std::vector<double> x, double total) {
  if (total <= 0.0) throw std::invalid_argument("project_simplex: total must be positive");
  if (x.empty()) throw std::invalid_argument("project_simplex: empty input");
  const double tau = simplex_threshold(x, total);
  for (double& v : x) v = std::max(v - tau, 0.0);
  return x;
}

}  // namespace m6cast::proj
