// Independent test oracles. Everything here recomputes expectations from
// first principles (active-set enumeration, finite differences, brute-force
// resampling) and must stay decoupled from the implementation paths it
// checks.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "m6cast/garch.hpp"

namespace oracles {

// Exact Euclidean projection onto {y >= 0, sum(y) <= cap} by KKT active-set
// enumeration (2^d subsets; d <= ~16).
inline std::vector<double> kkt_project_capped(const std::vector<double>& x, double cap) {
  const std::size_t d = x.size();
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();

  auto consider = [&](const std::vector<double>& y) {
    double dist = 0.0;
    for (std::size_t i = 0; i < d; ++i) dist += (y[i] - x[i]) * (y[i] - x[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = y;
    }
  };

  // Sum constraint inactive: y = max(x, 0) when feasible.
  {
    std::vector<double> y(d);
    double sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      y[i] = std::max(x[i], 0.0);
      sum += y[i];
    }
    if (sum <= cap + 1e-15) consider(y);
  }
  // Sum constraint active: positive support S, y_i = x_i - tau on S.
  for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
    double s = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < d; ++i)
      if (mask & (1u << i)) {
        s += x[i];
        ++cnt;
      }
    const double tau = (s - cap) / cnt;
    if (tau < -1e-15) continue;  // multiplier must be nonnegative
    bool ok = true;
    std::vector<double> y(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      if (mask & (1u << i)) {
        y[i] = x[i] - tau;
        if (y[i] < -1e-12) ok = false;
      } else if (x[i] - tau > 1e-12) {
        ok = false;  // excluded coordinate would want back in
      }
    }
    if (ok) consider(y);
  }
  return best;
}

// Exact Euclidean projection onto {y >= 0, sum(y) = total}.
inline std::vector<double> kkt_project_simplex(const std::vector<double>& x, double total) {
  const std::size_t d = x.size();
  std::vector<double> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
    double s = 0.0;
    int cnt = 0;
    for (std::size_t i = 0; i < d; ++i)
      if (mask & (1u << i)) {
        s += x[i];
        ++cnt;
      }
    const double tau = (s - total) / cnt;
    bool ok = true;
    std::vector<double> y(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      if (mask & (1u << i)) {
        y[i] = x[i] - tau;
        if (y[i] < -1e-12) ok = false;
      } else if (x[i] - tau > 1e-12) {
        ok = false;
      }
    }
    if (!ok) continue;
    double dist = 0.0;
    for (std::size_t i = 0; i < d; ++i) dist += (y[i] - x[i]) * (y[i] - x[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = y;
    }
  }
  return best;
}

// Central finite differences of the fixed-theta summed QL loss.
inline std::vector<double> fd_ql_gradient(const std::vector<double>& eps,
                                          const m6cast::garch::GarchOrder& order,
                                          const m6cast::garch::GarchParams& theta,
                                          m6cast::garch::QlConvention conv, double h = 1e-6) {
  using m6cast::garch::evaluate_ql_path;
  using m6cast::garch::GarchParams;
  const std::vector<double> flat = theta.flat();
  std::vector<double> grad(flat.size());
  for (std::size_t k = 0; k < flat.size(); ++k) {
    std::vector<double> up = flat, dn = flat;
    up[k] += h;
    dn[k] -= h;
    const double lu = evaluate_ql_path(eps, order, GarchParams::from_flat(up, order), conv).loss;
    const double ld = evaluate_ql_path(eps, order, GarchParams::from_flat(dn, order), conv).loss;
    grad[k] = (lu - ld) / (2.0 * h);
  }
  return grad;
}

// Central finite differences of sigma_t^2(theta) recomputed over the full
// history; returns the sensitivity of the final sigma2 in the path.
inline std::vector<double> fd_sigma2_sensitivity(const std::vector<double>& eps,
                                                 const m6cast::garch::GarchOrder& order,
                                                 const m6cast::garch::GarchParams& theta,
                                                 double h = 1e-7) {
  using m6cast::garch::evaluate_ql_path;
  using m6cast::garch::GarchParams;
  const std::vector<double> flat = theta.flat();
  std::vector<double> sens(flat.size());
  for (std::size_t k = 0; k < flat.size(); ++k) {
    std::vector<double> up = flat, dn = flat;
    up[k] += h;
    dn[k] -= h;
    const auto pu = evaluate_ql_path(eps, order, GarchParams::from_flat(up, order),
                                     m6cast::garch::QlConvention::paper);
    const auto pd = evaluate_ql_path(eps, order, GarchParams::from_flat(dn, order),
                                     m6cast::garch::QlConvention::paper);
    sens[k] = (pu.sigma2.back() - pd.sigma2.back()) / (2.0 * h);
  }
  return sens;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracles
