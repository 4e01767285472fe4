#include "m6cast/forecast.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "m6cast/rng.hpp"

namespace m6cast::forecast {

void JointForecast::validate() const {
  if (assets.empty() || assets.size() != marginals.size())
    throw std::invalid_argument("JointForecast: assets/marginals mismatch");
  if (horizon_days <= 0) throw std::invalid_argument("JointForecast: horizon must be positive");
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    if (const auto* g = std::get_if<GaussianMarginal>(&marginals[i])) {
      if (!(g->std > 0.0) || !std::isfinite(g->std) || !std::isfinite(g->mean))
        throw std::invalid_argument("JointForecast: Gaussian marginal needs finite mean, std > 0");
    } else {
      const auto& e = std::get<EmpiricalMarginal>(marginals[i]);
      if (e.samples.empty())
        throw std::invalid_argument("JointForecast: empirical marginal with no samples");
    }
  }
  if (correlation) {
    const auto& r = *correlation;
    const auto n = static_cast<Eigen::Index>(assets.size());
    if (r.rows() != n || r.cols() != n)
      throw std::invalid_argument("JointForecast: correlation shape mismatch");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(r(i, i) - 1.0) > 1e-12)
        throw std::invalid_argument("JointForecast: correlation diagonal must be 1");
      for (Eigen::Index j = 0; j < n; ++j) {
        if (std::abs(r(i, j) - r(j, i)) > 1e-12 || std::abs(r(i, j)) > 1.0 + 1e-12)
          throw std::invalid_argument("JointForecast: correlation not symmetric in [-1,1]");
      }
    }
  }
}

JointForecast build_marginals(const returns::ReturnPanel& history,
                              const std::map<int, adavol::AdaVolState>& states,
                              const returns::ClassMeans& means,
                              const std::set<int>& empirical_assets,
                              const returns::DateRange& empirical_window, int horizon_days) {
  JointForecast fc;
  fc.assets = history.assets;
  fc.horizon_days = horizon_days;
  fc.marginals.reserve(fc.assets.size());

  for (std::size_t col = 0; col < fc.assets.size(); ++col) {
    const int asset = fc.assets[col];
    if (empirical_assets.count(asset) != 0) {
      EmpiricalMarginal emp;
      for (std::size_t t = 0; t < history.dates.size(); ++t) {
        if (!empirical_window.contains(history.dates[t])) continue;
        const double r = history.ret(t, col);
        if (!returns::is_missing(r)) emp.samples.push_back(r);
      }
      if (emp.samples.empty())
        throw std::invalid_argument("build_marginals: no history in empirical window for asset " +
                                    std::to_string(asset));
      fc.marginals.emplace_back(std::move(emp));
      continue;
    }
    auto it = states.find(asset);
    if (it == states.end())
      throw std::invalid_argument("build_marginals: no estimator state for asset " +
                                  std::to_string(asset));
    const auto mu = means.mean_for(asset);
    if (!mu)
      throw std::invalid_argument("build_marginals: no class mean for asset " +
                                  std::to_string(asset));
    if (it->second.t < 1 || !(it->second.sigma2_next > 0.0))
      throw std::invalid_argument("build_marginals: estimator for asset " + std::to_string(asset) +
                                  " has no volatility forecast yet");
    fc.marginals.emplace_back(GaussianMarginal{*mu, std::sqrt(it->second.sigma2_next)});
  }
  fc.validate();
  return fc;
}

Eigen::MatrixXd estimate_correlations(const returns::ReturnPanel& panel,
                                      const returns::DateRange& window, int min_overlap) {
  const auto n = static_cast<Eigen::Index>(panel.assets.size());
  if (n == 0) throw std::invalid_argument("estimate_correlations: empty panel");

  // Collect the window rows once; pairwise-complete moments per asset pair.
  std::vector<std::size_t> rows;
  for (std::size_t t = 0; t < panel.dates.size(); ++t)
    if (window.contains(panel.dates[t])) rows.push_back(t);
  if (rows.empty()) throw std::invalid_argument("estimate_correlations: empty window");

  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      long m = 0;
      for (std::size_t t : rows) {
        const double x = panel.ret(t, static_cast<std::size_t>(i));
        const double y = panel.ret(t, static_cast<std::size_t>(j));
        if (returns::is_missing(x) || returns::is_missing(y)) continue;
        sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
        ++m;
      }
      double r = 0.0;
      if (m >= std::max(min_overlap, 2)) {
        const double md = static_cast<double>(m);
        const double cov = sxy / md - (sx / md) * (sy / md);
        const double vx = sxx / md - (sx / md) * (sx / md);
        const double vy = syy / md - (sy / md) * (sy / md);
        if (vx > 0.0 && vy > 0.0) {
          r = cov / std::sqrt(vx * vy);
          r = std::clamp(r, -1.0, 1.0);
        }
      }
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }

  // PSD repair: clip negative eigenvalues, then rescale to a unit diagonal.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("estimate_correlations: eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() < 0.0) {
    Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    corr = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    Eigen::VectorXd d = corr.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    corr = d.asDiagonal() * corr * d.asDiagonal();
    corr = (corr + corr.transpose()) / 2.0;
    corr.diagonal().setOnes();
  }
  return corr;
}

HorizonSampler::HorizonSampler(const JointForecast& forecast) : forecast_(&forecast) {
  forecast.validate();
  const auto n = static_cast<int>(forecast.assets.size());
  for (int col = 0; col < n; ++col) {
    if (std::holds_alternative<GaussianMarginal>(forecast.marginals[static_cast<std::size_t>(col)])) {
      gaussian_cols_.push_back(col);
      const auto& g = std::get<GaussianMarginal>(forecast.marginals[static_cast<std::size_t>(col)]);
      gauss_mean_.push_back(g.mean);
    }
  }
  if (!forecast.correlation || gaussian_cols_.empty()) return;

  // Covariance of the Gaussian block: sigma_i sigma_j r_ij. Cholesky when
  // positive definite (keeps the identity-correlation case exactly
  // diagonal); eigenvalue square root otherwise.
  const auto g = static_cast<Eigen::Index>(gaussian_cols_.size());
  Eigen::MatrixXd cov(g, g);
  for (Eigen::Index a = 0; a < g; ++a) {
    const auto& ga = std::get<GaussianMarginal>(
        forecast.marginals[static_cast<std::size_t>(gaussian_cols_[static_cast<std::size_t>(a)])]);
    for (Eigen::Index b = 0; b < g; ++b) {
      const auto& gb = std::get<GaussianMarginal>(
          forecast.marginals[static_cast<std::size_t>(gaussian_cols_[static_cast<std::size_t>(b)])]);
      cov(a, b) = ga.std * gb.std *
                  (*forecast.correlation)(gaussian_cols_[static_cast<std::size_t>(a)],
                                          gaussian_cols_[static_cast<std::size_t>(b)]);
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
      throw std::runtime_error("HorizonSampler: covariance factorization failed");
    factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
}

ReturnSample HorizonSampler::draw(std::uint64_t seed, std::uint32_t sample_index) const {
  const JointForecast& fc = *forecast_;
  const int n = static_cast<int>(fc.assets.size());
  ReturnSample sample;
  sample.horizon = fc.horizon_days;
  sample.n_assets = n;
  sample.data.assign(static_cast<std::size_t>(fc.horizon_days) * n, 0.0);

  const bool correlated = factor_.size() > 0;
  Eigen::VectorXd z(static_cast<Eigen::Index>(gaussian_cols_.size()));
  for (int day = 0; day < fc.horizon_days; ++day) {
    double* row = sample.data.data() + static_cast<std::size_t>(day) * n;
    for (std::size_t gi = 0; gi < gaussian_cols_.size(); ++gi) {
      z[static_cast<Eigen::Index>(gi)] =
          rng::normal_at(seed, rng::Stream::gaussian, sample_index,
                         static_cast<std::uint32_t>(day),
                         static_cast<std::uint32_t>(gaussian_cols_[gi]));
    }
    if (correlated) {
      const Eigen::VectorXd coupled = factor_ * z;
      for (std::size_t gi = 0; gi < gaussian_cols_.size(); ++gi)
        row[gaussian_cols_[gi]] = gauss_mean_[gi] + coupled[static_cast<Eigen::Index>(gi)];
    } else {
      for (std::size_t gi = 0; gi < gaussian_cols_.size(); ++gi) {
        const auto& g =
            std::get<GaussianMarginal>(fc.marginals[static_cast<std::size_t>(gaussian_cols_[gi])]);
        row[gaussian_cols_[gi]] = g.mean + g.std * z[static_cast<Eigen::Index>(gi)];
      }
    }
    for (int col = 0; col < n; ++col) {
      const auto* e = std::get_if<EmpiricalMarginal>(&fc.marginals[static_cast<std::size_t>(col)]);
      if (!e) continue;
      const auto idx = rng::uniform_index_at(seed, rng::Stream::empirical, sample_index,
                                             static_cast<std::uint32_t>(day),
                                             static_cast<std::uint32_t>(col),
                                             static_cast<std::uint32_t>(e->samples.size()));
      row[col] = e->samples[idx];
    }
  }
  return sample;
}

std::vector<ReturnSample> sample_horizon_returns(const JointForecast& forecast, int n_samples,
                                                 std::uint64_t seed) {
  if (n_samples <= 0) throw std::invalid_argument("sample_horizon_returns: n_samples must be >= 1");
  HorizonSampler sampler(forecast);
  std::vector<ReturnSample> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s)
    out.push_back(sampler.draw(seed, static_cast<std::uint32_t>(s)));
  return out;
}

std::string to_json(const JointForecast& forecast) {
  forecast.validate();
  nlohmann::json j;
  j["version"] = 1;
  j["horizon_days"] = forecast.horizon_days;
  j["assets"] = forecast.assets;
  nlohmann::json marginals = nlohmann::json::array();
  for (const Marginal& m : forecast.marginals) {
    if (const auto* g = std::get_if<GaussianMarginal>(&m)) {
      marginals.push_back({{"type", "gaussian"}, {"mean", g->mean}, {"std", g->std}});
    } else {
      const auto& e = std::get<EmpiricalMarginal>(m);
      marginals.push_back({{"type", "empirical"}, {"samples", e.samples}});
    }
  }
  j["marginals"] = std::move(marginals);
  if (forecast.correlation) {
    const auto& r = *forecast.correlation;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(r.cols()));
      for (Eigen::Index k = 0; k < r.cols(); ++k) row[static_cast<std::size_t>(k)] = r(i, k);
      rows.push_back(row);
    }
    j["correlation"] = std::move(rows);
  }
  return j.dump(2);
}

JointForecast forecast_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("forecast snapshot: unsupported version");
  JointForecast fc;
  fc.horizon_days = j.at("horizon_days").get<int>();
  fc.assets = j.at("assets").get<std::vector<int>>();
  for (const auto& m : j.at("marginals")) {
    if (m.at("type") == "gaussian") {
      fc.marginals.emplace_back(
          GaussianMarginal{m.at("mean").get<double>(), m.at("std").get<double>()});
    } else {
      fc.marginals.emplace_back(EmpiricalMarginal{m.at("samples").get<std::vector<double>>()});
    }
  }
  if (j.contains("correlation")) {
    const auto rows = j.at("correlation").get<std::vector<std::vector<double>>>();
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd r(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k)
        r(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    fc.correlation = std::move(r);
  }
  fc.validate();
  return fc;
}

}  // namespace m6cast::forecast
