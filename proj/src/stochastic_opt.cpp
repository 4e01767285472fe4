#include "m6cast/stochastic_opt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "m6cast/csv.hpp"
#include "m6cast/projection.hpp"
#include "m6cast/rng.hpp"

namespace m6cast::opt {

using scoring::kQuintiles;
using scoring::QuintileMatrix;
using scoring::Row5;
using scoring::SubmissionMatrix;

OptConfig OptConfig::for_matrix() {
  OptConfig cfg;
  cfg.kind = OptimizerKind::annealing_sgd;
  cfg.base_step = 0.3;
  return cfg;
}

OptConfig OptConfig::for_portfolio() {
  OptConfig cfg;
  cfg.kind = OptimizerKind::adam;
  cfg.base_step = 0.01;
  return cfg;
}

void OptConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("OptConfig: batch_size must be >= 1");
  if (total_iterations < 0) throw std::invalid_argument("OptConfig: negative iteration count");
  if (!(base_step > 0.0)) throw std::invalid_argument("OptConfig: base_step must be positive");
  if (schedule_exponent < 0.0) throw std::invalid_argument("OptConfig: negative schedule exponent");
  if (restarts < 1) throw std::invalid_argument("OptConfig: restarts must be >= 1");
}

std::vector<double> adam_step(AdamState& state, const std::vector<double>& grad, double alpha_k,
                              double beta1, double beta2, double eps) {
  if (grad.size() != state.m.size())
    throw std::invalid_argument("adam_step: gradient dimension mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw std::invalid_argument("adam_step: non-finite gradient");

  state.k += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.k));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.k));
  std::vector<double> delta(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    delta[i] = -alpha_k * mhat / (std::sqrt(vhat) + eps);
  }
  return delta;
}

SubmissionMatrix project_simplex_rows(const std::vector<Row5>& raw) {
  SubmissionMatrix m;
  m.rows.reserve(raw.size());
  std::vector<double> buf(kQuintiles);
  for (const Row5& row : raw) {
    for (int k = 0; k < kQuintiles; ++k) {
      if (!std::isfinite(row[static_cast<std::size_t>(k)]))
        throw std::invalid_argument("project_simplex_rows: non-finite entry");
      buf[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k)];
    }
    const std::vector<double> p = proj::project_simplex(buf, 1.0);
    Row5 out;
    std::copy(p.begin(), p.end(), out.begin());
    m.rows.push_back(out);
  }
  return m;
}

scoring::PortfolioWeights project_portfolio(const std::vector<double>& raw) {
  constexpr double kMinGross = 0.25;
  constexpr double kMaxGross = 1.0;
  scoring::PortfolioWeights x;
  x.w = raw;
  double gross = 0.0;
  for (double v : x.w) {
    if (!std::isfinite(v)) throw std::invalid_argument("project_portfolio: non-finite weight");
    gross += std::abs(v);
  }
  if (gross == 0.0) {
    if (x.w.empty()) throw std::invalid_argument("project_portfolio: empty weight vector");
    x.w.assign(x.w.size(), kMinGross / static_cast<double>(x.w.size()));
    return x;
  }
  double scale = 1.0;
  if (gross > kMaxGross) scale = kMaxGross / gross;
  else if (gross < kMinGross) scale = kMinGross / gross;
  if (scale != 1.0)
    for (double& v : x.w) v *= scale;
  return x;
}

namespace {

// Cumulative-sum statistics of a batch of quintile matrices. The RPS
// gradient in M is affine in Q, so the batch-mean gradient equals the
// gradient against the batch-mean cumulative sums; the Jensen term restores
// the honest batch-mean objective (it does not depend on M).
struct BatchCumStats {
  std::vector<Row5> mean_cum_q;
  double jensen = 0.0;

  void reset(std::size_t n_assets) {
    mean_cum_q.assign(n_assets, Row5{0, 0, 0, 0, 0});
    sum_sq_.assign(n_assets, Row5{0, 0, 0, 0, 0});
    count_ = 0;
  }

  void add(const QuintileMatrix& q) {
    for (std::size_t a = 0; a < q.rows.size(); ++a) {
      double cum = 0.0;
      for (int k = 0; k < kQuintiles; ++k) {
        cum += q.rows[a][static_cast<std::size_t>(k)];
        mean_cum_q[a][static_cast<std::size_t>(k)] += cum;
        sum_sq_[a][static_cast<std::size_t>(k)] += cum * cum;
      }
    }
    ++count_;
  }

  void finalize() {
    const double inv = 1.0 / static_cast<double>(count_);
    double var_total = 0.0;
    for (std::size_t a = 0; a < mean_cum_q.size(); ++a) {
      for (int k = 0; k < kQuintiles; ++k) {
        auto ks = static_cast<std::size_t>(k);
        mean_cum_q[a][ks] *= inv;
        const double var = sum_sq_[a][ks] * inv - mean_cum_q[a][ks] * mean_cum_q[a][ks];
        var_total += std::max(var, 0.0);
      }
    }
    jensen = var_total / (kQuintiles * static_cast<double>(mean_cum_q.size()));
  }

 private:
  std::vector<Row5> sum_sq_;
  long count_ = 0;
};

double batch_objective(const std::vector<Row5>& rows, const BatchCumStats& stats) {
  double acc = 0.0;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    double cum_m = 0.0;
    for (int k = 0; k < kQuintiles; ++k) {
      cum_m += rows[a][static_cast<std::size_t>(k)];
      const double d = cum_m - stats.mean_cum_q[a][static_cast<std::size_t>(k)];
      acc += d * d;
    }
  }
  return acc / (kQuintiles * static_cast<double>(rows.size())) + stats.jensen;
}

// Per-asset RPS gradient (the true gradient times N), flattened row-major.
// Scaling by N keeps step sizes independent of the universe size.
void batch_gradient(const std::vector<Row5>& rows, const BatchCumStats& stats,
                    std::vector<double>& grad) {
  const double scale = 2.0 / kQuintiles;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    double cum_m = 0.0;
    Row5 diffs;
    for (int k = 0; k < kQuintiles; ++k) {
      cum_m += rows[a][static_cast<std::size_t>(k)];
      diffs[static_cast<std::size_t>(k)] = cum_m - stats.mean_cum_q[a][static_cast<std::size_t>(k)];
    }
    double tail = 0.0;
    for (int i = kQuintiles - 1; i >= 0; --i) {
      tail += diffs[static_cast<std::size_t>(i)];
      grad[a * kQuintiles + static_cast<std::size_t>(i)] = scale * tail;
    }
  }
}

class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path) {
    if (path.empty()) return;
    out_.open(path);
    if (!out_) throw std::runtime_error("cannot open trace file: " + path);
    out_ << "iteration,objective,step_norm\n";
  }

  void row(int iteration, double objective, double step_norm) {
    if (!out_.is_open()) return;
    out_ << iteration << ',' << csv::format_double(objective) << ','
         << csv::format_double(step_norm) << '\n';
  }

 private:
  std::ofstream out_;
};

template <typename BatchFn>
SubmissionMatrix run_rps_descent(std::size_t n_assets, const OptConfig& config,
                                 const SubmissionMatrix& m_init, BatchFn&& next_batch) {
  config.validate();
  m_init.validate();
  if (m_init.size() != n_assets)
    throw std::invalid_argument("minimize_expected_rps: M_init shape mismatch");
  if (config.total_iterations == 0) return m_init;

  TraceWriter trace(config.trace_path);
  SubmissionMatrix m = m_init;
  AdamState adam(n_assets * kQuintiles);
  std::vector<double> grad(n_assets * kQuintiles, 0.0);
  std::vector<Row5> raw(n_assets);

  for (int k = 1; k <= config.total_iterations; ++k) {
    const BatchCumStats& stats = next_batch(k);
    batch_gradient(m.rows, stats, grad);
    const double alpha_k = config.base_step / std::pow(static_cast<double>(k), config.schedule_exponent);

    double step_sq = 0.0;
    if (config.kind == OptimizerKind::adam) {
      const std::vector<double> delta =
          adam_step(adam, grad, alpha_k, config.beta1, config.beta2, config.eps);
      for (std::size_t i = 0; i < delta.size(); ++i) {
        raw[i / kQuintiles][i % kQuintiles] = m.rows[i / kQuintiles][i % kQuintiles] + delta[i];
        step_sq += delta[i] * delta[i];
      }
    } else {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        const double d = -alpha_k * grad[i];
        raw[i / kQuintiles][i % kQuintiles] = m.rows[i / kQuintiles][i % kQuintiles] + d;
        step_sq += d * d;
      }
    }
    m = project_simplex_rows(raw);
    trace.row(k, batch_objective(m.rows, stats), std::sqrt(step_sq));
  }
  return m;
}

}  // namespace

SubmissionMatrix minimize_expected_rps(const forecast::JointForecast& forecast,
                                       const OptConfig& config, const SubmissionMatrix& m_init) {
  const forecast::HorizonSampler sampler(forecast);
  const auto n_assets = static_cast<std::size_t>(sampler.n_assets());

  BatchCumStats stats;
  std::vector<double> totals(n_assets);
  auto next_batch = [&](int k) -> const BatchCumStats& {
    stats.reset(n_assets);
    for (int j = 0; j < config.batch_size; ++j) {
      const auto index = static_cast<std::uint32_t>((k - 1) * config.batch_size + j);
      const forecast::ReturnSample sample = sampler.draw(config.seed, index);
      for (std::size_t a = 0; a < n_assets; ++a) {
        double total = 0.0;
        for (int d = 0; d < sample.horizon; ++d) total += sample.at(d, static_cast<int>(a));
        totals[a] = total;
      }
      stats.add(scoring::quintiles_from_returns(totals));
    }
    stats.finalize();
    return stats;
  };
  return run_rps_descent(n_assets, config, m_init, next_batch);
}

SubmissionMatrix minimize_expected_rps(const std::vector<QuintileMatrix>& frozen,
                                       const OptConfig& config, const SubmissionMatrix& m_init) {
  if (frozen.empty()) throw std::invalid_argument("minimize_expected_rps: empty frozen sample set");
  const std::size_t n_assets = frozen.front().size();

  // The whole frozen set is the batch at every iteration.
  BatchCumStats stats;
  stats.reset(n_assets);
  for (const QuintileMatrix& q : frozen) {
    if (q.size() != n_assets)
      throw std::invalid_argument("minimize_expected_rps: inconsistent sample shapes");
    stats.add(q);
  }
  stats.finalize();
  auto next_batch = [&](int) -> const BatchCumStats& { return stats; };
  return run_rps_descent(n_assets, config, m_init, next_batch);
}

namespace {

// IR of one sampled horizon, with analytic gradient in the weights.
// Returns false when the sample is degenerate: zero dispersion, or a day on
// which the candidate portfolio loses its full capital.
struct SampleIr {
  double ir = 0.0;
  std::vector<double> grad;  // filled only when grad_wanted
};

bool eval_sample_ir(const std::vector<double>& x, const forecast::ReturnSample& sample,
                    bool grad_wanted, SampleIr& out) {
  const int t_days = sample.horizon;
  const int n = sample.n_assets;
  if (static_cast<int>(x.size()) != n)
    throw std::invalid_argument("portfolio objective: weight dimension mismatch");
  if (t_days < 2) throw std::invalid_argument("portfolio objective: horizon must be >= 2 days");

  std::vector<double> ret(static_cast<std::size_t>(t_days));
  std::vector<double> one_plus(static_cast<std::size_t>(t_days));
  double sum = 0.0;
  double scale = 0.0;
  for (int t = 0; t < t_days; ++t) {
    double s = 0.0;
    for (int a = 0; a < n; ++a) s += x[static_cast<std::size_t>(a)] * std::expm1(sample.at(t, a));
    if (!(1.0 + s > 0.0)) return false;  // wiped out
    one_plus[static_cast<std::size_t>(t)] = 1.0 + s;
    ret[static_cast<std::size_t>(t)] = std::log1p(s);
    sum += ret[static_cast<std::size_t>(t)];
    scale = std::max(scale, std::abs(ret[static_cast<std::size_t>(t)]));
  }
  const double mean = sum / t_days;
  double ss = 0.0;
  for (double r : ret) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / (t_days - 1));
  if (sd <= 1e-12 * std::max(scale, 1e-300)) return false;  // zero dispersion

  out.ir = sum / sd;
  if (grad_wanted) {
    out.grad.assign(static_cast<std::size_t>(n), 0.0);
    for (int t = 0; t < t_days; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      const double dir_dret = 1.0 / sd - sum * (ret[ts] - mean) / ((t_days - 1) * sd * sd * sd);
      const double w = dir_dret / one_plus[ts];
      for (int a = 0; a < n; ++a)
        out.grad[static_cast<std::size_t>(a)] += w * std::expm1(sample.at(t, a));
    }
  }
  return true;
}

// Mean IR over a pre-drawn evaluation set; wiped-out draws count as a large
// loss so reckless candidates cannot win the gate by shedding bad samples.
double holdout_expected_ir(const std::vector<double>& x,
                           const std::vector<forecast::ReturnSample>& samples) {
  double acc = 0.0;
  long used = 0;
  SampleIr s;
  for (const forecast::ReturnSample& sample : samples) {
    if (eval_sample_ir(x, sample, false, s)) {
      acc += s.ir;
      ++used;
    } else {
      bool wiped = false;
      for (int t = 0; t < sample.horizon && !wiped; ++t) {
        double v = 0.0;
        for (int a = 0; a < sample.n_assets; ++a)
          v += x[static_cast<std::size_t>(a)] * std::expm1(sample.at(t, a));
        wiped = !(1.0 + v > 0.0);
      }
      if (wiped) {
        acc += -1e6;
        ++used;
      }
      // zero-dispersion draws carry no ranking information; skip
    }
  }
  return used > 0 ? acc / static_cast<double>(used) : -1e6;
}

}  // namespace

std::optional<double> sample_information_ratio(const std::vector<double>& x,
                                               const forecast::ReturnSample& sample) {
  SampleIr s;
  if (!eval_sample_ir(x, sample, false, s)) return std::nullopt;
  return s.ir;
}

std::optional<std::pair<double, std::vector<double>>> sample_ir_with_gradient(
    const std::vector<double>& x, const forecast::ReturnSample& sample) {
  SampleIr s;
  if (!eval_sample_ir(x, sample, true, s)) return std::nullopt;
  return std::make_pair(s.ir, std::move(s.grad));
}

std::optional<std::vector<double>> finite_difference_ir_gradient(
    const std::vector<double>& x, const forecast::ReturnSample& sample, double h) {
  std::vector<double> grad(x.size());
  std::vector<double> probe = x;
  SampleIr plus, minus;
  for (std::size_t a = 0; a < x.size(); ++a) {
    probe[a] = x[a] + h;
    const bool ok_p = eval_sample_ir(probe, sample, false, plus);
    probe[a] = x[a] - h;
    const bool ok_m = eval_sample_ir(probe, sample, false, minus);
    probe[a] = x[a];
    if (!ok_p || !ok_m) return std::nullopt;
    grad[a] = (plus.ir - minus.ir) / (2.0 * h);
  }
  return grad;
}

PortfolioResult optimize_portfolio(const forecast::JointForecast& forecast, const OptConfig& config,
                                   const scoring::PortfolioWeights& x_init) {
  config.validate();
  const forecast::HorizonSampler sampler(forecast);
  const auto n = static_cast<std::size_t>(sampler.n_assets());
  if (x_init.w.size() != n)
    throw std::invalid_argument("optimize_portfolio: x_init dimension mismatch");

  constexpr int kHoldoutSamples = 10000;
  const std::uint64_t holdout_seed = rng::derive_seed(config.seed, 0x484F4C44u);
  std::vector<forecast::ReturnSample> holdout;
  holdout.reserve(kHoldoutSamples);
  for (int s = 0; s < kHoldoutSamples; ++s)
    holdout.push_back(sampler.draw(holdout_seed, static_cast<std::uint32_t>(s)));

  PortfolioResult result;
  const scoring::PortfolioWeights uniform = project_portfolio(std::vector<double>(n, 0.0));
  result.uniform_expected_ir = holdout_expected_ir(uniform.w, holdout);

  TraceWriter trace(config.trace_path);
  scoring::PortfolioWeights best;
  double best_ir = 0.0;
  bool have_best = false;

  for (int restart = 0; restart < config.restarts; ++restart) {
    std::vector<double> x = x_init.w;
    if (restart > 0) {
      for (std::size_t a = 0; a < n; ++a)
        x[a] += 0.25 / static_cast<double>(n) *
                rng::normal_at(config.seed, rng::Stream::perturbation,
                               static_cast<std::uint32_t>(restart), 0,
                               static_cast<std::uint32_t>(a));
    }
    x = project_portfolio(x).w;

    if (config.total_iterations > 0) {
      const std::uint64_t batch_seed =
          rng::derive_seed(config.seed, 0x42415443u + static_cast<std::uint64_t>(restart));
      AdamState adam(n);
      std::vector<double> grad(n), raw(n);
      SampleIr s;
      for (int k = 1; k <= config.total_iterations; ++k) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double obj = 0.0;
        long used = 0;
        for (int j = 0; j < config.batch_size; ++j) {
          const auto index = static_cast<std::uint32_t>((k - 1) * config.batch_size + j);
          const forecast::ReturnSample sample = sampler.draw(batch_seed, index);
          if (!eval_sample_ir(x, sample, true, s)) {
            ++result.degenerate_samples;
            continue;
          }
          obj += -s.ir;
          for (std::size_t a = 0; a < n; ++a) grad[a] += -s.grad[a];
          ++used;
        }
        if (used == 0) continue;
        const double inv = 1.0 / static_cast<double>(used);
        for (double& g : grad) g *= inv;
        obj *= inv;

        const double alpha_k =
            config.base_step / std::pow(static_cast<double>(k), config.schedule_exponent);
        double step_sq = 0.0;
        if (config.kind == OptimizerKind::adam) {
          const std::vector<double> delta =
              adam_step(adam, grad, alpha_k, config.beta1, config.beta2, config.eps);
          for (std::size_t a = 0; a < n; ++a) {
            raw[a] = x[a] + delta[a];
            step_sq += delta[a] * delta[a];
          }
        } else {
          for (std::size_t a = 0; a < n; ++a) {
            const double d = -alpha_k * grad[a];
            raw[a] = x[a] + d;
            step_sq += d * d;
          }
        }
        x = project_portfolio(raw).w;
        trace.row(k, obj, std::sqrt(step_sq));
      }
    }

    const double candidate_ir = holdout_expected_ir(x, holdout);
    if (!have_best || candidate_ir > best_ir) {
      best.w = x;
      best_ir = candidate_ir;
      have_best = true;
    }
  }

  // Sanity gate: never return weights expected to do worse than the naive
  // uniform allocation.
  if (!have_best || best_ir < result.uniform_expected_ir) {
    result.weights = uniform;
    result.expected_ir = result.uniform_expected_ir;
    result.fell_back_to_uniform = true;
  } else {
    result.weights = best;
    result.expected_ir = best_ir;
  }
  return result;
}

}  // namespace m6cast::opt
