#include "m6cast/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "m6cast/csv.hpp"
#include "m6cast/dates.hpp"
#include "m6cast/forecast.hpp"
#include "m6cast/rng.hpp"

namespace m6cast::backtest {

namespace {

bool known_method(const std::string& m) {
  return std::find(kAllMethods.begin(), kAllMethods.end(), m) != kAllMethods.end();
}

}  // namespace

void BacktestConfig::validate() const {
  if (prices_csv.empty()) throw std::invalid_argument("backtest config: prices path missing");
  if (horizon_days < 2) throw std::invalid_argument("backtest config: horizon must be >= 2 days");
  if (methods.empty()) throw std::invalid_argument("backtest config: no methods selected");
  for (const std::string& m : methods)
    if (!known_method(m)) throw std::invalid_argument("backtest config: unknown method '" + m + "'");
  if (training.first > training.last || evaluation.first > evaluation.last)
    throw std::invalid_argument("backtest config: empty date range");
  if (evaluation.first <= training.last)
    throw std::invalid_argument("backtest config: evaluation must start after the training window");
  if (!order.valid()) throw std::invalid_argument("backtest config: invalid GARCH order");
  if (correlation_window_days < 2 || min_overlap < 2)
    throw std::invalid_argument("backtest config: correlation window/overlap too small");
  matrix_opt.validate();
  portfolio_opt.validate();
}

BacktestConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);

  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }

  BacktestConfig cfg;
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto take_double = [&](const char* key, double& out) {
    if (auto v = take(key)) {
      auto d = csv::parse_double(*v);
      if (!d) throw std::runtime_error(std::string("config: bad number for ") + key);
      out = *d;
    }
  };
  auto take_int = [&](const char* key, int& out) {
    if (auto v = take(key)) {
      auto d = csv::parse_int(*v);
      if (!d) throw std::runtime_error(std::string("config: bad integer for ") + key);
      out = static_cast<int>(*d);
    }
  };
  auto split_list = [](const std::string& v) {
    std::vector<std::string> items;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) items.push_back(item.substr(b, e - b + 1));
    }
    return items;
  };

  if (auto v = take("prices")) cfg.prices_csv = *v;
  if (auto v = take("class_map")) cfg.class_map_csv = *v;
  if (auto v = take("train_start")) cfg.training.first = *v;
  if (auto v = take("train_end")) cfg.training.last = *v;
  if (auto v = take("eval_start")) cfg.evaluation.first = *v;
  if (auto v = take("eval_end")) cfg.evaluation.last = *v;
  if (auto v = take("submission_dates")) cfg.submission_dates = split_list(*v);
  if (auto v = take("methods")) cfg.methods = split_list(*v);
  take_int("horizon", cfg.horizon_days);
  if (auto v = take("seed")) {
    auto d = csv::parse_int(*v);
    if (!d || *d < 0) throw std::runtime_error("config: bad seed");
    cfg.seed = static_cast<std::uint64_t>(*d);
  }
  if (auto v = take("portfolio")) cfg.portfolio = (*v == "true" || *v == "1" || *v == "yes");
  take_int("garch_p", cfg.order.p);
  take_int("garch_q", cfg.order.q);
  take_double("eta", cfg.eta);
  take_double("adagrad_eps", cfg.adagrad_eps);
  take_double("delta", cfg.delta);
  if (auto v = take("ql_convention")) {
    if (*v == "paper") cfg.ql = garch::QlConvention::paper;
    else if (*v == "standard") cfg.ql = garch::QlConvention::standard;
    else throw std::runtime_error("config: ql_convention must be paper or standard");
  }
  if (auto v = take("theta0")) {
    cfg.theta0.clear();
    for (const std::string& s : split_list(*v)) {
      auto d = csv::parse_double(s);
      if (!d) throw std::runtime_error("config: bad theta0 entry");
      cfg.theta0.push_back(*d);
    }
  }
  if (auto v = take("empirical_assets")) {
    cfg.empirical_assets.clear();
    for (const std::string& s : split_list(*v)) {
      auto d = csv::parse_int(s);
      if (!d) throw std::runtime_error("config: bad empirical_assets entry");
      cfg.empirical_assets.insert(static_cast<int>(*d));
    }
  }
  take_int("correlation_window_days", cfg.correlation_window_days);
  take_int("min_overlap", cfg.min_overlap);
  take_int("iterations", cfg.matrix_opt.total_iterations);
  take_int("batch", cfg.matrix_opt.batch_size);
  take_double("base_step", cfg.matrix_opt.base_step);
  if (auto v = take("optimizer")) {
    if (*v == "adam") cfg.matrix_opt.kind = opt::OptimizerKind::adam;
    else if (*v == "annealing_sgd") cfg.matrix_opt.kind = opt::OptimizerKind::annealing_sgd;
    else throw std::runtime_error("config: optimizer must be adam or annealing_sgd");
  }
  take_int("portfolio_iterations", cfg.portfolio_opt.total_iterations);
  take_int("portfolio_batch", cfg.portfolio_opt.batch_size);
  take_double("portfolio_base_step", cfg.portfolio_opt.base_step);
  take_int("portfolio_restarts", cfg.portfolio_opt.restarts);

  if (!kv.empty()) throw std::runtime_error("config: unknown key '" + kv.begin()->first + "'");
  cfg.matrix_opt.seed = cfg.seed;
  cfg.portfolio_opt.seed = rng::derive_seed(cfg.seed, 0x504F5254u);
  return cfg;
}

std::vector<double> simulate_garch(const garch::GarchOrder& order, const garch::GarchParams& theta,
                                   double target_variance, int n, std::uint64_t seed) {
  if (!order.valid()) throw std::invalid_argument("simulate_garch: invalid order");
  if (theta.dim() != order.dim())
    throw std::invalid_argument("simulate_garch: theta does not match order");
  if (!theta.feasible() || theta.sum() >= 1.0)
    throw std::invalid_argument("simulate_garch: theta outside Theta");
  if (!(target_variance > 0.0))
    throw std::invalid_argument("simulate_garch: target variance must be positive");
  if (n < 1) throw std::invalid_argument("simulate_garch: n must be >= 1");

  constexpr int kBurnIn = 500;
  garch::VolState state;
  state.seed_first(target_variance, target_variance, order);
  const std::vector<double> no_sens(static_cast<std::size_t>(order.dim()), 0.0);

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < kBurnIn + n; ++t) {
    const double sigma2 = garch::volatility_step(state, theta, target_variance);
    const double eta = rng::normal_at(seed, rng::Stream::simulation, 0, 0,
                                      static_cast<std::uint32_t>(t));
    const double eps = std::sqrt(sigma2) * eta;
    state.push(eps * eps, sigma2, no_sens);
    if (t >= kBurnIn) out.push_back(eps);
  }
  return out;
}

void write_synthetic_universe_csv(const std::string& path, int n_assets, int n_days,
                                  std::uint64_t seed, const std::string& start_date) {
  if (n_assets < 1 || n_days < 2)
    throw std::invalid_argument("write_synthetic_universe_csv: need >= 1 asset, >= 2 days");

  struct Regime { double daily_vol; double drift; double a; double b; };
  auto regime_for = [](returns::AssetClass c) -> Regime {
    switch (c) {
      case returns::AssetClass::Stocks: return {0.018, 3e-4, 0.08, 0.88};
      case returns::AssetClass::EtfEquities: return {0.009, 2e-4, 0.06, 0.90};
      case returns::AssetClass::EtfFixedIncome: return {0.004, 5e-5, 0.05, 0.90};
      case returns::AssetClass::EtfCommodities: return {0.012, 1e-4, 0.07, 0.88};
      case returns::AssetClass::EtfVolatility: return {0.035, -1e-3, 0.12, 0.80};
    }
    return {0.01, 0.0, 0.05, 0.9};
  };

  const std::vector<std::string> calendar = dates::weekday_calendar(start_date, n_days);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "date,asset_id,adj_close\n";

  std::vector<std::vector<double>> prices(static_cast<std::size_t>(n_assets));
  for (int a = 1; a <= n_assets; ++a) {
    returns::AssetClass cls;
    try {
      cls = returns::class_of_asset(a);
    } catch (const std::out_of_range&) {
      cls = returns::AssetClass::Stocks;
    }
    const Regime rg = regime_for(cls);
    const garch::GarchOrder order{1, 1};
    const garch::GarchParams theta({rg.a}, {rg.b});
    const std::vector<double> eps = simulate_garch(order, theta, rg.daily_vol * rg.daily_vol,
                                                   n_days - 1, rng::derive_seed(seed, static_cast<std::uint64_t>(a)));
    std::vector<double>& p = prices[static_cast<std::size_t>(a - 1)];
    p.resize(static_cast<std::size_t>(n_days));
    p[0] = 100.0;
    for (int t = 1; t < n_days; ++t)
      p[static_cast<std::size_t>(t)] =
          p[static_cast<std::size_t>(t - 1)] * std::exp(rg.drift + eps[static_cast<std::size_t>(t - 1)]);
  }
  for (int t = 0; t < n_days; ++t)
    for (int a = 1; a <= n_assets; ++a)
      out << calendar[static_cast<std::size_t>(t)] << ',' << a << ','
          << csv::format_double(prices[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(t)])
          << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

struct WindowPlan {
  std::size_t start_row;  // first scored return row
  std::string date;
};

// Realized horizon totals; nullopt if any asset has a missing return.
std::optional<std::vector<double>> window_totals(const returns::ReturnPanel& panel,
                                                 std::size_t start, int horizon) {
  const std::size_t n_assets = panel.assets.size();
  std::vector<double> totals(n_assets, 0.0);
  for (std::size_t t = start; t < start + static_cast<std::size_t>(horizon); ++t) {
    for (std::size_t a = 0; a < n_assets; ++a) {
      const double r = panel.ret(t, a);
      if (returns::is_missing(r)) return std::nullopt;
      totals[a] += r;
    }
  }
  return totals;
}

}  // namespace

BacktestReport run_backtest(const BacktestConfig& config) {
  config.validate();

  const returns::PriceTable table = returns::load_price_table(config.prices_csv);
  const returns::ReturnPanel panel = returns::compute_log_returns(table);
  const std::size_t n_assets = panel.assets.size();
  if (n_assets % scoring::kQuintiles != 0)
    throw std::invalid_argument("run_backtest: asset count must be a multiple of 5");

  const returns::AssetClassMap classes = config.class_map_csv.empty()
                                             ? returns::AssetClassMap{}
                                             : returns::load_class_map_csv(config.class_map_csv);
  const returns::ClassMeans means = class_mean_returns(panel, config.training, classes);

  std::set<int> empirical = config.empirical_assets;
  if (empirical.empty())
    empirical.insert(means.empirical_assets.begin(), means.empirical_assets.end());

  BacktestReport report;
  report.methods = config.methods;

  // --- training-window quintile history: non-overlapping horizon blocks ---
  std::size_t train_begin = 0;
  while (train_begin < panel.dates.size() && panel.dates[train_begin] < config.training.first)
    ++train_begin;
  std::vector<scoring::QuintileMatrix> train_history;
  std::map<returns::AssetClass, std::array<double, 6>> class_acc;  // 5 sums + count
  for (std::size_t s = train_begin;
       s + static_cast<std::size_t>(config.horizon_days) <= panel.dates.size();
       s += static_cast<std::size_t>(config.horizon_days)) {
    if (panel.dates[s + static_cast<std::size_t>(config.horizon_days) - 1] > config.training.last)
      break;
    const auto totals = window_totals(panel, s, config.horizon_days);
    if (!totals) {
      report.skipped.push_back("training window at " + panel.dates[s] + ": missing returns");
      continue;
    }
    scoring::QuintileMatrix q = scoring::quintiles_from_returns(*totals);
    for (std::size_t a = 0; a < n_assets; ++a) {
      auto& acc = class_acc[classes.at(panel.assets[a])];
      for (int k = 0; k < scoring::kQuintiles; ++k)
        acc[static_cast<std::size_t>(k)] += q.rows[a][static_cast<std::size_t>(k)];
      acc[5] += 1.0;
    }
    train_history.push_back(std::move(q));
  }
  if (train_history.empty())
    throw std::invalid_argument("run_backtest: no complete training windows");

  for (const auto& [cls, acc] : class_acc) {
    ClassQuintileRow row;
    row.cls = returns::to_string(cls);
    for (int k = 0; k < scoring::kQuintiles; ++k)
      row.freq_pct[static_cast<std::size_t>(k)] = 100.0 * acc[static_cast<std::size_t>(k)] / acc[5];
    report.class_quintiles.push_back(row);
  }

  const scoring::SubmissionMatrix best_const = scoring::best_constant(train_history);
  const scoring::SubmissionMatrix uniform = scoring::uniform_submission(n_assets);

  // --- static Gaussian marginals fit on the training window ---
  const bool needs_static =
      std::find(config.methods.begin(), config.methods.end(), "gaussian_static") != config.methods.end() ||
      std::find(config.methods.begin(), config.methods.end(), "hybrid") != config.methods.end();
  std::vector<forecast::GaussianMarginal> static_gauss(n_assets);
  if (needs_static) {
    for (std::size_t a = 0; a < n_assets; ++a) {
      double sum = 0.0;
      long m = 0;
      for (std::size_t t = 0; t < panel.dates.size(); ++t) {
        if (!config.training.contains(panel.dates[t])) continue;
        const double r = panel.ret(t, a);
        if (returns::is_missing(r)) continue;
        sum += r;
        ++m;
      }
      if (m < 2)
        throw std::invalid_argument("run_backtest: asset " + std::to_string(panel.assets[a]) +
                                    " has under two training returns");
      const double own_mean = sum / static_cast<double>(m);
      double ss = 0.0;
      for (std::size_t t = 0; t < panel.dates.size(); ++t) {
        if (!config.training.contains(panel.dates[t])) continue;
        const double r = panel.ret(t, a);
        if (returns::is_missing(r)) continue;
        ss += (r - own_mean) * (r - own_mean);
      }
      const double sd = std::sqrt(ss / static_cast<double>(m - 1));
      if (!(sd > 0.0))
        throw std::invalid_argument("run_backtest: zero training variance for asset " +
                                    std::to_string(panel.assets[a]));
      // Class-pooled mean when the asset has one; its own mean otherwise
      // (the volatility ETF sits outside the four mean-classes).
      const auto mu = means.mean_for(panel.assets[a]);
      static_gauss[a] = {mu ? *mu : own_mean, sd};
    }
  }

  // --- online estimators for the adavol pipeline ---
  const bool needs_adavol =
      std::find(config.methods.begin(), config.methods.end(), "adavol_pipeline") != config.methods.end();
  std::map<int, adavol::AdaVolState> states;
  if (needs_adavol) {
    adavol::AdaVolConfig acfg = adavol::AdaVolConfig::defaults(config.order);
    acfg.eta = config.eta;
    acfg.eps = config.adagrad_eps;
    acfg.delta = config.delta;
    acfg.ql = config.ql;
    if (!config.theta0.empty())
      acfg.theta0 = garch::GarchParams::from_flat(config.theta0, config.order);
    for (int asset : panel.assets)
      if (empirical.count(asset) == 0) states.emplace(asset, adavol::init(acfg));
  }

  // --- submission windows ---
  std::vector<WindowPlan> plan;
  if (!config.submission_dates.empty()) {
    for (const std::string& date : config.submission_dates) {
      const auto it = std::lower_bound(panel.dates.begin(), panel.dates.end(), date);
      const auto s = static_cast<std::size_t>(it - panel.dates.begin());
      if (s + static_cast<std::size_t>(config.horizon_days) > panel.dates.size())
        throw std::invalid_argument("run_backtest: window at " + date + " exceeds the data");
      if (s == 0)
        throw std::invalid_argument("run_backtest: window at " + date + " has no preceding history");
      if (panel.dates[s] <= config.training.last)
        throw std::invalid_argument("run_backtest: window at " + date +
                                    " overlaps the training window");
      if (!plan.empty() && s <= plan.back().start_row)
        throw std::invalid_argument("run_backtest: submission dates must be strictly increasing");
      plan.push_back({s, panel.dates[s]});
    }
  } else {
    std::size_t s = 0;
    while (s < panel.dates.size() && panel.dates[s] < config.evaluation.first) ++s;
    for (; s + static_cast<std::size_t>(config.horizon_days) <= panel.dates.size() &&
           panel.dates[s] <= config.evaluation.last;
         s += static_cast<std::size_t>(config.horizon_days))
      plan.push_back({s, panel.dates[s]});
  }
  if (plan.empty()) throw std::invalid_argument("run_backtest: no evaluation windows fit the data");

  // --- walk forward ---
  std::size_t fed_until = 0;  // panel rows already consumed by the online estimators
  for (std::size_t w = 0; w < plan.size(); ++w) {
    const WindowPlan& win = plan[w];

    if (needs_adavol) {
      for (std::size_t t = fed_until; t < win.start_row; ++t) {
        for (std::size_t a = 0; a < n_assets; ++a) {
          auto it = states.find(panel.assets[a]);
          if (it == states.end()) continue;
          const double r = panel.ret(t, a);
          if (returns::is_missing(r)) continue;
          const auto mu = means.mean_for(panel.assets[a]);
          adavol::step(it->second, r - (mu ? *mu : 0.0));
        }
      }
      fed_until = std::max(fed_until, win.start_row);
    }

    const auto totals = window_totals(panel, win.start_row, config.horizon_days);
    if (!totals) {
      report.skipped.push_back("window " + win.date + ": missing returns in horizon");
      continue;
    }
    const scoring::QuintileMatrix realized = scoring::quintiles_from_returns(*totals);

    WindowScore score;
    score.date = win.date;

    for (const std::string& method : config.methods) {
      std::optional<forecast::JointForecast> fc;
      std::optional<scoring::SubmissionMatrix> m;
      if (method == "uniform") {
        m = uniform;
      } else if (method == "best_constant") {
        m = best_const;
      } else if (method == "gaussian_static" || method == "hybrid") {
        forecast::JointForecast f;
        f.assets = panel.assets;
        f.horizon_days = config.horizon_days;
        for (std::size_t a = 0; a < n_assets; ++a) {
          if (method == "hybrid" && empirical.count(panel.assets[a]) != 0) {
            forecast::EmpiricalMarginal emp;
            for (std::size_t t = 0; t < panel.dates.size(); ++t) {
              if (!config.training.contains(panel.dates[t])) continue;
              const double r = panel.ret(t, a);
              if (!returns::is_missing(r)) emp.samples.push_back(r);
            }
            f.marginals.emplace_back(std::move(emp));
          } else {
            f.marginals.emplace_back(static_gauss[a]);
          }
        }
        fc = std::move(f);
      } else {  // adavol_pipeline
        fc = forecast::build_marginals(panel, states, means, empirical, config.training,
                                       config.horizon_days);
      }

      if (fc) {
        const auto method_index = static_cast<std::uint64_t>(
            std::find(config.methods.begin(), config.methods.end(), method) -
            config.methods.begin());
        opt::OptConfig mopt = config.matrix_opt;
        mopt.seed = rng::derive_seed(config.seed, 0x4D000000u + 8 * w + method_index);
        m = opt::minimize_expected_rps(*fc, mopt, uniform);
      }
      score.rps[method] = scoring::rps(*m, realized);

      if (config.portfolio && method == "adavol_pipeline") {
        forecast::JointForecast corr_fc = *fc;
        const std::size_t lookback =
            std::min(win.start_row, static_cast<std::size_t>(config.correlation_window_days));
        const returns::DateRange corr_window{panel.dates[win.start_row - lookback],
                                             panel.dates[win.start_row - 1]};
        corr_fc.correlation =
            forecast::estimate_correlations(panel, corr_window, config.min_overlap);
        opt::OptConfig popt = config.portfolio_opt;
        popt.seed = rng::derive_seed(config.seed, 0x50000000u + w);
        const auto result = opt::optimize_portfolio(
            corr_fc, popt, opt::project_portfolio(std::vector<double>(n_assets, 0.0)));

        std::vector<std::vector<double>> simple(static_cast<std::size_t>(config.horizon_days),
                                                std::vector<double>(n_assets));
        for (int t = 0; t < config.horizon_days; ++t)
          for (std::size_t a = 0; a < n_assets; ++a)
            simple[static_cast<std::size_t>(t)][a] =
                std::expm1(panel.ret(win.start_row + static_cast<std::size_t>(t), a));
        const auto ir = scoring::information_ratio(result.weights, simple);
        if (ir) score.ir[method] = *ir;
        else score.notes[method] = "degenerate realized IR (zero dispersion)";
        if (result.fell_back_to_uniform)
          score.notes[method + "_gate"] = "uniform fallback";
      }
    }
    report.windows.push_back(std::move(score));
  }

  // --- aggregates ---
  for (const std::string& method : config.methods) {
    double rps_sum = 0.0, ir_sum = 0.0;
    long rps_n = 0, ir_n = 0;
    for (const WindowScore& wsc : report.windows) {
      if (auto it = wsc.rps.find(method); it != wsc.rps.end()) {
        rps_sum += it->second;
        ++rps_n;
      }
      if (auto it = wsc.ir.find(method); it != wsc.ir.end()) {
        ir_sum += it->second;
        ++ir_n;
      }
    }
    if (rps_n > 0) report.mean_rps[method] = rps_sum / static_cast<double>(rps_n);
    if (ir_n > 0) report.mean_ir[method] = ir_sum / static_cast<double>(ir_n);
  }
  return report;
}

namespace {

forecast::JointForecast pipeline_forecast_at(const returns::ReturnPanel& panel,
                                             const BacktestConfig& config,
                                             const std::string& asof) {
  const auto it = std::lower_bound(panel.dates.begin(), panel.dates.end(), asof);
  const auto s = static_cast<std::size_t>(it - panel.dates.begin());
  if (s < 2) throw std::invalid_argument("pipeline: not enough history before " + asof);

  const returns::AssetClassMap classes = config.class_map_csv.empty()
                                             ? returns::AssetClassMap{}
                                             : returns::load_class_map_csv(config.class_map_csv);
  const returns::ClassMeans means = class_mean_returns(panel, config.training, classes);
  std::set<int> empirical = config.empirical_assets;
  if (empirical.empty())
    empirical.insert(means.empirical_assets.begin(), means.empirical_assets.end());

  adavol::AdaVolConfig acfg = adavol::AdaVolConfig::defaults(config.order);
  acfg.eta = config.eta;
  acfg.eps = config.adagrad_eps;
  acfg.delta = config.delta;
  acfg.ql = config.ql;
  if (!config.theta0.empty())
    acfg.theta0 = garch::GarchParams::from_flat(config.theta0, config.order);

  std::map<int, adavol::AdaVolState> states;
  for (int asset : panel.assets)
    if (empirical.count(asset) == 0) states.emplace(asset, adavol::init(acfg));
  for (std::size_t t = 0; t < s; ++t) {
    for (std::size_t a = 0; a < panel.assets.size(); ++a) {
      auto st = states.find(panel.assets[a]);
      if (st == states.end()) continue;
      const double r = panel.ret(t, a);
      if (returns::is_missing(r)) continue;
      const auto mu = means.mean_for(panel.assets[a]);
      adavol::step(st->second, r - (mu ? *mu : 0.0));
    }
  }
  return forecast::build_marginals(panel, states, means, empirical, config.training,
                                   config.horizon_days);
}

}  // namespace

scoring::SubmissionMatrix forecast_submission(const returns::ReturnPanel& panel,
                                              const BacktestConfig& config,
                                              const std::string& asof) {
  const forecast::JointForecast fc = pipeline_forecast_at(panel, config, asof);
  opt::OptConfig mopt = config.matrix_opt;
  mopt.seed = rng::derive_seed(config.seed, 0x464F5245u);
  return opt::minimize_expected_rps(fc, mopt, scoring::uniform_submission(panel.assets.size()));
}

scoring::PortfolioWeights portfolio_weights(const returns::ReturnPanel& panel,
                                            const BacktestConfig& config, const std::string& asof) {
  forecast::JointForecast fc = pipeline_forecast_at(panel, config, asof);
  const auto it = std::lower_bound(panel.dates.begin(), panel.dates.end(), asof);
  const auto s = static_cast<std::size_t>(it - panel.dates.begin());
  const std::size_t lookback =
      std::min(s, static_cast<std::size_t>(config.correlation_window_days));
  const returns::DateRange corr_window{panel.dates[s - lookback], panel.dates[s - 1]};
  fc.correlation = forecast::estimate_correlations(panel, corr_window, config.min_overlap);

  opt::OptConfig popt = config.portfolio_opt;
  popt.seed = rng::derive_seed(config.seed, 0x504F4C49u);
  const auto result = opt::optimize_portfolio(
      fc, popt, opt::project_portfolio(std::vector<double>(panel.assets.size(), 0.0)));
  return result.weights;
}

void emit_report(const BacktestReport& report, const std::string& format,
                 const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir + ": " + ec.message());

  if (format == "csv") {
    {
      const std::string path = (fs::path(out_dir) / "windows.csv").string();
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot open for write: " + path);
      out << "window,method,rps,ir\n";
      for (const WindowScore& w : report.windows) {
        for (const std::string& method : report.methods) {
          auto r = w.rps.find(method);
          if (r == w.rps.end()) continue;
          out << w.date << ',' << method << ',' << csv::format_double(r->second) << ',';
          if (auto ir = w.ir.find(method); ir != w.ir.end()) out << csv::format_double(ir->second);
          out << '\n';
        }
      }
      for (const std::string& method : report.methods) {
        auto r = report.mean_rps.find(method);
        if (r == report.mean_rps.end()) continue;
        out << "aggregate," << method << ',' << csv::format_double(r->second) << ',';
        if (auto ir = report.mean_ir.find(method); ir != report.mean_ir.end())
          out << csv::format_double(ir->second);
        out << '\n';
      }
      if (!out) throw std::runtime_error("write failed: " + path);
    }
    {
      const std::string path = (fs::path(out_dir) / "class_quintiles.csv").string();
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot open for write: " + path);
      out << "class,q1,q2,q3,q4,q5\n";
      for (const ClassQuintileRow& row : report.class_quintiles) {
        out << row.cls;
        for (double v : row.freq_pct) out << ',' << csv::format_double(v);
        out << '\n';
      }
      if (!out) throw std::runtime_error("write failed: " + path);
    }
    return;
  }
  if (format == "json") {
    nlohmann::json j;
    j["methods"] = report.methods;
    nlohmann::json windows = nlohmann::json::array();
    for (const WindowScore& w : report.windows) {
      nlohmann::json jw;
      jw["window"] = w.date;
      for (const std::string& method : report.methods) {
        if (auto r = w.rps.find(method); r != w.rps.end()) jw["rps"][method] = r->second;
        if (auto r = w.ir.find(method); r != w.ir.end()) jw["ir"][method] = r->second;
      }
      if (!w.notes.empty()) jw["notes"] = w.notes;
      windows.push_back(std::move(jw));
    }
    j["windows"] = std::move(windows);
    j["mean_rps"] = report.mean_rps;
    j["mean_ir"] = report.mean_ir;
    nlohmann::json table = nlohmann::json::array();
    for (const ClassQuintileRow& row : report.class_quintiles)
      table.push_back({{"class", row.cls}, {"freq_pct", row.freq_pct}});
    j["class_quintiles"] = std::move(table);
    j["skipped"] = report.skipped;

    const std::string path = (fs::path(out_dir) / "report.json").string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
    return;
  }
  throw std::invalid_argument("emit_report: format must be csv or json");
}

}  // namespace m6cast::backtest
