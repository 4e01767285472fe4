#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "m6cast/adavol.hpp"
#include "m6cast/garch.hpp"
#include "m6cast/returns.hpp"
#include "m6cast/scoring.hpp"
#include "m6cast/stochastic_opt.hpp"

namespace m6cast::backtest {

inline const std::vector<std::string> kAllMethods = {
    "uniform", "best_constant", "gaussian_static", "hybrid", "adavol_pipeline"};

/// Walk-forward evaluation setup. Submission windows are either the explicit
/// date list or every `horizon_days` trading days across the evaluation
/// range; each window scores the 4-week quintiles realized over the
/// following `horizon_days` returns. Everything an estimator sees is
/// strictly before the submission date.
struct BacktestConfig {
  std::string prices_csv;
  std::string class_map_csv;  // optional override of the default universe mapping
  returns::DateRange training{"2015-01-01", "2020-12-31"};
  returns::DateRange evaluation{"2021-04-01", "2021-12-31"};
  std::vector<std::string> submission_dates;
  std::vector<std::string> methods = kAllMethods;
  int horizon_days = 20;
  std::uint64_t seed = 42;
  bool portfolio = false;

  garch::GarchOrder order{1, 1};
  double eta = 0.1;
  double adagrad_eps = 1e-8;
  double delta = 1e-6;
  garch::QlConvention ql = garch::QlConvention::paper;
  std::vector<double> theta0;  // flat (alpha..,beta..); empty = built-in default
  std::set<int> empirical_assets;  // empty = every EtfVolatility-class asset
  int correlation_window_days = 504;
  int min_overlap = 60;

  opt::OptConfig matrix_opt = opt::OptConfig::for_matrix();
  opt::OptConfig portfolio_opt = opt::OptConfig::for_portfolio();

  void validate() const;
};

/// Flat key-value config file (see README for the schema).
BacktestConfig load_config(const std::string& path);

struct WindowScore {
  std::string date;
  std::map<std::string, double> rps;
  std::map<std::string, double> ir;
  std::map<std::string, std::string> notes;
};

struct ClassQuintileRow {
  std::string cls;
  std::array<double, 5> freq_pct{};  // row sums to 100
};

struct BacktestReport {
  std::vector<std::string> methods;  // column order for emission
  std::vector<WindowScore> windows;
  std::map<std::string, double> mean_rps;
  std::map<std::string, double> mean_ir;
  std::vector<ClassQuintileRow> class_quintiles;  // training-period frequencies
  std::vector<std::string> skipped;               // window diagnostics
};

/// Exact draw of the variance-targeted process at the given unconditional
/// variance; 500 burn-in steps are discarded. Deterministic in the seed.
std::vector<double> simulate_garch(const garch::GarchOrder& order, const garch::GarchParams& theta,
                                   double target_variance, int n, std::uint64_t seed);

/// Synthetic M6-style universe: per-class volatility regimes and drifts,
/// weekday calendar, `date,asset_id,adj_close` rows.
void write_synthetic_universe_csv(const std::string& path, int n_assets, int n_days,
                                  std::uint64_t seed, const std::string& start_date = "2015-01-02");

BacktestReport run_backtest(const BacktestConfig& config);

/// One-off pipeline runs for the CLI: online states consume every panel
/// return strictly before `asof`, then the frozen forecast is optimized into
/// a submission matrix (independent marginals) or portfolio weights
/// (correlation-coupled sampling). `asof` snaps forward to the next trading
/// date present in the panel.
scoring::SubmissionMatrix forecast_submission(const returns::ReturnPanel& panel,
                                              const BacktestConfig& config,
                                              const std::string& asof);
scoring::PortfolioWeights portfolio_weights(const returns::ReturnPanel& panel,
                                            const BacktestConfig& config, const std::string& asof);

/// Write `windows.csv` + `class_quintiles.csv` (format "csv") or
/// `report.json` (format "json") under `out_dir`. Emission is byte-stable
/// for a given report.
void emit_report(const BacktestReport& report, const std::string& format,
                 const std::string& out_dir);

}  // namespace m6cast::backtest
