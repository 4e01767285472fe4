// m6cast command line: data ingestion, GARCH simulation, walk-forward
// backtests, submission/portfolio production and scoring.
//
// Exit codes: 0 success, 2 validation/usage errors, 1 runtime errors.

#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "m6cast/backtest.hpp"
#include "m6cast/csv.hpp"
#include "m6cast/forecast.hpp"
#include "m6cast/returns.hpp"
#include "m6cast/scoring.hpp"

namespace {

using namespace m6cast;

int cmd_ingest(const std::string& prices, const std::string& out) {
  std::vector<std::string> diagnostics;
  const returns::PriceTable table = returns::load_price_table(prices, &diagnostics);
  for (const std::string& d : diagnostics) std::cerr << "warning: " << d << '\n';
  const returns::ReturnPanel panel = returns::compute_log_returns(table);
  returns::write_panel_csv(panel, out);
  std::cout << "panel: " << panel.assets.size() << " assets, " << panel.dates.size()
            << " return dates -> " << out << '\n';
  return 0;
}

int cmd_simulate(const std::vector<double>& alpha, const std::vector<double>& beta,
                 double target_variance, int n, std::uint64_t seed, const std::string& out) {
  const garch::GarchOrder order{static_cast<int>(alpha.size()), static_cast<int>(beta.size())};
  const garch::GarchParams theta(alpha, beta);
  const std::vector<double> eps = backtest::simulate_garch(order, theta, target_variance, n, seed);
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot open for write: " + out);
  f << "t,epsilon\n";
  for (std::size_t t = 0; t < eps.size(); ++t)
    f << t + 1 << ',' << csv::format_double(eps[t]) << '\n';
  if (!f) throw std::runtime_error("write failed: " + out);
  std::cout << "simulated " << n << " observations -> " << out << '\n';
  return 0;
}

int cmd_backtest(const std::string& config_path, const std::string& out_dir,
                 const std::string& format) {
  const backtest::BacktestConfig config = backtest::load_config(config_path);
  const backtest::BacktestReport report = backtest::run_backtest(config);
  backtest::emit_report(report, format, out_dir);
  for (const std::string& s : report.skipped) std::cerr << "skipped: " << s << '\n';
  std::cout << "windows scored: " << report.windows.size() << '\n';
  for (const std::string& method : report.methods) {
    auto it = report.mean_rps.find(method);
    if (it == report.mean_rps.end()) continue;
    std::cout << "  " << method << ": mean RPS " << csv::format_double(it->second);
    if (auto ir = report.mean_ir.find(method); ir != report.mean_ir.end())
      std::cout << ", mean IR " << csv::format_double(ir->second);
    std::cout << '\n';
  }
  std::cout << "report -> " << out_dir << '\n';
  return 0;
}

backtest::BacktestConfig pipeline_config(const std::string& config_path) {
  if (!config_path.empty()) return backtest::load_config(config_path);
  backtest::BacktestConfig config;
  config.prices_csv = "(panel supplied directly)";
  return config;
}

int cmd_forecast(const std::string& panel_path, const std::string& asof, const std::string& out,
                 const std::string& config_path) {
  const returns::ReturnPanel panel = returns::load_panel_csv(panel_path);
  const backtest::BacktestConfig config = pipeline_config(config_path);
  const scoring::SubmissionMatrix m = backtest::forecast_submission(panel, config, asof);
  scoring::write_matrix_csv(panel.assets, m.rows, out);
  std::cout << "submission matrix (" << m.size() << " assets) -> " << out << '\n';
  return 0;
}

int cmd_portfolio(const std::string& panel_path, const std::string& asof, const std::string& out,
                  const std::string& config_path) {
  const returns::ReturnPanel panel = returns::load_panel_csv(panel_path);
  const backtest::BacktestConfig config = pipeline_config(config_path);
  const scoring::PortfolioWeights x = backtest::portfolio_weights(panel, config, asof);
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot open for write: " + out);
  f << "asset_id,weight\n";
  for (std::size_t a = 0; a < x.w.size(); ++a)
    f << panel.assets[a] << ',' << csv::format_double(x.w[a]) << '\n';
  if (!f) throw std::runtime_error("write failed: " + out);
  std::cout << "portfolio weights (gross " << csv::format_double(x.gross()) << ") -> " << out
            << '\n';
  return 0;
}

int cmd_score(const std::string& submission_path, const std::string& realized_path) {
  const auto [sub_assets, sub_rows] = scoring::read_matrix_csv(submission_path);
  const auto [q_assets, q_rows] = scoring::read_matrix_csv(realized_path);
  if (sub_assets != q_assets)
    throw std::invalid_argument("score: submission and realized files list different assets");
  scoring::SubmissionMatrix m{sub_rows};
  scoring::QuintileMatrix q{q_rows};
  std::cout << "RPS = " << csv::format_double(scoring::rps(m, q)) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"m6cast: online adaptive volatility forecasts and M6-style submission optimization"};
  app.require_subcommand(1);

  std::string prices, out, config_path, format = "csv", panel_path, asof, submission_path,
              realized_path;
  std::vector<double> alpha{0.1}, beta{0.8};
  double target_variance = 1e-4;
  int n = 1000;
  std::uint64_t seed = 42;

  auto* ingest = app.add_subcommand("ingest", "price CSV -> aligned log-return panel");
  ingest->add_option("--prices", prices, "date,asset_id,adj_close CSV")->required();
  ingest->add_option("--out", out, "output panel CSV")->required();

  auto* simulate = app.add_subcommand("simulate", "draw a variance-targeted GARCH series");
  simulate->add_option("--alpha", alpha, "ARCH coefficients");
  simulate->add_option("--beta", beta, "GARCH coefficients");
  simulate->add_option("--target-variance", target_variance, "unconditional variance");
  simulate->add_option("--n", n, "series length");
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--out", out, "output CSV")->required();

  auto* bt = app.add_subcommand("backtest", "walk-forward benchmark comparison");
  bt->add_option("--config", config_path, "flat key-value config file")->required();
  bt->add_option("--out", out, "output directory")->required();
  bt->add_option("--format", format, "csv or json (default csv)");

  auto* fc = app.add_subcommand("forecast", "produce a submission matrix at a date");
  fc->add_option("--panel", panel_path, "log-return panel CSV")->required();
  fc->add_option("--asof", asof, "submission date (ISO)")->required();
  fc->add_option("--out", out, "submission CSV")->required();
  fc->add_option("--config", config_path, "optional config file");

  auto* pf = app.add_subcommand("portfolio", "produce portfolio weights at a date");
  pf->add_option("--panel", panel_path, "log-return panel CSV")->required();
  pf->add_option("--asof", asof, "submission date (ISO)")->required();
  pf->add_option("--out", out, "weights CSV")->required();
  pf->add_option("--config", config_path, "optional config file");

  auto* sc = app.add_subcommand("score", "RPS of a submission against realized quintiles");
  sc->add_option("--submission", submission_path, "asset_id,q1..q5 CSV")->required();
  sc->add_option("--realized", realized_path, "asset_id,q1..q5 CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(ingest)) return cmd_ingest(prices, out);
    if (app.got_subcommand(simulate)) return cmd_simulate(alpha, beta, target_variance, n, seed, out);
    if (app.got_subcommand(bt)) return cmd_backtest(config_path, out, format);
    if (app.got_subcommand(fc)) return cmd_forecast(panel_path, asof, out, config_path);
    if (app.got_subcommand(pf)) return cmd_portfolio(panel_path, asof, out, config_path);
    if (app.got_subcommand(sc)) return cmd_score(submission_path, realized_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
