#include "m6cast/adavol.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "m6cast/projection.hpp"

namespace m6cast::adavol {

AdaVolConfig AdaVolConfig::defaults(garch::GarchOrder order) {
  AdaVolConfig cfg;
  cfg.order = order;
  cfg.theta0.alpha.assign(static_cast<std::size_t>(order.p),
                          order.p > 0 ? 0.1 / order.p : 0.0);
  cfg.theta0.beta.assign(static_cast<std::size_t>(order.q),
                         order.q > 0 ? 0.8 / order.q : 0.0);
  return cfg;
}

void AdaVolConfig::validate() const {
  if (!order.valid()) throw std::invalid_argument("AdaVolConfig: order requires p,q >= 0, p+q >= 1");
  if (!(eta > 0.0)) throw std::invalid_argument("AdaVolConfig: eta must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("AdaVolConfig: eps must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("AdaVolConfig: delta must be in (0,1)");
  if (theta0.dim() != order.dim())
    throw std::invalid_argument("AdaVolConfig: theta0 does not match the order");
}

AdaVolState init(const AdaVolConfig& config, std::string* warning) {
  config.validate();
  AdaVolState state;
  state.config = config;
  state.G.assign(static_cast<std::size_t>(config.order.dim()), config.eps);
  state.theta = config.theta0;
  if (!state.theta.feasible(config.delta)) {
    state.theta = project_theta(config.theta0.flat(), config.delta, config.order);
    if (warning) *warning = "theta0 outside Theta_delta; projected onto the feasible set";
  }
  return state;
}

std::pair<double, double> update_stats(std::int64_t t, double mu_prev, double gamma2_prev,
                                       double eps_obs) {
  if (t < 1) throw std::invalid_argument("update_stats: t must already be incremented (t >= 1)");
  const double td = static_cast<double>(t);
  const double mu = td / (td + 1.0) * mu_prev + eps_obs / (td + 1.0);
  const double gamma2 = (td - 1.0) / td * gamma2_prev + (eps_obs - mu) * (eps_obs - mu) / td;
  return {mu, gamma2};
}

garch::GarchParams project_theta(const std::vector<double>& theta_raw, double delta,
                                 const garch::GarchOrder& order) {
  for (double v : theta_raw)
    if (!std::isfinite(v)) throw std::invalid_argument("project_theta: non-finite input");
  return garch::GarchParams::from_flat(
      proj::project_nonneg_capped_sum(theta_raw, 1.0 - delta), order);
}

double step(AdaVolState& state, double eps_obs) {
  if (!std::isfinite(eps_obs))
    throw std::invalid_argument("adavol::step: non-finite observation rejected");

  const AdaVolConfig& cfg = state.config;
  const int dim = cfg.order.dim();

  state.t += 1;
  const double gamma2_prev = state.gamma2;
  const auto [mu, gamma2] = update_stats(state.t, state.mu, state.gamma2, eps_obs);
  state.mu = mu;
  state.gamma2 = gamma2;

  double sigma2_t;
  std::vector<double> sens(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> grad(static_cast<std::size_t>(dim), 0.0);
  if (state.t == 1) {
    // sigma_1^2 = eps_1^2 is pinned, not a function of theta: zero gradient.
    sigma2_t = std::max(eps_obs * eps_obs, garch::variance_floor(gamma2_prev));
    state.vol.seed_first(eps_obs * eps_obs, sigma2_t, cfg.order);
  } else {
    garch::SigmaAndSens s = garch::volatility_sensitivity_step(state.vol, state.theta, gamma2_prev);
    sigma2_t = s.sigma2;
    sens = std::move(s.dsigma2_dtheta);
    grad = garch::loss_gradient(sigma2_t, sens, eps_obs, cfg.ql);
  }

  std::vector<double> raw(static_cast<std::size_t>(dim));
  const std::vector<double> theta_flat = state.theta.flat();
  for (int k = 0; k < dim; ++k) {
    state.G[k] += grad[k] * grad[k];
    raw[k] = theta_flat[k] - cfg.eta * grad[k] / std::sqrt(state.G[k]);
  }
  state.theta = project_theta(raw, cfg.delta, cfg.order);

  if (state.t > 1) state.vol.push(eps_obs * eps_obs, sigma2_t, sens);
  state.sigma2_next = garch::volatility_step(state.vol, state.theta, state.gamma2);
  return state.sigma2_next;
}

namespace {

constexpr int kStateVersion = 1;

nlohmann::json params_to_json(const garch::GarchParams& p) {
  return nlohmann::json{{"alpha", p.alpha}, {"beta", p.beta}};
}

garch::GarchParams params_from_json(const nlohmann::json& j) {
  garch::GarchParams p;
  p.alpha = j.at("alpha").get<std::vector<double>>();
  p.beta = j.at("beta").get<std::vector<double>>();
  return p;
}

}  // namespace

std::string to_json(const AdaVolState& state) {
  nlohmann::json j;
  j["version"] = kStateVersion;
  j["config"] = {
      {"p", state.config.order.p},
      {"q", state.config.order.q},
      {"eta", state.config.eta},
      {"eps", state.config.eps},
      {"delta", state.config.delta},
      {"ql_convention", state.config.ql == garch::QlConvention::paper ? "paper" : "standard"},
      {"theta0", params_to_json(state.config.theta0)},
  };
  j["t"] = state.t;
  j["mu"] = state.mu;
  j["gamma2"] = state.gamma2;
  j["G"] = state.G;
  j["theta"] = params_to_json(state.theta);
  j["vol"] = {
      {"eps2_lags", state.vol.eps2_lags},
      {"sigma2_lags", state.vol.sigma2_lags},
      {"sens_lags", state.vol.sens_lags},
      {"initialized", state.vol.initialized},
  };
  j["sigma2_next"] = state.sigma2_next;
  return j.dump(2);
}

AdaVolState from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const int version = j.at("version").get<int>();
  if (version != kStateVersion)
    throw std::runtime_error("adavol state: unsupported version " + std::to_string(version));

  AdaVolState state;
  const nlohmann::json& c = j.at("config");
  state.config.order = {c.at("p").get<int>(), c.at("q").get<int>()};
  state.config.eta = c.at("eta").get<double>();
  state.config.eps = c.at("eps").get<double>();
  state.config.delta = c.at("delta").get<double>();
  state.config.ql = c.at("ql_convention").get<std::string>() == "standard"
                        ? garch::QlConvention::standard
                        : garch::QlConvention::paper;
  state.config.theta0 = params_from_json(c.at("theta0"));
  state.config.validate();

  state.t = j.at("t").get<std::int64_t>();
  state.mu = j.at("mu").get<double>();
  state.gamma2 = j.at("gamma2").get<double>();
  state.G = j.at("G").get<std::vector<double>>();
  state.theta = params_from_json(j.at("theta"));
  const nlohmann::json& v = j.at("vol");
  state.vol.eps2_lags = v.at("eps2_lags").get<std::vector<double>>();
  state.vol.sigma2_lags = v.at("sigma2_lags").get<std::vector<double>>();
  state.vol.sens_lags = v.at("sens_lags").get<std::vector<std::vector<double>>>();
  state.vol.initialized = v.at("initialized").get<bool>();
  state.sigma2_next = j.at("sigma2_next").get<double>();

  if (static_cast<int>(state.G.size()) != state.config.order.dim() ||
      state.theta.dim() != state.config.order.dim())
    throw std::runtime_error("adavol state: inconsistent dimensions");
  return state;
}

void save(const AdaVolState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("adavol::save: cannot open " + path);
  out << to_json(state) << '\n';
  if (!out) throw std::runtime_error("adavol::save: write failed for " + path);
}

AdaVolState load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("adavol::load: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

}  // namespace m6cast::adavol
