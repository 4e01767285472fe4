#include "m6cast/returns.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "m6cast/csv.hpp"

namespace m6cast::returns {

std::string to_string(AssetClass c) {
  switch (c) {
    case AssetClass::Stocks: return "Stocks";
    case AssetClass::EtfEquities: return "EtfEquities";
    case AssetClass::EtfFixedIncome: return "EtfFixedIncome";
    case AssetClass::EtfCommodities: return "EtfCommodities";
    case AssetClass::EtfVolatility: return "EtfVolatility";
  }
  throw std::logic_error("to_string: unknown AssetClass");
}

AssetClass asset_class_from_string(const std::string& name) {
  if (name == "Stocks") return AssetClass::Stocks;
  if (name == "EtfEquities") return AssetClass::EtfEquities;
  if (name == "EtfFixedIncome") return AssetClass::EtfFixedIncome;
  if (name == "EtfCommodities") return AssetClass::EtfCommodities;
  if (name == "EtfVolatility") return AssetClass::EtfVolatility;
  throw std::invalid_argument("unknown asset class name: '" + name + "'");
}

AssetClass class_of_asset(int asset_id) {
  if (asset_id >= 1 && asset_id <= 50) return AssetClass::Stocks;
  if ((asset_id >= 51 && asset_id <= 67) || (asset_id >= 80 && asset_id <= 99))
    return AssetClass::EtfEquities;
  if (asset_id >= 68 && asset_id <= 76) return AssetClass::EtfFixedIncome;
  if (asset_id >= 77 && asset_id <= 79) return AssetClass::EtfCommodities;
  if (asset_id == 100) return AssetClass::EtfVolatility;
  throw std::out_of_range("class_of_asset: asset id " + std::to_string(asset_id) +
                          " outside 1..100 and no override supplied");
}

AssetClass AssetClassMap::at(int asset_id) const {
  auto it = overrides_.find(asset_id);
  if (it != overrides_.end()) return it->second;
  return class_of_asset(asset_id);
}

AssetClassMap load_class_map_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open class map: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty class map: " + path);
  auto header = csv::split_line(line);
  if (header.size() != 2 || header[0] != "asset_id" || header[1] != "class")
    throw std::runtime_error(path + ": expected header 'asset_id,class'");
  std::map<int, AssetClass> overrides;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto f = csv::split_line(line);
    if (f.size() != 2)
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": expected 2 fields");
    auto id = csv::parse_int(f[0]);
    if (!id) throw std::runtime_error(path + ": row " + std::to_string(row) + ": bad asset id");
    overrides[static_cast<int>(*id)] = asset_class_from_string(f[1]);
  }
  return AssetClassMap(std::move(overrides));
}

std::size_t PriceTable::asset_index(int asset_id) const {
  auto it = std::lower_bound(assets.begin(), assets.end(), asset_id);
  if (it == assets.end() || *it != asset_id)
    throw std::out_of_range("unknown asset id " + std::to_string(asset_id));
  return static_cast<std::size_t>(it - assets.begin());
}

std::size_t ReturnPanel::asset_index(int asset_id) const {
  auto it = std::lower_bound(assets.begin(), assets.end(), asset_id);
  if (it == assets.end() || *it != asset_id)
    throw std::out_of_range("unknown asset id " + std::to_string(asset_id));
  return static_cast<std::size_t>(it - assets.begin());
}

PriceTable load_price_table(const std::string& path, std::vector<std::string>* diagnostics) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open price file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  auto header = csv::split_line(line);
  if (header.size() < 3 || header[0] != "date" || header[1] != "asset_id" ||
      header[2] != "adj_close")
    throw std::runtime_error(path + ": malformed header, expected 'date,asset_id,adj_close'");

  struct Cell { std::string date; int asset; double price; bool missing; };
  std::vector<Cell> cells;
  std::set<std::string> date_set;
  std::set<int> asset_set;
  std::set<std::pair<std::string, int>> seen;

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto f = csv::split_line(line);
    if (f.size() < 3) {
      if (diagnostics)
        diagnostics->push_back(path + ": row " + std::to_string(row) + ": expected 3 fields, dropped");
      continue;
    }
    if (!dates::valid_iso_date(f[0])) {
      if (diagnostics)
        diagnostics->push_back(path + ": row " + std::to_string(row) + ": bad date '" + f[0] + "', dropped");
      continue;
    }
    auto id = csv::parse_int(f[1]);
    if (!id) {
      if (diagnostics)
        diagnostics->push_back(path + ": row " + std::to_string(row) + ": bad asset id '" + f[1] + "', dropped");
      continue;
    }
    Cell cell{f[0], static_cast<int>(*id), kMissing, true};
    if (!f[2].empty()) {
      auto price = csv::parse_double(f[2]);
      if (!price) {
        if (diagnostics)
          diagnostics->push_back(path + ": row " + std::to_string(row) + ": unparseable price '" + f[2] + "', dropped");
        continue;
      }
      if (!(*price > 0.0))
        throw std::runtime_error(path + ": row " + std::to_string(row) +
                                 ": non-positive price " + f[2]);
      cell.price = *price;
      cell.missing = false;
    }
    if (!seen.insert({cell.date, cell.asset}).second)
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": duplicate (date, asset) pair");
    date_set.insert(cell.date);
    asset_set.insert(cell.asset);
    cells.push_back(std::move(cell));
  }
  if (cells.empty()) throw std::runtime_error(path + ": no data rows");

  PriceTable table;
  table.dates.assign(date_set.begin(), date_set.end());
  table.assets.assign(asset_set.begin(), asset_set.end());
  table.prices.assign(table.dates.size() * table.assets.size(), kMissing);
  std::map<std::string, std::size_t> date_idx;
  for (std::size_t i = 0; i < table.dates.size(); ++i) date_idx[table.dates[i]] = i;
  for (const Cell& c : cells) {
    if (c.missing) continue;
    const std::size_t d = date_idx[c.date];
    const std::size_t a = table.asset_index(c.asset);
    table.prices[d * table.assets.size() + a] = c.price;
  }
  return table;
}

ReturnPanel compute_log_returns(const PriceTable& table) {
  if (table.dates.size() < 2)
    throw std::invalid_argument("compute_log_returns: need at least two dates");

  ReturnPanel panel;
  panel.dates.assign(table.dates.begin() + 1, table.dates.end());
  panel.assets = table.assets;
  const std::size_t n_assets = table.assets.size();
  panel.log_returns.assign(panel.dates.size() * n_assets, kMissing);

  std::size_t defined = 0;
  for (std::size_t t = 1; t < table.dates.size(); ++t) {
    for (std::size_t a = 0; a < n_assets; ++a) {
      const double p0 = table.price(t - 1, a);
      const double p1 = table.price(t, a);
      if (is_missing(p0) || is_missing(p1)) continue;
      panel.log_returns[(t - 1) * n_assets + a] = std::log(p1 / p0);
      ++defined;
    }
  }
  if (defined == 0)
    throw std::invalid_argument("compute_log_returns: no asset has two consecutive prices");
  return panel;
}

ClassMeans class_mean_returns(const ReturnPanel& panel, const DateRange& window,
                              const AssetClassMap& classes) {
  if (window.first > window.last)
    throw std::invalid_argument("class_mean_returns: empty window");

  const std::size_t n_assets = panel.assets.size();
  std::map<AssetClass, std::pair<double, std::size_t>> pool;  // class -> (sum, count)
  bool any_window_row = false;
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    if (!window.contains(panel.dates[t])) continue;
    any_window_row = true;
    for (std::size_t a = 0; a < n_assets; ++a) {
      const double r = panel.ret(t, a);
      if (is_missing(r)) continue;
      auto& acc = pool[classes.at(panel.assets[a])];
      acc.first += r;
      acc.second += 1;
    }
  }
  if (!any_window_row)
    throw std::invalid_argument("class_mean_returns: window does not intersect the panel");

  // The volatility class sits outside the four Gaussian mean-classes; its
  // assets are forecast from their empirical distribution instead.
  ClassMeans means;
  for (int asset : panel.assets) {
    const AssetClass c = classes.at(asset);
    if (c == AssetClass::EtfVolatility) {
      means.empirical_assets.push_back(asset);
      continue;
    }
    auto it = pool.find(c);
    if (it == pool.end() || it->second.second == 0)
      throw std::invalid_argument("class_mean_returns: no returns in window for class " +
                                  to_string(c));
    means.mu_hat[asset] = it->second.first / static_cast<double>(it->second.second);
  }
  return means;
}

void write_panel_csv(const ReturnPanel& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "date,asset_id,log_return\n";
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    for (std::size_t a = 0; a < panel.assets.size(); ++a) {
      const double r = panel.ret(t, a);
      if (is_missing(r)) continue;
      out << panel.dates[t] << ',' << panel.assets[a] << ',' << csv::format_double(r) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ReturnPanel load_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open panel: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  auto header = csv::split_line(line);
  if (header.size() != 3 || header[0] != "date" || header[1] != "asset_id" ||
      header[2] != "log_return")
    throw std::runtime_error(path + ": malformed header, expected 'date,asset_id,log_return'");

  struct Cell { std::string date; int asset; double ret; };
  std::vector<Cell> cells;
  std::set<std::string> date_set;
  std::set<int> asset_set;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto f = csv::split_line(line);
    if (f.size() != 3) throw std::runtime_error(path + ": row " + std::to_string(row) + ": expected 3 fields");
    auto id = csv::parse_int(f[1]);
    auto r = csv::parse_double(f[2]);
    if (!dates::valid_iso_date(f[0]) || !id || !r)
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": malformed row");
    cells.push_back({f[0], static_cast<int>(*id), *r});
    date_set.insert(f[0]);
    asset_set.insert(static_cast<int>(*id));
  }
  if (cells.empty()) throw std::runtime_error(path + ": no data rows");

  ReturnPanel panel;
  panel.dates.assign(date_set.begin(), date_set.end());
  panel.assets.assign(asset_set.begin(), asset_set.end());
  panel.log_returns.assign(panel.dates.size() * panel.assets.size(), kMissing);
  std::map<std::string, std::size_t> date_idx;
  for (std::size_t i = 0; i < panel.dates.size(); ++i) date_idx[panel.dates[i]] = i;
  for (const Cell& c : cells)
    panel.log_returns[date_idx[c.date] * panel.assets.size() + panel.asset_index(c.asset)] = c.ret;
  return panel;
}

}  // namespace m6cast::returns
