#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "m6cast/dates.hpp"

namespace m6cast::returns {

using dates::DateRange;

/// Missing cells carry NaN; every accessor pairs with has_*().
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return v != v; }

enum class AssetClass { Stocks, EtfEquities, EtfFixedIncome, EtfCommodities, EtfVolatility };

std::string to_string(AssetClass c);
AssetClass asset_class_from_string(const std::string& name);

/// M6 universe mapping: 1-50 stocks, 51-67 and 80-99 ETF equities, 68-76 ETF
/// fixed income, 77-79 ETF commodities, 100 the volatility ETF.
AssetClass class_of_asset(int asset_id);

/// Per-asset class mapping, defaulting to class_of_asset for ids 1..100.
/// An `asset_id,class` CSV can override or extend it.
class AssetClassMap {
 public:
  AssetClassMap() = default;
  explicit AssetClassMap(std::map<int, AssetClass> overrides) : overrides_(std::move(overrides)) {}

  [[nodiscard]] AssetClass at(int asset_id) const;

 private:
  std::map<int, AssetClass> overrides_;
};

AssetClassMap load_class_map_csv(const std::string& path);

/// Adjusted close prices on an aligned date x asset grid, NaN where absent.
struct PriceTable {
  std::vector<std::string> dates;  // strictly increasing ISO dates
  std::vector<int> assets;         // ascending asset ids
  std::vector<double> prices;      // row-major [date][asset]

  [[nodiscard]] double price(std::size_t date_idx, std::size_t asset_idx) const {
    return prices[date_idx * assets.size() + asset_idx];
  }
  [[nodiscard]] std::size_t asset_index(int asset_id) const;  // throws if unknown
};

/// Daily log-returns panel; row t holds ln(p_t / p_{t-1}), NaN when either
/// endpoint price is missing.
struct ReturnPanel {
  std::vector<std::string> dates;  // one per return row (the later date)
  std::vector<int> assets;
  std::vector<double> log_returns;  // row-major [date][asset]

  [[nodiscard]] double ret(std::size_t date_idx, std::size_t asset_idx) const {
    return log_returns[date_idx * assets.size() + asset_idx];
  }
  [[nodiscard]] std::size_t asset_index(int asset_id) const;
};

/// Expected daily log-return per asset, pooled over the asset's mean-class.
/// Assets in classes outside the four mean-classes (the volatility ETF under
/// the default mapping) get no Gaussian mean and are listed as empirical.
struct ClassMeans {
  std::map<int, double> mu_hat;
  std::vector<int> empirical_assets;

  [[nodiscard]] std::optional<double> mean_for(int asset_id) const {
    auto it = mu_hat.find(asset_id);
    if (it == mu_hat.end()) return std::nullopt;
    return it->second;
  }
};

/// Load a `date,asset_id,adj_close` CSV. An empty price field marks a
/// missing cell; a row whose numeric fields do not parse is dropped and
/// reported through `diagnostics`; a non-positive price is a hard error
/// naming the offending row.
PriceTable load_price_table(const std::string& path,
                            std::vector<std::string>* diagnostics = nullptr);

ReturnPanel compute_log_returns(const PriceTable& table);

/// Pooled class means over `window`. Every asset present in the panel gets
/// either a mu_hat entry or an empirical flag.
ClassMeans class_mean_returns(const ReturnPanel& panel, const DateRange& window,
                              const AssetClassMap& classes = {});

/// Panel round trip through a `date,asset_id,log_return` CSV (missing
/// returns are omitted).
void write_panel_csv(const ReturnPanel& panel, const std::string& path);
ReturnPanel load_panel_csv(const std::string& path);

}  // namespace m6cast::returns
