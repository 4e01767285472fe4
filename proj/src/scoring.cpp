#include "m6cast/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "m6cast/csv.hpp"

namespace m6cast::scoring {

namespace {

void check_row_simplex(const Row5& row, double tol, const char* what) {
  double sum = 0.0;
  for (double v : row) {
    if (!std::isfinite(v) || v < -tol || v > 1.0 + tol)
      throw std::invalid_argument(std::string(what) + ": entry outside [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol)
    throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
}

}  // namespace

void QuintileMatrix::validate() const {
  for (const Row5& row : rows) check_row_simplex(row, 1e-9, "QuintileMatrix");
  if (!rows.empty() && rows.size() % kQuintiles == 0) {
    const double expected = static_cast<double>(rows.size()) / kQuintiles;
    for (int k = 0; k < kQuintiles; ++k) {
      double col = 0.0;
      for (const Row5& row : rows) col += row[static_cast<std::size_t>(k)];
      if (std::abs(col - expected) > 1e-9)
        throw std::invalid_argument("QuintileMatrix: column sum != N/5");
    }
  }
}

void SubmissionMatrix::validate(double tol) const {
  for (const Row5& row : rows) check_row_simplex(row, tol, "SubmissionMatrix");
}

double PortfolioWeights::gross() const {
  double g = 0.0;
  for (double v : w) g += std::abs(v);
  return g;
}

SubmissionMatrix uniform_submission(std::size_t n_assets) {
  SubmissionMatrix m;
  m.rows.assign(n_assets, Row5{0.2, 0.2, 0.2, 0.2, 0.2});
  return m;
}

QuintileMatrix quintiles_from_returns(const std::vector<double>& horizon_returns) {
  const std::size_t n = horizon_returns.size();
  if (n == 0 || n % kQuintiles != 0)
    throw std::invalid_argument("quintiles_from_returns: asset count must be a positive multiple of 5");
  for (double r : horizon_returns)
    if (!std::isfinite(r)) throw std::invalid_argument("quintiles_from_returns: non-finite return");

  const std::size_t block = n / kQuintiles;  // assets per quintile
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return horizon_returns[a] > horizon_returns[b];
  });

  QuintileMatrix q;
  q.rows.assign(n, Row5{0, 0, 0, 0, 0});
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && horizon_returns[order[j]] == horizon_returns[order[i]]) ++j;
    // Tied assets occupy ranks i+1..j (1-based); each rank contributes one
    // unit of mass to its quintile, shared equally across the tie group.
    Row5 mass{0, 0, 0, 0, 0};
    for (std::size_t rank = i; rank < j; ++rank) mass[rank / block] += 1.0;
    const double share = 1.0 / static_cast<double>(j - i);
    for (std::size_t pos = i; pos < j; ++pos)
      for (int k = 0; k < kQuintiles; ++k)
        q.rows[order[pos]][static_cast<std::size_t>(k)] = mass[static_cast<std::size_t>(k)] * share;
    i = j;
  }
  return q;
}

double rps(const SubmissionMatrix& m, const QuintileMatrix& q) {
  if (m.size() != q.size() || m.size() == 0)
    throw std::invalid_argument("rps: shape mismatch or empty input");
  m.validate(1e-5);  // loose enough for finite-difference probes of the score
  q.validate();
  double total = 0.0;
  for (std::size_t a = 0; a < m.size(); ++a) {
    double cum_m = 0.0, cum_q = 0.0, acc = 0.0;
    for (int k = 0; k < kQuintiles; ++k) {
      cum_m += m.rows[a][static_cast<std::size_t>(k)];
      cum_q += q.rows[a][static_cast<std::size_t>(k)];
      const double d = cum_m - cum_q;
      acc += d * d;
    }
    total += acc / kQuintiles;
  }
  return total / static_cast<double>(m.size());
}

std::vector<Row5> rps_gradient(const SubmissionMatrix& m, const QuintileMatrix& q) {
  if (m.size() != q.size() || m.size() == 0)
    throw std::invalid_argument("rps_gradient: shape mismatch or empty input");
  const double scale = 2.0 / (kQuintiles * static_cast<double>(m.size()));
  std::vector<Row5> grad(m.size(), Row5{0, 0, 0, 0, 0});
  for (std::size_t a = 0; a < m.size(); ++a) {
    double cum_m = 0.0, cum_q = 0.0;
    Row5 diffs;
    for (int k = 0; k < kQuintiles; ++k) {
      cum_m += m.rows[a][static_cast<std::size_t>(k)];
      cum_q += q.rows[a][static_cast<std::size_t>(k)];
      diffs[static_cast<std::size_t>(k)] = cum_m - cum_q;
    }
    // d rps / d M[a][i] = scale * sum_{k >= i} diffs[k]
    double tail = 0.0;
    for (int i = kQuintiles - 1; i >= 0; --i) {
      tail += diffs[static_cast<std::size_t>(i)];
      grad[a][static_cast<std::size_t>(i)] = scale * tail;
    }
  }
  return grad;
}

SubmissionMatrix best_constant(const std::vector<QuintileMatrix>& history) {
  if (history.empty()) throw std::invalid_argument("best_constant: empty history");
  const std::size_t n = history.front().size();
  SubmissionMatrix m;
  m.rows.assign(n, Row5{0, 0, 0, 0, 0});
  for (const QuintileMatrix& q : history) {
    if (q.size() != n) throw std::invalid_argument("best_constant: inconsistent history shapes");
    for (std::size_t a = 0; a < n; ++a)
      for (int k = 0; k < kQuintiles; ++k)
        m.rows[a][static_cast<std::size_t>(k)] += q.rows[a][static_cast<std::size_t>(k)];
  }
  const double inv = 1.0 / static_cast<double>(history.size());
  for (Row5& row : m.rows)
    for (double& v : row) v *= inv;
  return m;
}

std::optional<double> information_ratio(const PortfolioWeights& x,
                                        const std::vector<std::vector<double>>& daily_simple_returns) {
  const std::size_t t_days = daily_simple_returns.size();
  if (t_days < 2) throw std::invalid_argument("information_ratio: need at least two days");
  if (!(x.gross() > 0.0)) throw std::invalid_argument("information_ratio: zero portfolio");

  std::vector<double> ret(t_days);
  for (std::size_t t = 0; t < t_days; ++t) {
    const std::vector<double>& day = daily_simple_returns[t];
    if (day.size() != x.w.size())
      throw std::invalid_argument("information_ratio: day " + std::to_string(t) + " width mismatch");
    double s = 0.0;
    for (std::size_t a = 0; a < day.size(); ++a) s += x.w[a] * day[a];
    if (!(1.0 + s > 0.0))
      throw std::domain_error("information_ratio: portfolio wiped out on day " + std::to_string(t));
    ret[t] = std::log1p(s);
  }
  double sum = 0.0;
  double scale = 0.0;
  for (double r : ret) {
    sum += r;
    scale = std::max(scale, std::abs(r));
  }
  const double mean = sum / static_cast<double>(t_days);
  double ss = 0.0;
  for (double r : ret) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(t_days - 1));
  // constant daily returns leave only rounding noise in the deviations
  if (sd <= 1e-12 * std::max(scale, 1e-300)) return std::nullopt;
  return sum / sd;
}

void write_matrix_csv(const std::vector<int>& assets, const std::vector<Row5>& rows,
                      const std::string& path) {
  if (assets.size() != rows.size())
    throw std::invalid_argument("write_matrix_csv: assets/rows size mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "asset_id,q1,q2,q3,q4,q5\n";
  for (std::size_t a = 0; a < rows.size(); ++a) {
    out << assets[a];
    for (double v : rows[a]) out << ',' << csv::format_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::pair<std::vector<int>, std::vector<Row5>> read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  auto header = csv::split_line(line);
  if (header.size() != 6 || header[0] != "asset_id")
    throw std::runtime_error(path + ": expected header 'asset_id,q1,q2,q3,q4,q5'");

  std::vector<int> assets;
  std::vector<Row5> rows;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    auto f = csv::split_line(line);
    if (f.size() != 6)
      throw std::runtime_error(path + ": row " + std::to_string(row_no) + ": expected 6 fields");
    auto id = csv::parse_int(f[0]);
    if (!id) throw std::runtime_error(path + ": row " + std::to_string(row_no) + ": bad asset id");
    Row5 row;
    for (int k = 0; k < kQuintiles; ++k) {
      auto v = csv::parse_double(f[static_cast<std::size_t>(k) + 1]);
      if (!v) throw std::runtime_error(path + ": row " + std::to_string(row_no) + ": bad value");
      row[static_cast<std::size_t>(k)] = *v;
    }
    assets.push_back(static_cast<int>(*id));
    rows.push_back(row);
  }
  return {assets, rows};
}

}  // namespace m6cast::scoring
