#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "m6cast/projection.hpp"
#include "m6cast/rng.hpp"
#include "m6cast/scoring.hpp"

using namespace m6cast;
using scoring::kQuintiles;
using scoring::QuintileMatrix;
using scoring::Row5;
using scoring::SubmissionMatrix;

namespace {

QuintileMatrix random_quintiles(std::size_t n, std::uint32_t id, bool with_ties = false) {
  std::vector<double> r(n);
  for (std::size_t a = 0; a < n; ++a)
    r[a] = rng::normal_at(31, rng::Stream::perturbation, id, 1, static_cast<std::uint32_t>(a));
  if (with_ties)
    for (std::size_t a = 0; a < n; ++a) r[a] = std::round(r[a] * 4.0) / 4.0;
  return scoring::quintiles_from_returns(r);
}

}  // namespace

TEST_CASE("quintiles: strict ordering puts one asset per quintile when N=5") {
  const auto q = scoring::quintiles_from_returns({5, 4, 3, 2, 1});
  for (std::size_t a = 0; a < 5; ++a)
    for (int k = 0; k < 5; ++k)
      CHECK(q.rows[a][static_cast<std::size_t>(k)] == (static_cast<int>(a) == k ? 1.0 : 0.0));
}

TEST_CASE("quintiles: a full tie spreads mass evenly") {
  const auto q = scoring::quintiles_from_returns({7, 7, 7, 7, 7});
  for (const Row5& row : q.rows)
    for (double v : row) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("quintiles: tie straddling a boundary shares the block mass") {
  // N=10: ranks 2-3 tied across the Q1/Q2 boundary
  const std::vector<double> r = {10, 5, 5, 4, 3.5, 3, 2.5, 2, 1.5, 1};
  const auto q = scoring::quintiles_from_returns(r);
  CHECK(q.rows[1][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q.rows[1][1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q.rows[2][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q.rows[2][1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q.rows[1][2] == 0.0);
  q.validate();
}

TEST_CASE("quintiles: column sums equal N/5 regardless of ties") {
  for (std::uint32_t id = 0; id < 30; ++id) {
    const auto q = random_quintiles(20, id, /*with_ties=*/true);
    for (int k = 0; k < kQuintiles; ++k) {
      double col = 0.0;
      for (const Row5& row : q.rows) col += row[static_cast<std::size_t>(k)];
      CHECK(col == doctest::Approx(4.0).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(scoring::quintiles_from_returns({1, 2, 3}), std::invalid_argument);
}

TEST_CASE("rps: uniform submission against balanced tie-free quintiles is 0.16") {
  std::vector<double> r(100);
  std::iota(r.begin(), r.end(), 0.0);
  const auto q = scoring::quintiles_from_returns(r);
  const double score = scoring::rps(scoring::uniform_submission(100), q);
  CHECK(std::abs(score - 0.16) < 1e-15);
}

TEST_CASE("rps: perfect forecast scores 0, worst single-asset case scores 0.8") {
  const auto q = scoring::quintiles_from_returns({5, 4, 3, 2, 1});
  SubmissionMatrix m;
  m.rows = q.rows;
  CHECK(scoring::rps(m, q) == 0.0);

  SubmissionMatrix one;
  one.rows = {Row5{1, 0, 0, 0, 0}};
  QuintileMatrix truth;
  truth.rows = {Row5{0, 0, 0, 0, 1}};
  CHECK(scoring::rps(one, truth) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("rps: invariant under joint permutation, bounded by [0, 0.8], convex in M") {
  for (std::uint32_t id = 0; id < 20; ++id) {
    const std::size_t n = 10;
    const auto q = random_quintiles(n, 100 + id);
    std::vector<Row5> raw(n);
    for (std::size_t a = 0; a < n; ++a)
      for (int k = 0; k < kQuintiles; ++k)
        raw[a][static_cast<std::size_t>(k)] =
            rng::uniform_at(32, rng::Stream::perturbation, id, static_cast<std::uint32_t>(a),
                            static_cast<std::uint32_t>(k));
    SubmissionMatrix m;
    m.rows.reserve(n);
    for (const Row5& row : raw) {
      std::vector<double> v(row.begin(), row.end());
      const auto p = proj::project_simplex(v, 1.0);
      Row5 out;
      std::copy(p.begin(), p.end(), out.begin());
      m.rows.push_back(out);
    }
    const double base = scoring::rps(m, q);
    CHECK(base >= 0.0);
    CHECK(base <= 0.8 + 1e-12);

    // joint permutation
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::rotate(perm.begin(), perm.begin() + 3, perm.end());
    SubmissionMatrix mp;
    QuintileMatrix qp;
    for (std::size_t a = 0; a < n; ++a) {
      mp.rows.push_back(m.rows[perm[a]]);
      qp.rows.push_back(q.rows[perm[a]]);
    }
    CHECK(scoring::rps(mp, qp) == doctest::Approx(base).epsilon(1e-12));

    // midpoint convexity against a second feasible matrix
    const auto q2 = random_quintiles(n, 200 + id);
    SubmissionMatrix m2;
    m2.rows = q2.rows;
    SubmissionMatrix mid;
    for (std::size_t a = 0; a < n; ++a) {
      Row5 row;
      for (int k = 0; k < kQuintiles; ++k)
        row[static_cast<std::size_t>(k)] = 0.5 * (m.rows[a][static_cast<std::size_t>(k)] +
                                                  m2.rows[a][static_cast<std::size_t>(k)]);
      mid.rows.push_back(row);
    }
    CHECK(scoring::rps(mid, q) <= 0.5 * (base + scoring::rps(m2, q)) + 1e-12);
  }
}

TEST_CASE("best_constant: averaging identities") {
  const auto q = random_quintiles(10, 7);
  const auto single = scoring::best_constant({q});
  for (std::size_t a = 0; a < q.size(); ++a)
    for (int k = 0; k < kQuintiles; ++k)
      CHECK(single.rows[a][static_cast<std::size_t>(k)] ==
            q.rows[a][static_cast<std::size_t>(k)]);

  QuintileMatrix q1, q2;
  q1.rows = {Row5{1, 0, 0, 0, 0}};
  q2.rows = {Row5{0, 0, 0, 0, 1}};
  const auto mean = scoring::best_constant({q1, q2});
  CHECK(mean.rows[0][0] == 0.5);
  CHECK(mean.rows[0][4] == 0.5);
  CHECK_THROWS_AS(scoring::best_constant({}), std::invalid_argument);
}

TEST_CASE("best_constant minimises the summed RPS against random perturbations") {
  std::vector<QuintileMatrix> history;
  for (std::uint32_t t = 0; t < 12; ++t) history.push_back(random_quintiles(10, 300 + t));
  const auto best = scoring::best_constant(history);
  auto total = [&](const SubmissionMatrix& m) {
    double s = 0.0;
    for (const auto& q : history) s += scoring::rps(m, q);
    return s;
  };
  const double best_total = total(best);
  for (std::uint32_t trial = 0; trial < 2000; ++trial) {
    SubmissionMatrix cand;
    cand.rows.reserve(best.size());
    for (std::size_t a = 0; a < best.size(); ++a) {
      std::vector<double> row(kQuintiles);
      for (int k = 0; k < kQuintiles; ++k)
        row[static_cast<std::size_t>(k)] =
            best.rows[a][static_cast<std::size_t>(k)] +
            0.05 * rng::normal_at(33, rng::Stream::perturbation, trial,
                                  static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(k));
      const auto p = proj::project_simplex(row, 1.0);
      Row5 out;
      std::copy(p.begin(), p.end(), out.begin());
      cand.rows.push_back(out);
    }
    CHECK(total(cand) >= best_total - 1e-12);
  }
}

TEST_CASE("information_ratio: direct arithmetic oracle on the alternating case") {
  const int t_days = 20;
  scoring::PortfolioWeights x{{1.0}};
  std::vector<std::vector<double>> daily(t_days, std::vector<double>{0.0});
  for (int t = 0; t < t_days; ++t) daily[static_cast<std::size_t>(t)][0] = (t % 2 == 0) ? 0.01 : -0.01;

  // oracle straight from the two log values
  const double a = std::log(1.01), b = std::log(0.99);
  const double sum = 10.0 * (a + b);
  const double mean = sum / t_days;
  const double dev_a = a - mean, dev_b = b - mean;
  const double sd = std::sqrt((10.0 * dev_a * dev_a + 10.0 * dev_b * dev_b) / (t_days - 1));
  const double want = sum / sd;

  const auto ir = scoring::information_ratio(x, daily);
  REQUIRE(ir.has_value());
  CHECK(*ir == doctest::Approx(want).epsilon(1e-12));
  CHECK(sum == doctest::Approx(-0.0010).epsilon(5e-2));
}

TEST_CASE("information_ratio: degenerate and error paths") {
  scoring::PortfolioWeights x{{0.5}};
  std::vector<std::vector<double>> constant(20, std::vector<double>{0.01});
  CHECK(!scoring::information_ratio(x, constant).has_value());

  scoring::PortfolioWeights zero{{0.0}};
  CHECK_THROWS_AS(scoring::information_ratio(zero, constant), std::invalid_argument);

  scoring::PortfolioWeights big{{1.0}};
  std::vector<std::vector<double>> wipe(2, std::vector<double>{0.01});
  wipe[1][0] = -1.0;
  CHECK_THROWS_AS(scoring::information_ratio(big, wipe), std::domain_error);
}

TEST_CASE("matrix CSV round trip preserves exact values") {
  const auto q = random_quintiles(15, 77);
  std::vector<int> assets(15);
  std::iota(assets.begin(), assets.end(), 1);
  scoring::write_matrix_csv(assets, q.rows, "matrix_rt.csv");
  const auto [ids, rows] = scoring::read_matrix_csv("matrix_rt.csv");
  std::remove("matrix_rt.csv");
  CHECK(ids == assets);
  REQUIRE(rows.size() == q.rows.size());
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (int k = 0; k < kQuintiles; ++k)
      CHECK(rows[a][static_cast<std::size_t>(k)] == q.rows[a][static_cast<std::size_t>(k)]);
}
