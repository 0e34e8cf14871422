#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "itedist/empirical_dist.hpp"
#include "itedist/rng.hpp"
#include "support/oracles.hpp"

using namespace itedist;

TEST_CASE("order rank is the ceiling of p times the count") {
  CHECK(order_rank(0.3, 10) == 3);  // 0.3 * 10 evaluates to 3.0000000000000004
  CHECK(order_rank(0.7, 10) == 7);
  CHECK(order_rank(0.975, 200) == 195);
  CHECK(order_rank(0.025, 200) == 5);
  CHECK(order_rank(0.95, 200) == 190);
  CHECK(order_rank(0.5, 7) == 4);
  CHECK(order_rank(1e-6, 7) == 1);
  CHECK(order_rank(1.0, 7) == 7);
  CHECK_THROWS_AS(order_rank(0.5, 0), std::invalid_argument);
}

TEST_CASE("ecdf basics") {
  const Ecdf e({3.0, -1.0, 0.0, 2.0, 2.0});
  CHECK(e.cdf(-2.0) == 0.0);
  CHECK(e.cdf(0.0) == 0.4);
  CHECK(e.cdf(2.0) == 0.8);
  CHECK(e.cdf(3.0) == 1.0);
  CHECK(e.prob_positive() == doctest::Approx(0.6));
  CHECK(e.quantile(0.5) == 2.0);
  CHECK(e.quantile(0.2) == -1.0);
  CHECK(e.quantile(0.21) == 0.0);
  CHECK(e.iqr() == 2.0 - 0.0);
  CHECK_THROWS_AS(Ecdf(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(Ecdf({1.0, NAN}), std::invalid_argument);
  CHECK_THROWS_AS(e.quantile(1.0), std::invalid_argument);
}

TEST_CASE("quantile identities on random data") {
  Stream rng(41);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<double> v(n);
    for (auto& x : v) x = std::round(10.0 * rng.normal()) / 4.0;  // ties on purpose
    const Ecdf e(v);
    for (std::uint64_t k = 1; k < 40; ++k) {
      const double tau = static_cast<double>(k) / 40.0;
      const double q = e.quantile(tau);
      CHECK(q == oracles::exact_order_statistic(v, k, 40));
      CHECK(q == quantile(v, tau));
      // Galois: Q(tau) = min { y in sample : F(y) >= tau }.
      double inf = INFINITY;
      for (double y : v) {
        if (e.cdf(y) >= tau - 1e-12) inf = std::min(inf, y);
      }
      CHECK(q == inf);
    }
    CHECK(e.prob_positive() == prob_positive(v));
    CHECK(e.iqr() == iqr(v));
  }
}

TEST_CASE("grids") {
  const Grid g = make_grid(GridKind::kLevels, 0.1, 0.9, 161);
  CHECK(g.size() == 161);
  CHECK(g.lower() == 0.1);
  CHECK(g.upper() == 0.9);
  CHECK(g.points[80] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::is_sorted(g.points.begin(), g.points.end()));

  CHECK(grid_size_for_step(0.04, 3.96, 0.01) == 393);
  CHECK(grid_size_for_step(0.2, 0.8, 0.01) == 61);
  CHECK(grid_size_for_step(0.05, 0.95, 0.01) == 91);

  CHECK_THROWS_AS(make_grid(GridKind::kLevels, 0.0, 0.9, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(GridKind::kLevels, 0.5, 0.4, 10), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(GridKind::kValues, 0.0, 1.0, 1), std::invalid_argument);
  CHECK_NOTHROW(make_grid(GridKind::kValues, -3.0, 7.0, 2));
  CHECK_THROWS_AS(grid_from_points(GridKind::kValues, {1.0, 1.0}), std::invalid_argument);

  const Grid d = default_level_grid();
  CHECK(d.size() == kDefaultGridSize);
  const Ecdf e({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19});
  const Grid vg = default_value_grid(e, 11);
  CHECK(vg.kind == GridKind::kValues);
  CHECK(vg.lower() == e.quantile(0.05));
  CHECK(vg.upper() == e.quantile(0.95));
  const Grid flat = default_value_grid(Ecdf({2.0, 2.0, 2.0}), 5);
  CHECK(flat.lower() < 2.0);
  CHECK(flat.upper() > 2.0);
}
