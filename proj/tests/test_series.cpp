#include <gtest/gtest.h>

#include <cmath>

#include "gmrf/maxdet.hpp"
#include "gmrf/series.hpp"

using namespace gmrf;

namespace {

using S = TruncSeries<Rational>;

S poly(std::size_t order, std::initializer_list<long> c) {
  std::vector<Rational> v;
  for (long x : c) v.emplace_back(x);
  return S(order, v);
}

// Coefficients of (1 - x^2)^m through x^N via the binomial theorem.
S binomial_series(std::size_t order, std::size_t m) {
  S s(order);
  mpz_class binom = 1;
  for (std::size_t j = 0; j <= m && 2 * j <= order; ++j) {
    s[2 * j] = Rational(j % 2 ? -binom : binom);
    binom = binom * static_cast<unsigned long>(m - j) / static_cast<unsigned long>(j + 1);
  }
  return s;
}

}  // namespace

TEST(TruncSeries, GeometricInverse) {
  const S inv = inverse(poly(8, {1, -1}));
  for (std::size_t i = 0; i <= 8; ++i) EXPECT_EQ(inv[i], 1);
}

TEST(TruncSeries, Mercator) {
  const S l = log(poly(10, {1, 0, -1}));
  for (std::size_t i = 0; i <= 10; ++i) {
    if (i % 2 == 1 || i == 0)
      EXPECT_EQ(l[i], 0) << i;
    else
      EXPECT_EQ(l[i], Rational(-1, static_cast<long>(i / 2))) << i;
  }
}

TEST(TruncSeries, ProductWithInverseIsOne) {
  const S a = poly(7, {1, 1});
  EXPECT_EQ(a * inverse(a), S::constant(7, Rational(1)));
  const S b = poly(7, {3, -2, 5, 0, 1});
  EXPECT_EQ(b * inverse(b), S::constant(7, Rational(1)));
}

TEST(TruncSeries, LogOfProductIsSum) {
  const S a = poly(9, {1, 4, -3, 2});
  const S b = poly(9, {1, 0, 7, -1, 0, 5});
  EXPECT_EQ(log(a * b), log(a) + log(b));
  EXPECT_EQ(derivative(poly(4, {5, 1, 2, 0, 3})), poly(3, {1, 4, 0, 12}));
}

TEST(TruncSeries, Errors) {
  EXPECT_THROW(inverse(poly(4, {0, 1})), ZeroConstantTerm);
  EXPECT_THROW(log(poly(4, {2, 1})), std::domain_error);
  EXPECT_THROW(poly(3, {1}) + poly(4, {1}), std::invalid_argument);
}

TEST(SeriesMatrix, InverseTimesMatrixIsIdentity) {
  const std::size_t n = 4, order = 6;
  SeriesMatrix<Rational> m(n, order);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      m.at(i, j) = i == j ? poly(order, {2, static_cast<long>(i)}) : poly(order, {0, 1, static_cast<long>(i + j)});
  const auto inv = series_matrix_inverse(m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      S acc(order);
      for (std::size_t k = 0; k < n; ++k) acc += m(i, k) * inv(k, j);
      EXPECT_EQ(acc, S::constant(order, Rational(i == j ? 1 : 0))) << i << "," << j;
    }
}

TEST(TauSeries, TreesAreBinomial) {
  for (const char* spec : {"path:1", "path:4", "star:5", "tree-random:8:3", "tree-random:7:11"}) {
    const Graph g = make_family(spec);
    const TauSeries ts = tau_series(g, 10);
    EXPECT_EQ(ts.coefficients, binomial_series(10, g.edge_count())) << spec;
    EXPECT_TRUE(ts.all_integer);
    EXPECT_TRUE(local_margin_series(ts, g.edge_count()).identically_zero) << spec;
  }
}

TEST(TauSeries, CompleteGraphClosedForm) {
  for (long k = 2; k <= 5; ++k) {
    // (1 + (k-1)x)(1-x)^{k-1}
    S expect = poly(10, {1, k - 1});
    for (long i = 0; i < k - 1; ++i) expect = expect * poly(10, {1, -1});
    const TauSeries ts = tau_series(make_family("complete:" + std::to_string(k)), 10);
    EXPECT_EQ(ts.coefficients, expect) << k;
    EXPECT_EQ(ts.sweeps, 0u);
  }
}

TEST(TauSeries, Cycle4MatchesNumerics) {
  const Graph c4 = make_family("cycle:4");
  const TauSeries ts = tau_series(c4, 8);
  EXPECT_TRUE(ts.all_integer);
  EXPECT_TRUE(ts.unit_denominators);
  for (std::size_t i = 1; i <= 8; i += 2) EXPECT_EQ(ts.coefficients[i], 0);
  // The x^10 coefficient is -192, so the order-8 truncation is off by
  // about 2e-8 at x = 0.1; order 12 brings it under 1e-9.
  const TauSeries longer = tau_series(c4, 12);
  const double tail = std::abs(longer.coefficients[10].get_d()) * 1e-10;
  EXPECT_NEAR(ts.coefficients.evaluate(0.1), tau(c4, 0.1), 1.5 * tail);
  EXPECT_NEAR(longer.coefficients.evaluate(0.1), tau(c4, 0.1), 1e-9);
}

TEST(TauSeries, NumericConsistencyNearZero) {
  for (const char* spec : {"cycle:5", "moebius-ladder", "complete-bipartite:2,3", "gnp:6:0.5:4"}) {
    const Graph g = make_family(spec);
    const std::size_t order = 10;
    const TauSeries ts = tau_series(g, order);
    const double x = 0.05;
    const double tol = 5 * std::abs(ts.coefficients[order].get_d()) * std::pow(x, order) + 1e-9;
    EXPECT_NEAR(ts.coefficients.evaluate(x), tau(g, x), tol) << spec;
  }
}

TEST(TauSeries, IntegralityAndEvenness) {
  for (const char* spec : {"cycle:5", "cycle:6", "complete:4", "hypercube:3", "gnp:7:0.4:2", "gnp:8:0.5:9"}) {
    const Graph g = make_family(spec);
    const TauSeries ts = tau_series(g, 10);
    EXPECT_TRUE(ts.all_integer) << spec;
    EXPECT_TRUE(ts.unit_denominators) << spec;
    if (bipartition(g)) {
      for (std::size_t i = 1; i <= 10; i += 2) EXPECT_EQ(ts.coefficients[i], 0) << spec << " x^" << i;
    }
  }
}

TEST(TauSeries, OrderIndependentOfSweepDirection) {
  const Graph g = make_family("gnp:7:0.45:5");
  SeriesOptions rev;
  rev.reverse_order = true;
  EXPECT_EQ(tau_series(g, 8).coefficients, tau_series(g, 8, rev).coefficients);
}

// A coefficient settled at a lower order stays settled at a higher one.
TEST(TauSeries, PrefixStableAcrossOrders) {
  const Graph g = make_family("cycle:6");
  const TauSeries lo = tau_series(g, 6), hi = tau_series(g, 12);
  for (std::size_t i = 0; i <= 6; ++i) EXPECT_EQ(lo.coefficients[i], hi.coefficients[i]) << i;
}

TEST(TauSeries, ErrorPaths) {
  EXPECT_THROW(tau_series(make_family("cycle:4"), 1), std::invalid_argument);
  SeriesOptions one;
  one.max_sweeps = 1;
  EXPECT_THROW(tau_series(make_family("cycle:6"), 10, one), NoStabilization);
}

TEST(LocalMargin, TriangleFirstTermIsPositiveCubic) {
  const LocalMargin lm = local_margin_series(make_family("complete:3"), 6);
  ASSERT_TRUE(lm.first_nonzero);
  EXPECT_EQ(*lm.first_nonzero, 3u);
  EXPECT_EQ(lm.first_value, 2);
  EXPECT_TRUE(lm.positive);
}

TEST(LocalMargin, MoebiusLadderPositive) {
  const LocalMargin lm = local_margin_series(make_family("moebius-ladder"), 12);
  ASSERT_TRUE(lm.first_nonzero);
  EXPECT_TRUE(lm.positive);
}
