#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gmrf/sphere.hpp"

using namespace gmrf;
using namespace gmrf::sphere;

namespace {

constexpr double kPi = std::numbers::pi;

SymMatrix corr2(double t) { return SymMatrix::constant_correlation({0, 1}, t); }

WeightedGraph random_weighted(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  WeightedGraph h;
  h.n = n;
  h.weight.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) h.weight[i * n + j] = h.weight[j * n + i] = u(rng);
  return h;
}

}  // namespace

TEST(MultivariateGamma, Examples) {
  EXPECT_NEAR(ln_multivariate_gamma(1, 3.7), std::lgamma(3.7), 1e-15);
  EXPECT_NEAR(ln_multivariate_gamma(2, 1.5), std::log(kPi / 2), 1e-14);
  EXPECT_NEAR(ln_multivariate_gamma(3, 2.0), std::log(kPi * kPi / 2), 1e-14);
  EXPECT_THROW(ln_multivariate_gamma(3, 0.9), std::domain_error);
}

TEST(Density, Examples) {
  for (std::size_t n : {3, 5, 10, 40}) {
    const double expect = 2 * std::lgamma(n / 2.0) - ln_multivariate_gamma(2, n / 2.0);
    EXPECT_NEAR(log_density_f(2, n, SymMatrix::identity(2)), expect, 1e-13);
  }
  for (double t : {-0.9, 0.0, 0.4, 0.99}) EXPECT_NEAR(density_f(2, 3, corr2(t)), 0.5, 1e-13);
  EXPECT_EQ(density_f(2, 5, corr2(1.2)), 0.0);
  EXPECT_THROW(density_f(3, 2, SymMatrix::identity(3)), std::invalid_argument);
}

TEST(Density, ConstantWhenNIsKPlusOne) {
  std::mt19937_64 rng(3);
  for (std::size_t k = 2; k <= 5; ++k) {
    for (int trial = 0; trial < 5; ++trial) {
      const SymMatrix m = gram_sample(k, k + 4, 11, static_cast<std::uint64_t>(trial));
      EXPECT_NEAR(log_density_f(k, k + 1, m), -elliptope_log_volume(k), 1e-12) << k;
    }
  }
}

// ln f = ln f~ - k ln g_n(1) on random correlation matrices.
TEST(Density, WishartRelation) {
  for (std::size_t k = 2; k <= 5; ++k)
    for (std::size_t n = k; n <= k + 12; n += 3)
      for (std::uint64_t idx = 0; idx < 4; ++idx) {
        const SymMatrix m = gram_sample(k, n + 2, 5, idx);
        const double lhs = log_density_f(k, n, m);
        const double rhs = wishart_identity_log_density(k, n, m) - static_cast<double>(k) * chi2_log_density(n, 1.0);
        EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs))) << k << " " << n;
      }
}

TEST(Volume, Examples) {
  EXPECT_NEAR(elliptope_log_volume(2), std::log(2.0), 1e-14);
  EXPECT_NEAR(elliptope_log_volume(3), std::log(kPi * kPi / 2), 1e-14);
  EXPECT_EQ(elliptope_log_volume(1), 0.0);
}

TEST(Volume, MonteCarloK3) {
  const McIntegral v = volume_mc(3, 400000, 17, 4);
  EXPECT_NEAR(v.estimate, kPi * kPi / 2, 4 * v.std_error);
}

TEST(AsymRatio, ApproachesOne) {
  EXPECT_EQ(asym_ratio(1, 50), 1.0);
  EXPECT_NEAR(asym_ratio(2, 1000000), 1.0, 1e-4);
  for (std::size_t k = 2; k <= 5; ++k) {
    EXPECT_NEAR(asym_ratio(k, 10000), 1.0, 1e-2) << k;
    double prev = std::abs(asym_ratio(k, 100) - 1);
    for (std::size_t n = 200; n <= 102400; n *= 2) {
      const double gap = std::abs(asym_ratio(k, n) - 1);
      EXPECT_LT(gap, prev) << k << " " << n;
      prev = gap;
    }
  }
}

TEST(CrFactorization, MatchesNormalizer) {
  for (std::size_t k = 2; k <= 6; ++k)
    for (std::size_t n = k; n <= 60; n += 7)
      EXPECT_NEAR(log_density_normalizer_factorized(k, n), log_density_normalizer(k, n), 1e-10) << k << " " << n;
}

TEST(Sampling, UnitDiagonalAndDeterministic) {
  const auto a = sample_gram(4, 6, 100, 9, 1);
  const auto b = sample_gram(4, 6, 100, 9, 3);
  for (std::size_t i = 0; i < 100; ++i) {
    for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(a.samples[i](d, d), 1.0);
    EXPECT_EQ(a.samples[i], b.samples[i]);
    EXPECT_TRUE(is_positive_definite(a.samples[i], 0.0));
  }
}

TEST(Quadrature, MatchesIncompleteBeta) {
  for (std::size_t n : {3, 10, 50, 400}) {
    for (auto [lo, hi] : {std::pair{0.25, 0.35}, std::pair{-0.5, 0.1}, std::pair{-1.0, 1.0}}) {
      // For intervals right of 0 use the mirrored lower tail; the difference
      // of two CDF values near 1 would cancel.
      const double by_beta = lo >= 0 ? marginal_cdf_k2(n, -lo) - marginal_cdf_k2(n, -hi)
                                     : marginal_cdf_k2(n, hi) - marginal_cdf_k2(n, lo);
      EXPECT_NEAR(quadrature_mu_k2(n, lo, hi) / by_beta, 1.0, 1e-10) << n << " [" << lo << "," << hi << "]";
    }
  }
}

TEST(DensityCheck, KsSmallForK2) {
  EXPECT_LT(density_check_k2(10, 100000, 1, 4).ks, 0.01);
}

TEST(DensityCheck, NormalizationK3) {
  const McIntegral z = normalization_mc(3, 6, 400000, 21, 4);
  EXPECT_NEAR(z.estimate, 1.0, 3 * z.std_error);
}

TEST(EstimateMu, FullElliptopeAndJobsIndependence) {
  const auto all = estimate_mu(3, 5, full_elliptope_predicate(), 5000, 2);
  EXPECT_EQ(all.p_hat, 1.0);
  const Predicate edge = psi_set_predicate(make_family("path:2"), 0.0, 0.5);
  const auto one = estimate_mu(3, 8, edge, 40000, 7, 1);
  const auto many = estimate_mu(3, 8, edge, 40000, 7, 5);
  EXPECT_EQ(one.hits, many.hits);
  EXPECT_LE(one.ci_low, one.p_hat);
  EXPECT_GE(one.ci_high, one.p_hat);
}

TEST(Ldp, FullSetHasZeroRate) {
  LdpOptions o;
  o.count = 2000;
  const auto rows = ldp_rate(2, {20, 40}, full_elliptope_predicate(), 0.0, o);
  for (const auto& r : rows) {
    EXPECT_EQ(r.log_rate, 0.0);
    EXPECT_EQ(r.target_rate, 0.0);
  }
}

TEST(Ldp, SupLogTauOnPath) {
  const Graph p = make_family("path:2");
  EXPECT_NEAR(sup_log_tau(p, 0.45, 0.55), 2 * std::log1p(-0.45 * 0.45), 1e-9);
  EXPECT_NEAR(sup_log_tau(make_family("path:1"), 0.25, 0.35), std::log(1 - 0.0625), 1e-12);
}

TEST(Ldp, K2IntervalAgreesWithQuadrature) {
  const Predicate a = psi_set_predicate(make_family("path:1"), 0.25, 0.35);
  LdpOptions o;
  o.count = 200000;
  o.jobs = 4;
  o.k2_interval = {{0.25, 0.35}};
  for (const auto& r : ldp_rate(2, {50}, a, std::log(1 - 0.0625), o)) {
    ASSERT_TRUE(r.quadrature_log_rate);
    EXPECT_NEAR(r.log_rate, *r.quadrature_log_rate, 3 * r.log_rate_se);
  }
}

TEST(HomDensity, Examples) {
  WeightedGraph complete;
  complete.n = 3;
  complete.weight.assign(9, 1.0);
  EXPECT_NEAR(hom_density(make_family("cycle:4"), complete), 1.0, 1e-15);

  const auto h = parse_weighted_edge_list("0 1 0.5\n1 2 1\n");
  EXPECT_NEAR(edge_density(h), 3.0 / 9.0, 1e-15);
  EXPECT_NEAR(hom_density(make_family("path:1"), h), edge_density(h), 1e-15);
}

TEST(HomDensity, SidorenkoOnKnownGraphs) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    const WeightedGraph h = random_weighted(2 + trial % 4, rng);
    EXPECT_GE(sidorenko_check(make_family("cycle:4"), h).slack, -1e-12);
    EXPECT_GE(sidorenko_check(make_family("path:2"), h).slack, -1e-12);
  }
}
