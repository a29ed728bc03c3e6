#ifndef GMRF_SPHERE_HPP
#define GMRF_SPHERE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "gmrf/graph.hpp"
#include "gmrf/linalg.hpp"
#include "gmrf/maxdet.hpp"
#include "gmrf/random.hpp"

namespace gmrf::sphere {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// ln Gamma_k(a) = k(k-1)/4 ln pi + sum_{j=1..k} ln Gamma(a + (1-j)/2).
inline double ln_multivariate_gamma(std::size_t k, double a) {
  if (!(a > (static_cast<double>(k) - 1.0) / 2.0))
    throw std::domain_error("ln_multivariate_gamma: need a > (k-1)/2");
  const auto kd = static_cast<double>(k);
  double s = kd * (kd - 1.0) / 4.0 * std::log(std::numbers::pi);
  for (std::size_t j = 1; j <= k; ++j) s += std::lgamma(a + (1.0 - static_cast<double>(j)) / 2.0);
  return s;
}

/// ln c_{k,n} = k ln Gamma(n/2) - ln Gamma_k(n/2), the density of the
/// k x k Gram matrix of n-dimensional unit vectors at the identity.
inline double log_density_normalizer(std::size_t k, std::size_t n) {
  const double half_n = static_cast<double>(n) / 2.0;
  return static_cast<double>(k) * std::lgamma(half_n) - ln_multivariate_gamma(k, half_n);
}

/// ln c_r with c_r = pi^{-1/2} Gamma(r/2) / Gamma((r-1)/2).
inline double log_c_r(std::size_t r) {
  const auto rd = static_cast<double>(r);
  return -0.5 * std::log(std::numbers::pi) + std::lgamma(rd / 2.0) - std::lgamma((rd - 1.0) / 2.0);
}

/// ln c_{k,n} as the telescoped product c_n^{k-1} c_{n-1}^{k-2} ... c_{n-k+2}.
inline double log_density_normalizer_factorized(std::size_t k, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i + 2 <= k; ++i) s += static_cast<double>(k - 1 - i) * log_c_r(n - i);
  return s;
}

namespace detail {

inline void check_kn(std::size_t k, std::size_t n) {
  if (k < 2) throw std::invalid_argument("need k >= 2");
  if (n < k) throw std::invalid_argument("need n >= k (got k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
}

inline bool unit_diagonal(const SymMatrix& m, double tol = 1e-12) {
  for (std::size_t i = 0; i < m.dim(); ++i)
    if (std::abs(m(i, i) - 1.0) > tol) return false;
  return true;
}

}  // namespace detail

/// Log of the Gram-matrix density
///   f_{k,n}(M) = det(M)^{(n-k-1)/2} Gamma(n/2)^k / Gamma_k(n/2)
/// on the elliptope; -inf outside it (and on its null boundary).
inline double log_density_f(std::size_t k, std::size_t n, const SymMatrix& m) {
  detail::check_kn(k, n);
  if (m.dim() != k) throw std::invalid_argument("log_density_f: matrix is not k x k");
  if (!detail::unit_diagonal(m)) return kNegInf;
  double ld = 0.0;
  try {
    ld = cholesky(m, 0.0).logdet();
  } catch (const NotPD&) {
    return kNegInf;
  }
  const double exponent = (static_cast<double>(n) - static_cast<double>(k) - 1.0) / 2.0;
  return (exponent == 0.0 ? 0.0 : exponent * ld) + log_density_normalizer(k, n);
}

inline double density_f(std::size_t k, std::size_t n, const SymMatrix& m) { return std::exp(log_density_f(k, n, m)); }

/// Wishart(n, I_k) log density at a positive definite M.
inline double wishart_identity_log_density(std::size_t k, std::size_t n, const SymMatrix& m) {
  detail::check_kn(k, n);
  if (m.dim() != k) throw std::invalid_argument("wishart: matrix is not k x k");
  const double ld = cholesky(m, 0.0).logdet();
  double trace = 0.0;
  for (std::size_t i = 0; i < k; ++i) trace += m(i, i);
  const auto kd = static_cast<double>(k), nd = static_cast<double>(n);
  return (nd - kd - 1.0) / 2.0 * ld - trace / 2.0 - kd * nd / 2.0 * std::numbers::ln2 -
         ln_multivariate_gamma(k, nd / 2.0);
}

/// ln g_n(x) for the chi-square law with n degrees of freedom.
inline double chi2_log_density(std::size_t n, double x) {
  const double h = static_cast<double>(n) / 2.0;
  return (h - 1.0) * std::log(x) - x / 2.0 - h * std::numbers::ln2 - std::lgamma(h);
}

/// ln Vol(M_k) = ln Gamma_k((k+1)/2) - k ln Gamma((k+1)/2).
inline double elliptope_log_volume(std::size_t k) {
  if (k == 0) throw std::invalid_argument("elliptope_log_volume: k must be positive");
  const double a = (static_cast<double>(k) + 1.0) / 2.0;
  return ln_multivariate_gamma(k, a) - static_cast<double>(k) * std::lgamma(a);
}

/// c_{k,n} / (n/(2 pi))^{k(k-1)/4}, evaluated in the log domain.
inline double asym_ratio(std::size_t k, std::size_t n) {
  if (k <= 1) return 1.0;
  const auto kd = static_cast<double>(k);
  const double log_ratio =
      log_density_normalizer(k, n) - kd * (kd - 1.0) / 4.0 * std::log(static_cast<double>(n) / (2.0 * std::numbers::pi));
  return std::exp(log_ratio);
}

// ---------------------------------------------------------------------------
// Sampling

/// Gram matrix of k independent uniform unit vectors in R^n, drawn from
/// Stream(seed, index). Each vector is a normalized standard normal vector.
inline SymMatrix gram_sample(std::size_t k, std::size_t n, std::uint64_t seed, std::uint64_t index) {
  Stream rng(seed, index);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(k * n);
  for (std::size_t i = 0; i < k; ++i) {
    double norm2 = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double z = normal(rng);
      v[i * n + c] = z;
      norm2 += z * z;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t c = 0; c < n; ++c) v[i * n + c] *= inv;
  }
  SymMatrix g(k);
  for (std::size_t i = 0; i < k; ++i) {
    g.set(i, i, 1.0);
    for (std::size_t j = 0; j < i; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += v[i * n + c] * v[j * n + c];
      g.set(i, j, s);
    }
  }
  return g;
}

namespace detail {

inline constexpr std::size_t kBlock = 1 << 14;

/// Evaluates `block_fn(begin, end)` over fixed-size index blocks and
/// returns the per-block results in block order. The block layout does not
/// depend on `jobs`, so reductions over the result are reproducible.
template <class R, class F>
std::vector<R> run_blocks(std::size_t count, std::size_t jobs, F block_fn) {
  const std::size_t blocks = (count + kBlock - 1) / kBlock;
  std::vector<R> out(blocks);
  jobs = std::max<std::size_t>(1, std::min(jobs, blocks));
  auto worker = [&](std::size_t first) {
    for (std::size_t b = first; b < blocks; b += jobs) out[b] = block_fn(b * kBlock, std::min(count, (b + 1) * kBlock));
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker, t);
    for (auto& th : threads) th.join();
  }
  return out;
}

}  // namespace detail

struct GramSampleBatch {
  std::size_t k = 0, n = 0, count = 0;
  std::uint64_t seed = 0;
  std::vector<SymMatrix> samples;
};

inline GramSampleBatch sample_gram(std::size_t k, std::size_t n, std::size_t count, std::uint64_t seed,
                                   std::size_t jobs = 1) {
  detail::check_kn(k, n);
  GramSampleBatch batch{k, n, count, seed, std::vector<SymMatrix>(count)};
  detail::run_blocks<int>(count, jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) batch.samples[i] = gram_sample(k, n, seed, i);
    return 0;
  });
  return batch;
}

/// A set of k x k matrices, given as a membership test plus a label for reports.
struct Predicate {
  std::function<bool(const SymMatrix&)> test;
  std::string description;
};

/// Psi(G,[lo,hi]): every edge entry lies in [lo,hi]. Samples are PSD with
/// unit diagonal by construction, so only edges are checked.
inline Predicate psi_set_predicate(const Graph& g, double lo, double hi) {
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  Predicate p;
  p.test = [edges, lo, hi](const SymMatrix& m) {
    for (const Edge& e : edges) {
      const double v = m(e.u, e.v);
      if (v < lo || v > hi) return false;
    }
    return true;
  };
  p.description = "Psi(" + (g.name().empty() ? std::string("G") : g.name()) + ",[" + std::to_string(lo) + "," +
                  std::to_string(hi) + "])";
  return p;
}

inline Predicate full_elliptope_predicate() {
  return {[](const SymMatrix&) { return true; }, "elliptope"};
}

struct MuEstimate {
  std::size_t hits = 0;
  std::size_t count = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;   ///< Wilson 95% score interval
  double ci_high = 0.0;
  double std_error = 0.0;
};

inline MuEstimate wilson_estimate(std::size_t hits, std::size_t count) {
  MuEstimate e;
  e.hits = hits;
  e.count = count;
  if (count == 0) return e;
  const double nn = static_cast<double>(count);
  const double p = static_cast<double>(hits) / nn;
  const double z = 1.959963984540054;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  e.p_hat = p;
  e.ci_low = std::max(0.0, centre - half);
  e.ci_high = std::min(1.0, centre + half);
  e.std_error = std::sqrt(p * (1.0 - p) / nn);
  return e;
}

/// Monte Carlo estimate of mu_{k,n}(A).
inline MuEstimate estimate_mu(std::size_t k, std::size_t n, const Predicate& a, std::size_t count, std::uint64_t seed,
                              std::size_t jobs = 1) {
  detail::check_kn(k, n);
  const auto partial = detail::run_blocks<std::size_t>(count, jobs, [&](std::size_t begin, std::size_t end) {
    std::size_t hits = 0;
    for (std::size_t i = begin; i < end; ++i) hits += a.test(gram_sample(k, n, seed, i)) ? 1 : 0;
    return hits;
  });
  std::size_t hits = 0;
  for (std::size_t h : partial) hits += h;
  return wilson_estimate(hits, count);
}

// ---------------------------------------------------------------------------
// Exact k = 2 marginal

/// ln mu_{2,n}({t in [lo,hi]}) by adaptive Gauss-Kronrod quadrature of
/// c (1-t^2)^{(n-3)/2}, with the integrand rescaled by its value at the
/// interval's peak.
inline double quadrature_log_mu_k2(std::size_t n, double lo, double hi) {
  detail::check_kn(2, n);
  lo = std::max(lo, -1.0);
  hi = std::min(hi, 1.0);
  if (!(lo < hi)) return kNegInf;
  const double e = (static_cast<double>(n) - 3.0) / 2.0;
  double peak_log = 0.0;
  if (e > 0.0) {
    const double t_star = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
    peak_log = e * std::log1p(-t_star * t_star);
  }
  auto integrand = [&](double t) {
    const double base = std::log1p(-t * t);
    return std::exp(e * base - peak_log);
  };
  double error = 0.0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 20, 1e-14, &error);
  return log_density_normalizer(2, n) + peak_log + std::log(integral);
}

inline double quadrature_mu_k2(std::size_t n, double lo, double hi) { return std::exp(quadrature_log_mu_k2(n, lo, hi)); }

/// CDF of the off-diagonal entry for k = 2: (1+t)/2 ~ Beta((n-1)/2, (n-1)/2).
inline double marginal_cdf_k2(std::size_t n, double t) {
  if (t <= -1.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = (static_cast<double>(n) - 1.0) / 2.0;
  return boost::math::ibeta(a, a, (1.0 + t) / 2.0);
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double nn = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / nn - f, f - static_cast<double>(i) / nn});
  }
  return d;
}

struct KsReport {
  std::size_t n = 0, count = 0;
  std::uint64_t seed = 0;
  double ks = 0.0;
};

/// KS statistic of the sampled k = 2 off-diagonal against its exact law.
inline KsReport density_check_k2(std::size_t n, std::size_t count, std::uint64_t seed, std::size_t jobs = 1) {
  detail::check_kn(2, n);
  std::vector<double> t(count);
  detail::run_blocks<int>(count, jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) t[i] = gram_sample(2, n, seed, i)(1, 0);
    return 0;
  });
  return {n, count, seed, ks_statistic(std::move(t), [n](double v) { return marginal_cdf_k2(n, v); })};
}

struct McIntegral {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

namespace detail {

/// Mean of 2^m * h(U) for U uniform on the cube [-1,1]^m of off-diagonal
/// entries, m = k(k-1)/2.
template <class H>
McIntegral cube_integral(std::size_t k, std::size_t count, std::uint64_t seed, std::size_t jobs, H h) {
  struct Sums {
    double s = 0.0, s2 = 0.0;
  };
  const std::size_t m = k * (k - 1) / 2;
  const double scale = std::ldexp(1.0, static_cast<int>(m));
  const auto partial = run_blocks<Sums>(count, jobs, [&](std::size_t begin, std::size_t end) {
    Sums acc;
    SymMatrix mat = SymMatrix::identity(k);
    for (std::size_t idx = begin; idx < end; ++idx) {
      Stream rng(seed, idx);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < i; ++j) mat.set(i, j, 2.0 * rng.uniform01() - 1.0);
      const double v = scale * h(mat);
      acc.s += v;
      acc.s2 += v * v;
    }
    return acc;
  });
  double s = 0.0, s2 = 0.0;
  for (const auto& p : partial) {
    s += p.s;
    s2 += p.s2;
  }
  const double nn = static_cast<double>(count);
  const double mean = s / nn;
  const double var = std::max(0.0, s2 / nn - mean * mean);
  return {mean, std::sqrt(var / nn), count};
}

}  // namespace detail

/// Monte Carlo value of the integral of f_{k,n} over the elliptope, by
/// uniform sampling of the cube that contains it. Should be 1.
inline McIntegral normalization_mc(std::size_t k, std::size_t n, std::size_t count, std::uint64_t seed,
                                   std::size_t jobs = 1) {
  detail::check_kn(k, n);
  return detail::cube_integral(k, count, seed, jobs, [&](const SymMatrix& m) { return density_f(k, n, m); });
}

/// Monte Carlo volume of the elliptope by cube rejection.
inline McIntegral volume_mc(std::size_t k, std::size_t count, std::uint64_t seed, std::size_t jobs = 1) {
  if (k < 2) throw std::invalid_argument("volume_mc: need k >= 2");
  return detail::cube_integral(k, count, seed, jobs,
                               [](const SymMatrix& m) { return is_positive_definite(m, 0.0) ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Large deviations

struct LdpRow {
  std::size_t n = 0;
  MuEstimate mc;
  double log_rate = kNegInf;      ///< n^{-1} ln p_hat (-inf with no hits)
  double log_rate_se = 0.0;       ///< delta-method standard error of log_rate
  double target_rate = 0.0;       ///< (1/2) sup ln det over A
  std::optional<double> quadrature_log_rate;  ///< k = 2 interval sets only
};

struct LdpOptions {
  std::size_t count = 100000;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  /// For k = 2 sets of the form {t in [lo,hi]}: adds the quadrature column.
  std::optional<std::pair<double, double>> k2_interval;
};

/// Empirical n^{-1} ln mu_{k,n}(A) against (1/2) sup_{M in A} ln det M.
inline std::vector<LdpRow> ldp_rate(std::size_t k, const std::vector<std::size_t>& n_sequence, const Predicate& a,
                                    double sup_log_det, const LdpOptions& opts = {}) {
  std::vector<LdpRow> rows;
  for (std::size_t n : n_sequence) {
    LdpRow row;
    row.n = n;
    row.mc = estimate_mu(k, n, a, opts.count, opts.seed, opts.jobs);
    const double nd = static_cast<double>(n);
    if (row.mc.hits > 0) {
      row.log_rate = std::log(row.mc.p_hat) / nd;
      row.log_rate_se = row.mc.std_error / row.mc.p_hat / nd;
    }
    row.target_rate = 0.5 * sup_log_det;
    if (k == 2 && opts.k2_interval)
      row.quadrature_log_rate = quadrature_log_mu_k2(n, opts.k2_interval->first, opts.k2_interval->second) / nd;
    rows.push_back(row);
  }
  return rows;
}

/// sup of ln tau(G,x') over the grid lo, lo+step, ..., hi. Approximates
/// ln ||1_A det||_inf for A = Psi(G,[lo,hi]) by continuity of tau.
inline double sup_log_tau(const Graph& g, double lo, double hi, double step = 0.01, const SigmaOptions& opts = {}) {
  if (!(lo <= hi) || !(step > 0.0)) throw std::invalid_argument("sup_log_tau: bad grid");
  const auto points = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  double best = kNegInf;
  for (std::size_t i = 0; i <= points + 1; ++i) {
    const double x = std::min(hi, lo + static_cast<double>(i) * step);
    if (x > -1.0 && x < 1.0) best = std::max(best, log_tau(g, x, opts));
    if (x >= hi) break;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Homomorphism densities

/// t(G,H): average over all maps V(G) -> V(H) of the product of H's edge
/// weights along the images of G's edges. Exact enumeration.
inline double hom_density(const Graph& g, const WeightedGraph& h) {
  if (h.n == 0) throw std::invalid_argument("hom_density: H has no vertices");
  if (h.n > 8) throw std::invalid_argument("hom_density: H is limited to 8 vertices");
  const std::size_t k = g.vertex_count();
  const double maps = std::pow(static_cast<double>(h.n), static_cast<double>(k));
  if (maps > 1e9) throw std::invalid_argument("hom_density: too many maps to enumerate");
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  std::vector<std::size_t> phi(k, 0);
  double total = 0.0;
  while (true) {
    double prod = 1.0;
    for (const Edge& e : edges) {
      prod *= h(phi[e.u], phi[e.v]);
      if (prod == 0.0) break;
    }
    total += prod;
    std::size_t pos = 0;
    while (pos < k && ++phi[pos] == h.n) phi[pos++] = 0;
    if (pos == k) break;
  }
  return total / maps;
}

/// t(e,H) = (sum over ordered pairs of weights) / |V(H)|^2.
inline double edge_density(const WeightedGraph& h) {
  double s = 0.0;
  for (double w : h.weight) s += w;
  return s / static_cast<double>(h.n * h.n);
}

struct SidorenkoCheck {
  double t_g = 0.0;
  double t_e = 0.0;
  double slack = 0.0;  ///< t(G,H) - t(e,H)^{|E(G)|}
  double log_margin = 0.0;  ///< ln t(G,H) - |E(G)| ln t(e,H); 0 when both vanish
};

inline SidorenkoCheck sidorenko_check(const Graph& g, const WeightedGraph& h) {
  SidorenkoCheck c;
  c.t_g = hom_density(g, h);
  c.t_e = edge_density(h);
  const double m = static_cast<double>(g.edge_count());
  c.slack = c.t_g - std::pow(c.t_e, m);
  if (c.t_e > 0.0)
    c.log_margin = (c.t_g > 0.0 ? std::log(c.t_g) : kNegInf) - m * std::log(c.t_e);
  return c;
}

}  // namespace gmrf::sphere

#endif  // GMRF_SPHERE_HPP
