#ifndef GMRF_MAXDET_HPP
#define GMRF_MAXDET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmrf/graph.hpp"
#include "gmrf/linalg.hpp"

namespace gmrf {

enum class InitStrategy { bipartite_sign_flip, all_x, identity_plus_adjacency, distance_power };

inline const char* to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::bipartite_sign_flip: return "bipartite-sign-flip";
    case InitStrategy::all_x: return "all-x";
    case InitStrategy::identity_plus_adjacency: return "identity-plus-adjacency";
    case InitStrategy::distance_power: return "distance-power";
  }
  return "unknown";
}

/// No starting point in Psi(G,x) was found. `attempts` lists, per strategy
/// tried, the first failing Cholesky pivot.
class Infeasible : public std::runtime_error {
 public:
  struct Attempt {
    InitStrategy strategy;
    std::size_t pivot_index;
    double pivot_value;
  };

  Infeasible(std::string what, std::vector<Attempt> attempts)
      : std::runtime_error(std::move(what)), attempts_(std::move(attempts)) {}

  const std::vector<Attempt>& attempts() const noexcept { return attempts_; }

 private:
  std::vector<Attempt> attempts_;
};

struct InitResult {
  SymMatrix matrix;
  InitStrategy strategy;
};

namespace detail {

inline void require_open_unit(double x) {
  if (!(x > -1.0 && x < 1.0)) throw std::domain_error("edge value must lie in (-1,1), got " + std::to_string(x));
}

inline SymMatrix identity_plus_adjacency(const Graph& g, double x) {
  SymMatrix m = SymMatrix::identity(g.vertex_count());
  for (const Edge& e : g.edges()) m.set(e.u, e.v, x);
  return m;
}

inline SymMatrix distance_power(const Graph& g, double x) {
  const std::size_t n = g.vertex_count();
  SymMatrix m = SymMatrix::identity(n);
  for (Vertex i = 0; i < n; ++i) {
    const auto dist = bfs_distances(g, i);
    for (Vertex j = 0; j < i; ++j)
      if (dist[j] != static_cast<std::size_t>(-1)) m.set(i, j, std::pow(x, static_cast<double>(dist[j])));
  }
  return m;
}

}  // namespace detail

/// Finds a positive definite member of Psi(G,x). Strategies in order:
/// bipartite sign flip (x<0 only), all-x, identity + x*adjacency, and
/// graph-distance powers x^d(i,j).
inline InitResult init_matrix(const Graph& g, double x) {
  detail::require_open_unit(x);
  const std::size_t n = g.vertex_count();
  std::vector<Infeasible::Attempt> attempts;

  if (x < 0.0) {
    if (auto parts = bipartition(g)) {
      // Conjugating by the +-1 diagonal of a bipartition maps Psi(G,|x|) onto Psi(G,x).
      std::vector<double> sign(n, 1.0);
      for (Vertex v : parts->right) sign[v] = -1.0;
      SymMatrix m = SymMatrix::constant_correlation(SymMatrix(n).index_set(), -x);
      for (Vertex i = 0; i < n; ++i)
        for (Vertex j = 0; j < i; ++j) m.set(i, j, sign[i] * sign[j] * m(i, j));
      return {std::move(m), InitStrategy::bipartite_sign_flip};
    }
  }

  auto attempt = [&](InitStrategy s, SymMatrix m) -> std::optional<InitResult> {
    try {
      cholesky(m);
      return InitResult{std::move(m), s};
    } catch (const NotPD& e) {
      attempts.push_back({s, e.pivot_index(), e.pivot_value()});
      return std::nullopt;
    }
  };
  if (auto r = attempt(InitStrategy::all_x, SymMatrix::constant_correlation(SymMatrix(n).index_set(), x))) return *r;
  if (auto r = attempt(InitStrategy::identity_plus_adjacency, detail::identity_plus_adjacency(g, x))) return *r;
  if (auto r = attempt(InitStrategy::distance_power, detail::distance_power(g, x))) return *r;

  std::string what = "no positive definite starting point for '" + g.name() + "' at x=" + std::to_string(x);
  for (const auto& a : attempts)
    what += "; " + std::string(to_string(a.strategy)) + " failed at pivot " + std::to_string(a.pivot_index);
  throw Infeasible(what, std::move(attempts));
}

/// Single recoupling step on non-edge (v,w): the (v,w) entry becomes
/// M_{v,Z} (M_{Z,Z})^{-1} M_{Z,w} with Z = V \ {v,w}, i.e. M is replaced by
/// the coupling of its restrictions to V\{v} and V\{w}. Dense O(n^3) path.
inline SymMatrix recouple_step(const SymMatrix& m, Edge nonedge, const Graph& g) {
  const auto [v, w] = nonedge;
  if (v == w || v >= m.dim() || w >= m.dim()) throw std::invalid_argument("recouple_step: bad vertex pair");
  if (g.has_edge(v, w)) throw std::invalid_argument("recouple_step: (v,w) is an edge");
  cholesky(m);
  std::vector<std::size_t> z;
  for (std::size_t i = 0; i < m.dim(); ++i)
    if (i != v && i != w) z.push_back(i);

  double value = 0.0;
  if (!z.empty()) {
    const CholeskyFactor cz = cholesky(m.principal(z));
    std::vector<double> col(z.size());
    for (std::size_t p = 0; p < z.size(); ++p) col[p] = m(z[p], w);
    cz.solve_in_place(col);
    for (std::size_t p = 0; p < z.size(); ++p) value += m(v, z[p]) * col[p];
  }
  SymMatrix out = m;
  out.set(v, w, value);
  return out;
}

/// Progress of the recoupling iteration.
struct RecouplingState {
  SymMatrix current;
  std::size_t passes = 0;    ///< completed sweeps over all non-edges (Newton iterations included)
  std::size_t newton_steps = 0;  ///< passes spent in the Newton phase
  double residual = 0.0;     ///< max over non-edges of |(current^{-1})_{vw}|
  std::vector<double> det_history;  ///< logdet at the start and after every sweep (or every step if requested)
  double min_step_gain = 0.0;       ///< smallest per-step logdet increment seen
};

struct SigmaOptions {
  double tol = 1e-10;
  std::size_t max_passes = 10000;
  bool reverse_order = false;  ///< sweep non-edges in reverse lexicographic order
  bool record_steps = false;   ///< push a logdet entry after every step
  /// Switch to damped Newton on the free entries after this many sweeps
  /// without convergence (0 disables). Each Newton iteration counts as a pass.
  std::size_t newton_after = 1000;
};

enum class SigmaStatus { converged, no_convergence };

struct SigmaResult {
  SigmaStatus status = SigmaStatus::converged;
  SymMatrix sigma;
  RecouplingState state;
  InitStrategy init = InitStrategy::all_x;

  bool converged() const noexcept { return status == SigmaStatus::converged; }
  double logdet() const { return state.det_history.back(); }
};

class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(const std::string& what, SigmaResult best) : std::runtime_error(what), best_(std::move(best)) {}
  const SigmaResult& best() const noexcept { return best_; }

 private:
  SigmaResult best_;
};

namespace detail {

inline double nonedge_residual(const SymMatrix& precision, const std::vector<Edge>& order) {
  double r = 0.0;
  for (const Edge& e : order) r = std::max(r, std::abs(precision(e.u, e.v)));
  return r;
}

/// One damped Newton step on logdet over the free entries `order`, given
/// P = M^{-1}. Gradient 2 P_vw; Hessian -2 (P_{v v'} P_{w w'} + P_{v w'} P_{w v'}).
/// -logdet is self-concordant, so the step length 1/(1+lambda) (full step
/// once the Newton decrement lambda < 1/4) keeps M positive definite and
/// needs no objective comparison, which fails near the optimum where the
/// gain drops below rounding. Returns false if no step could be taken.
inline bool newton_step(SymMatrix& m, const SymMatrix& p, const std::vector<Edge>& order) {
  const std::size_t q = order.size();
  SymMatrix neg_hessian(q);
  std::vector<double> grad(q);
  for (std::size_t a = 0; a < q; ++a) {
    const auto [va, wa] = order[a];
    grad[a] = 2.0 * p(va, wa);
    for (std::size_t b = 0; b <= a; ++b) {
      const auto [vb, wb] = order[b];
      neg_hessian.set(a, b, 2.0 * (p(va, vb) * p(wa, wb) + p(va, wb) * p(wa, vb)));
    }
  }
  std::vector<double> dir = grad;
  try {
    cholesky(neg_hessian, 0.0).solve_in_place(dir);
  } catch (const NotPD&) {
    return false;
  }
  double decrement2 = 0.0;
  for (std::size_t a = 0; a < q; ++a) decrement2 += grad[a] * dir[a];
  const double lambda = std::sqrt(std::max(0.0, decrement2));
  for (double t = lambda < 0.25 ? 1.0 : 1.0 / (1.0 + lambda); t > 1e-12; t *= 0.5) {
    SymMatrix trial = m;
    for (std::size_t a = 0; a < q; ++a) trial.add(order[a].u, order[a].v, t * dir[a]);
    if (is_positive_definite(trial)) {
      m = std::move(trial);
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Max-determinant completion Sigma(G,x) by repeated recoupling sweeps.
///
/// The inverse is refreshed by Cholesky at the start of every sweep and
/// carried through the sweep by rank-2 Woodbury updates. Stops when every
/// non-edge entry of the inverse is below `tol` in absolute value (the
/// first-order optimality condition) or after `max_passes` sweeps. Slow
/// cases (near-singular optima) finish with damped Newton iterations; see
/// SigmaOptions::newton_after.
inline SigmaResult sigma(const Graph& g, double x, const SigmaOptions& opts = {}) {
  InitResult init = init_matrix(g, x);
  std::vector<Edge> order = non_edges(g);
  if (opts.reverse_order) std::reverse(order.begin(), order.end());

  SigmaResult result;
  result.init = init.strategy;
  RecouplingState& st = result.state;
  st.current = std::move(init.matrix);
  st.min_step_gain = std::numeric_limits<double>::infinity();

  SymMatrix& m = st.current;
  const std::size_t n = m.dim();
  std::vector<double> pv(n), pw(n), r(n), s(n);

  while (true) {
    const CholeskyFactor factor = cholesky(m);
    SymMatrix p = factor.inverse();
    const double ld = factor.logdet();
    st.det_history.push_back(ld);
    st.residual = detail::nonedge_residual(p, order);
    if (st.residual < opts.tol) break;
    if (st.passes >= opts.max_passes) {
      result.status = SigmaStatus::no_convergence;
      break;
    }

    if (opts.newton_after && st.passes >= opts.newton_after) {
      if (detail::newton_step(m, p, order)) {
        if (opts.record_steps) st.det_history.push_back(cholesky(m).logdet());
        ++st.newton_steps;
        ++st.passes;
        continue;
      }
    }

    double running = ld;
    for (const Edge& e : order) {
      const std::size_t v = e.u, w = e.v;
      const double pvv = p(v, v), pww = p(w, w), pvw = p(v, w);
      if (pvw == 0.0) continue;
      const double schur = pvv * pww - pvw * pvw;
      const double delta = pvw / schur;
      m.add(v, w, delta);

      // M' = M + delta (e_v e_w^T + e_w e_v^T). With C = delta*J and
      // P2 = P_{vw,vw}: P' = P - P U W U^T P, W = C (I + P2 C)^{-1}.
      const double t00 = 1.0 + delta * pvw, t01 = delta * pvv;
      const double t10 = delta * pww, t11 = 1.0 + delta * pvw;
      const double det_t = t00 * t11 - t01 * t10;  // = det(M')/det(M)
      // (I + P2 C)^{-1}
      const double i00 = t11 / det_t, i01 = -t01 / det_t, i10 = -t10 / det_t, i11 = t00 / det_t;
      // W = C * inv, C = [[0,delta],[delta,0]]
      const double w00 = delta * i10, w01 = delta * i11, w10 = delta * i00, w11 = delta * i01;

      for (std::size_t k = 0; k < n; ++k) {
        pv[k] = p(k, v);
        pw[k] = p(k, w);
      }
      for (std::size_t k = 0; k < n; ++k) {
        r[k] = w00 * pv[k] + w01 * pw[k];
        s[k] = w10 * pv[k] + w11 * pw[k];
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) p.add(i, j, -(pv[i] * r[j] + pw[i] * s[j]));

      const double gain = std::log(det_t);
      st.min_step_gain = std::min(st.min_step_gain, gain);
      running += gain;
      if (opts.record_steps) st.det_history.push_back(running);
    }
    ++st.passes;
  }
  if (!std::isfinite(st.min_step_gain)) st.min_step_gain = 0.0;
  result.sigma = st.current;
  return result;
}

/// ln tau(G,x) = logdet Sigma(G,x). Throws NoConvergence if the sweep cap is hit.
inline double log_tau(const Graph& g, double x, const SigmaOptions& opts = {}) {
  SigmaResult r = sigma(g, x, opts);
  if (!r.converged()) {
    const std::string what = "recoupling did not converge for '" + g.name() + "' at x=" + std::to_string(x) +
                             " (residual " + std::to_string(r.state.residual) + ")";
    throw NoConvergence(what, std::move(r));
  }
  return r.logdet();
}

inline double tau(const Graph& g, double x, const SigmaOptions& opts = {}) { return std::exp(log_tau(g, x, opts)); }

/// ln tau(G,x) - |E| ln(1-x^2), in the log domain.
inline double conjecture_margin_from_log_tau(const Graph& g, double log_tau_value, double x) {
  return log_tau_value - static_cast<double>(g.edge_count()) * std::log1p(-x * x);
}

inline double conjecture_margin(const Graph& g, double x, const SigmaOptions& opts = {}) {
  return conjecture_margin_from_log_tau(g, log_tau(g, x, opts), x);
}

/// Left side of the entropy inequality
///   D(X_V) - sum_{ij in E} D(X_i,X_j) + sum_v (deg v - 1) D(X_v)
/// for the Gaussian field with covariance M.
inline double entropy_lhs(const SymMatrix& m, const Graph& g) {
  if (m.dim() != g.vertex_count()) throw std::invalid_argument("entropy_lhs: dimension mismatch");
  double value = differential_entropy(m);
  for (const Edge& e : g.edges()) value -= differential_entropy(m.principal({e.u, e.v}));
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    const double deg_minus_one = static_cast<double>(g.degree(v)) - 1.0;
    value += deg_minus_one * differential_entropy(m.principal({v}));
  }
  return value;
}

}  // namespace gmrf

#endif  // GMRF_MAXDET_HPP
