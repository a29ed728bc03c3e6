#ifndef GMRF_WITNESS_HPP
#define GMRF_WITNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmrf/graph.hpp"
#include "gmrf/linalg.hpp"

namespace gmrf {

class NotBipartite : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Layout of the lower-bound construction for a bipartite graph. Isolated
/// vertices of either class are set aside; they enter the witness as
/// independent unit-variance coordinates.
struct WitnessPlan {
  std::vector<Vertex> v1;        ///< core class, non-isolated
  std::vector<Vertex> v2;        ///< star centres in coupling order
  std::vector<std::size_t> degrees;  ///< degree of each v2 vertex, same order
  std::vector<Vertex> isolated;
  Thm2Verdict verdict;

  std::size_t a() const noexcept { return v1.size(); }
  std::size_t b() const noexcept { return v2.size(); }
};

/// Orientation follows thm2_condition's best choice. Star centres are
/// coupled in ascending vertex order unless `descending` is set.
inline WitnessPlan make_witness_plan(const Graph& g, bool descending = false) {
  auto parts = bipartition(g);
  if (!parts) throw NotBipartite("graph '" + g.name() + "' is not bipartite");
  WitnessPlan plan;
  plan.verdict = thm2_condition(g, *parts);
  const auto& core = plan.verdict.v1_is_left ? parts->left : parts->right;
  const auto& stars = plan.verdict.v1_is_left ? parts->right : parts->left;
  for (Vertex v : core) (g.degree(v) == 0 ? plan.isolated : plan.v1).push_back(v);
  for (Vertex v : stars) {
    if (g.degree(v) == 0) {
      plan.isolated.push_back(v);
    } else {
      plan.v2.push_back(v);
      plan.degrees.push_back(g.degree(v));
    }
  }
  if (descending) {
    std::reverse(plan.v2.begin(), plan.v2.end());
    std::reverse(plan.degrees.begin(), plan.degrees.end());
  }
  std::sort(plan.isolated.begin(), plan.isolated.end());
  return plan;
}

/// Unit diagonal, x^2 elsewhere, over the given core vertices.
inline SymMatrix base_matrix(const std::vector<Vertex>& core, double x) {
  return SymMatrix::constant_correlation(core, x * x);
}

/// Matrix over {v} + N(v): x between v and each neighbour, x^2 between
/// distinct neighbours. Row 0 is v.
inline SymMatrix star_matrix(Vertex v, const std::vector<Vertex>& neighbors, double x) {
  std::vector<Vertex> labels{v};
  labels.insert(labels.end(), neighbors.begin(), neighbors.end());
  SymMatrix m = SymMatrix::constant_correlation(labels, x * x);
  for (std::size_t i = 1; i < labels.size(); ++i) m.set(0, i, x);
  return m;
}

namespace detail {

inline void require_witness_x(double x) {
  if (!(x > -1.0 && x < 1.0)) throw std::domain_error("witness requires x in (-1,1), got " + std::to_string(x));
}

}  // namespace detail

/// Witness member of Psi(G,x): M_0 coupled successively with every star
/// matrix M^v, then padded with isolated vertices. Rows are in vertex order.
inline SymMatrix witness_matrix(const Graph& g, double x, const WitnessPlan& plan) {
  detail::require_witness_x(x);
  const std::size_t n = g.vertex_count();
  SymMatrix m;
  if (!plan.v1.empty()) {
    m = base_matrix(plan.v1, x);
    for (Vertex v : plan.v2) m = couple(m, star_matrix(v, g.neighbors(v), x));
  }

  SymMatrix full = SymMatrix::identity(n);
  const auto& labels = m.index_set();
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < i; ++j) full.set(labels[i], labels[j], m(i, j));
  return full;
}

inline SymMatrix witness_matrix(const Graph& g, double x) { return witness_matrix(g, x, make_witness_plan(g)); }

/// Closed form of the witness determinant in the log domain:
///   (a+b-1) ln(1-x^2) + ln(1+(a-1)x^2) - sum_i ln(1+(d_i-1)x^2).
inline double witness_log_bound(std::size_t a, const std::vector<std::size_t>& degrees, double x) {
  if (a == 0) return 0.0;
  const double y = x * x;
  const double b = static_cast<double>(degrees.size());
  double value = (static_cast<double>(a) + b - 1.0) * std::log1p(-y) + std::log1p((static_cast<double>(a) - 1.0) * y);
  for (std::size_t d : degrees) value -= std::log1p((static_cast<double>(d) - 1.0) * y);
  return value;
}

inline double witness_bound(const Graph& g, double x) {
  detail::require_witness_x(x);
  const WitnessPlan plan = make_witness_plan(g);
  return witness_log_bound(plan.a(), plan.degrees, x);
}

/// Numerical check of the closing inequality of the degree-condition proof.
struct LemmaCheck {
  bool degree_condition = false;  ///< sum d(d-1) >= a(a-1)
  bool eq2_holds = true;          ///< a(a-1)/(1+(a-1)y) <= sum d(d-1)/(1+(d-1)y) on the grid
  bool bound_holds = true;        ///< log bound >= |E| ln(1-y) on the grid (x = sqrt y)
  double worst_eq2_slack = 0.0;
  double worst_bound_slack = 0.0;

  /// The lemma's claim: the degree condition implies both inequalities.
  bool ok() const noexcept { return !degree_condition || (eq2_holds && bound_holds); }
};

inline LemmaCheck lemma_check(std::size_t a, std::size_t b, const std::vector<std::size_t>& degrees,
                              const std::vector<double>& y_grid, double slack = 1e-12) {
  if (degrees.size() != b) throw std::invalid_argument("lemma_check: expected b degrees");
  LemmaCheck out;
  long long pair_sum = 0;
  std::size_t edges = 0;
  for (std::size_t d : degrees) {
    if (d == 0 || d > a) throw std::invalid_argument("lemma_check: degrees must lie in [1,a]");
    pair_sum += static_cast<long long>(d) * (static_cast<long long>(d) - 1);
    edges += d;
  }
  const auto ad = static_cast<double>(a);
  out.degree_condition = pair_sum >= static_cast<long long>(a) * (static_cast<long long>(a) - 1);
  out.worst_eq2_slack = out.worst_bound_slack = std::numeric_limits<double>::infinity();
  for (double y : y_grid) {
    if (!(y > 0.0 && y < 1.0)) throw std::invalid_argument("lemma_check: y must lie in (0,1)");
    double rhs = 0.0;
    for (std::size_t d : degrees) {
      const auto dd = static_cast<double>(d);
      rhs += dd * (dd - 1.0) / (1.0 + (dd - 1.0) * y);
    }
    const double lhs = ad * (ad - 1.0) / (1.0 + (ad - 1.0) * y);
    out.worst_eq2_slack = std::min(out.worst_eq2_slack, rhs - lhs);
    if (rhs - lhs < -slack * std::max(1.0, std::abs(lhs))) out.eq2_holds = false;

    const double x = std::sqrt(y);
    const double bound_slack = witness_log_bound(a, degrees, x) - static_cast<double>(edges) * std::log1p(-y);
    out.worst_bound_slack = std::min(out.worst_bound_slack, bound_slack);
    if (bound_slack < -slack) out.bound_holds = false;
  }
  return out;
}

}  // namespace gmrf

#endif  // GMRF_WITNESS_HPP
