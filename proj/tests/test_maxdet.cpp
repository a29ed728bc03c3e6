#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gmrf/linalg.hpp"
#include "gmrf/maxdet.hpp"

using namespace gmrf;

namespace {

double safe_logdet(const SymMatrix& m) {
  try {
    return logdet(m);
  } catch (const NotPD&) {
    return -std::numeric_limits<double>::infinity();
  }
}

// Independent maximizer for graphs with at most 3 free entries: a coarse
// grid over [-1,1]^k followed by coordinate-wise pattern search with a
// shrinking step. Does not use recoupling or inverses.
SymMatrix brute_force_max(const Graph& g, double x) {
  const auto free = non_edges(g);
  SymMatrix m = SymMatrix::constant_correlation(SymMatrix(g.vertex_count()).index_set(), 0.0);
  for (const Edge& e : g.edges()) m.set(e.u, e.v, x);
  const std::size_t k = free.size();
  std::vector<double> best(k, 0.0);
  double best_val = -std::numeric_limits<double>::infinity();
  const int steps = 40;
  std::vector<int> idx(k, 0);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) m.set(free[i].u, free[i].v, -1.0 + 2.0 * (idx[i] + 0.5) / steps);
    const double v = safe_logdet(m);
    if (v > best_val) {
      best_val = v;
      for (std::size_t i = 0; i < k; ++i) best[i] = m(free[i].u, free[i].v);
    }
    std::size_t pos = 0;
    while (pos < k && ++idx[pos] == steps) idx[pos++] = 0;
    if (pos == k) break;
  }
  for (std::size_t i = 0; i < k; ++i) m.set(free[i].u, free[i].v, best[i]);
  for (double h = 0.05; h > 1e-10; h *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 0; i < k; ++i)
        for (double dir : {-1.0, 1.0}) {
          const double old = m(free[i].u, free[i].v);
          m.set(free[i].u, free[i].v, old + dir * h);
          const double v = safe_logdet(m);
          if (v > best_val + 1e-15) {
            best_val = v;
            improved = true;
          } else {
            m.set(free[i].u, free[i].v, old);
          }
        }
    }
  }
  return m;
}

double c4_tau_closed_form(double x) { return 1 - 2 * x + 2 * x * x * x - x * x * x * x; }

}  // namespace

TEST(InitMatrix, CompleteGraphUsesAllX) {
  const auto r = init_matrix(make_family("complete:5"), 0.3);
  EXPECT_EQ(r.strategy, InitStrategy::all_x);
  const auto s = sigma(make_family("complete:5"), -0.2);
  EXPECT_EQ(s.state.passes, 0u);
  EXPECT_NEAR(s.sigma(0, 4), -0.2, 0.0);
}

TEST(InitMatrix, TriangleAtMinusPointNineIsInfeasible) {
  try {
    init_matrix(make_family("cycle:3"), -0.9);
    FAIL() << "expected Infeasible";
  } catch (const Infeasible& e) {
    EXPECT_EQ(e.attempts().size(), 3u);
  }
}

TEST(InitMatrix, BipartiteNegativeUsesSignFlip) {
  const Graph g = make_family("cycle:6");
  const auto r = init_matrix(g, -0.5);
  EXPECT_EQ(r.strategy, InitStrategy::bipartite_sign_flip);
  EXPECT_TRUE(is_in_psi(r.matrix, g, -0.5).member);
}

TEST(InitMatrix, FallsBackWhenAllXFails) {
  // cycle:5 at x = -0.4: all-x has eigenvalue 1 + 4x < 0, I + xA is PD.
  const Graph g = make_family("cycle:5");
  const auto r = init_matrix(g, -0.4);
  EXPECT_EQ(r.strategy, InitStrategy::identity_plus_adjacency);
  EXPECT_TRUE(is_in_psi(r.matrix, g, -0.4).member);
  EXPECT_THROW(init_matrix(g, 1.0), std::domain_error);
}

TEST(RecoupleStep, PathExample) {
  const Graph g = make_family("path:2");
  const SymMatrix m0 = SymMatrix::constant_correlation({0, 1, 2}, 0.5);
  EXPECT_NEAR(std::exp(logdet(m0)), 0.5, 1e-15);
  const SymMatrix m1 = recouple_step(m0, Edge(0, 2), g);
  EXPECT_NEAR(m1(0, 2), 0.25, 1e-15);
  EXPECT_NEAR(std::exp(logdet(m1)), 0.5625, 1e-14);
}

TEST(RecoupleStep, FixedPointAndCoupleAgreement) {
  const Graph g = make_family("cycle:5");
  const SigmaResult s = sigma(g, 0.4);
  for (const Edge& e : non_edges(g)) EXPECT_NEAR(recouple_step(s.sigma, e, g)(e.u, e.v), s.sigma(e.u, e.v), 1e-9);

  // Same step through the coupling operation.
  SymMatrix m = SymMatrix::constant_correlation({0, 1, 2, 3, 4}, 0.4);
  const Edge e(0, 2);
  const SymMatrix stepped = recouple_step(m, e, g);
  const SymMatrix glued = couple(m.restrict_to({1, 2, 3, 4}), m.restrict_to({0, 1, 3, 4})).sorted_by_label();
  EXPECT_LT(stepped.max_abs_diff(glued), 1e-12);

  // logdet identity of the step.
  const double expected =
      logdet(m.restrict_to({1, 2, 3, 4})) + logdet(m.restrict_to({0, 1, 3, 4})) - logdet(m.restrict_to({1, 3, 4}));
  EXPECT_NEAR(logdet(stepped), expected, 1e-12);
  EXPECT_GE(logdet(stepped), logdet(m));
  EXPECT_THROW(recouple_step(m, Edge(0, 1), g), std::invalid_argument);
}

TEST(Sigma, TreeIsDistancePowers) {
  for (int seed = 0; seed < 10; ++seed) {
    const Graph t = make_family("tree-random:8:" + std::to_string(seed));
    const double x = 0.1 * (seed % 9 + 1);
    const SigmaResult s = sigma(t, x);
    ASSERT_TRUE(s.converged());
    for (Vertex i = 0; i < 8; ++i) {
      const auto d = bfs_distances(t, i);
      for (Vertex j = 0; j < 8; ++j) EXPECT_NEAR(s.sigma(i, j), std::pow(x, static_cast<double>(d[j])), 1e-9);
    }
    EXPECT_NEAR(s.logdet(), 7 * std::log1p(-x * x), 1e-9);
  }
}

TEST(Sigma, FourCycleClosedForm) {
  const Graph c4 = make_family("cycle:4");
  for (int i = 0; i < 10; ++i) {
    const double x = 0.1 * i;
    const double y = std::sqrt(x * x / 2 + x / 2);
    EXPECT_NEAR(tau(c4, y), c4_tau_closed_form(x), 1e-10) << x;
  }
}

TEST(Sigma, OptimalityCertificateAndMonotonicity) {
  for (int seed = 0; seed < 15; ++seed) {
    const Graph g = make_family("gnp:9:0.4:" + std::to_string(seed));
    for (double x : {0.2, 0.7}) {
      SigmaOptions opts;
      opts.record_steps = true;
      const SigmaResult s = sigma(g, x, opts);
      ASSERT_TRUE(s.converged());
      EXPECT_TRUE(is_in_psi(s.sigma, g, x, 1e-12).member);
      const SymMatrix p = inverse(s.sigma);
      for (const Edge& e : non_edges(g)) EXPECT_LT(std::abs(p(e.u, e.v)), 1e-10);
      for (std::size_t i = 1; i < s.state.det_history.size(); ++i)
        EXPECT_GE(s.state.det_history[i], s.state.det_history[i - 1] - 1e-12);
      EXPECT_GE(s.state.min_step_gain, -1e-12);
    }
  }
}

TEST(Sigma, ScheduleIndependence) {
  for (int seed = 0; seed < 10; ++seed) {
    const Graph g = make_family("gnp:8:0.35:" + std::to_string(seed));
    SigmaOptions rev;
    rev.reverse_order = true;
    const SigmaResult a = sigma(g, 0.6);
    const SigmaResult b = sigma(g, 0.6, rev);
    EXPECT_LT(a.sigma.max_abs_diff(b.sigma), 1e-7);
  }
}

TEST(Sigma, MatchesBruteForceWithFewNonEdges) {
  // complete:5 minus up to 3 edges
  const std::vector<std::vector<Edge>> removals = {{Edge(0, 1)}, {Edge(0, 1), Edge(2, 3)},
                                                   {Edge(0, 1), Edge(1, 2), Edge(3, 4)}};
  for (const auto& removed : removals) {
    std::vector<Edge> edges;
    for (Vertex i = 0; i < 5; ++i)
      for (Vertex j = i + 1; j < 5; ++j)
        if (std::find(removed.begin(), removed.end(), Edge(i, j)) == removed.end()) edges.emplace_back(i, j);
    const Graph g(5, edges, "k5-minus");
    for (double x : {0.2, 0.5}) {
      const SymMatrix oracle = brute_force_max(g, x);
      EXPECT_LT(sigma(g, x).sigma.max_abs_diff(oracle), 1e-6) << removed.size() << " " << x;
    }
  }
}

TEST(Sigma, ComponentMultiplicativity) {
  const Graph a = make_family("cycle:5");
  const Graph b = make_family("petersen");
  const Graph u = disjoint_union(a, b);
  for (double x : {0.3, 0.8}) EXPECT_NEAR(log_tau(u, x), log_tau(a, x) + log_tau(b, x), 1e-10);
}

TEST(Sigma, EvenInXForBipartite) {
  for (const char* spec : {"cycle:6", "moebius-ladder", "hypercube:3", "complete-bipartite:3,4"}) {
    const Graph g = make_family(spec);
    for (double x : {0.25, 0.65, 0.9}) EXPECT_NEAR(log_tau(g, -x), log_tau(g, x), 1e-10) << spec;
  }
}

TEST(Sigma, NoConvergenceIsReported) {
  SigmaOptions opts;
  opts.max_passes = 1;
  opts.tol = 1e-15;
  const SigmaResult r = sigma(make_family("moebius-ladder"), 0.9, opts);
  EXPECT_FALSE(r.converged());
  EXPECT_EQ(r.state.passes, 1u);
  try {
    log_tau(make_family("moebius-ladder"), 0.9, opts);
    FAIL() << "expected NoConvergence";
  } catch (const NoConvergence& e) {
    EXPECT_GT(e.best().state.residual, 0.0);
  }
}

TEST(Margin, Examples) {
  for (double x : {0.1, 0.5, 0.9}) EXPECT_NEAR(conjecture_margin(make_family("path:1"), x), 0.0, 1e-15);
  const Graph k3 = make_family("complete:3");
  EXPECT_NEAR(tau(k3, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(conjecture_margin(k3, 0.5), std::log(0.5 / 0.421875), 1e-14);
  const Graph ml = make_family("moebius-ladder");
  for (int i = 1; i <= 19; ++i) EXPECT_GT(conjecture_margin(ml, 0.05 * i), 0.0);
}

TEST(Entropy, Examples) {
  const Graph g = make_family("petersen");
  EXPECT_NEAR(entropy_lhs(SymMatrix::identity(10), g), 0.0, 1e-12);

  const Graph t = make_family("tree-random:7:3");
  EXPECT_NEAR(entropy_lhs(sigma(t, 0.7).sigma, t), 0.0, 1e-9);

  const Graph c4 = make_family("cycle:4");
  const double x = 0.4;
  const double y = std::sqrt(x * x / 2 + x / 2);
  const double expected = 0.5 * std::log(c4_tau_closed_form(x) / std::pow(1 - y * y, 4));
  EXPECT_NEAR(entropy_lhs(sigma(c4, y).sigma, c4), expected, 1e-9);
}

TEST(Entropy, EqualsHalfMarginForHomogeneousFields) {
  for (int seed = 0; seed < 8; ++seed) {
    const Graph g = make_family("gnp:8:0.5:" + std::to_string(seed));
    const double x = 0.55;
    const SigmaResult s = sigma(g, x);
    EXPECT_NEAR(entropy_lhs(s.sigma, g), 0.5 * conjecture_margin_from_log_tau(g, s.logdet(), x), 1e-10);
    EXPECT_NEAR(differential_entropy(s.sigma),
                8 / 2.0 * std::log(2 * M_PI * M_E) + 0.5 * s.logdet(), 1e-12);
  }
}

TEST(Sigma, NewtonPhaseAgreesWithRecoupling) {
  for (const char* spec : {"moebius-ladder", "cycle:7", "gnp:9:0.4:3"})
    for (double x : {0.3, 0.7}) {
      const Graph g = make_family(spec);
      SigmaOptions early;
      early.newton_after = 2;
      SigmaOptions pure;
      pure.newton_after = 0;
      const SigmaResult a = sigma(g, x, early), b = sigma(g, x, pure);
      ASSERT_TRUE(a.converged() && b.converged()) << spec;
      EXPECT_GT(a.state.newton_steps, 0u);
      EXPECT_EQ(b.state.newton_steps, 0u);
      EXPECT_LT(a.sigma.max_abs_diff(b.sigma), 1e-8) << spec << " " << x;
      const auto& h = a.state.det_history;
      for (std::size_t i = 1; i < h.size(); ++i) EXPECT_GE(h[i], h[i - 1] - 1e-12);
    }
}

// Near-singular optimum where plain sweeps need far more than 10^4 passes.
TEST(Sigma, SlowCaseConvergesWithNewtonPhase) {
  const Graph g = make_family("gnp:10:0.35:34");
  const SigmaResult r = sigma(g, 0.98);
  ASSERT_TRUE(r.converged());
  EXPECT_LT(r.state.residual, 1e-10);
  EXPECT_GT(r.state.newton_steps, 0u);
  EXPECT_TRUE(is_in_psi(r.sigma, g, 0.98).member);
}
