#ifndef GMRF_CONJECTURE_HPP
#define GMRF_CONJECTURE_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "gmrf/graph.hpp"
#include "gmrf/linalg.hpp"
#include "gmrf/maxdet.hpp"
#include "gmrf/witness.hpp"

namespace gmrf {

enum class RowStatus { ok, violation, infeasible, no_convergence };

inline const char* to_string(RowStatus s) {
  switch (s) {
    case RowStatus::ok: return "ok";
    case RowStatus::violation: return "CONJECTURE VIOLATION";
    case RowStatus::infeasible: return "infeasible";
    case RowStatus::no_convergence: return "no-convergence";
  }
  return "unknown";
}

struct SweepRow {
  std::string graph;
  std::size_t vertices = 0;
  std::size_t edges = 0;
  double x = 0.0;
  std::optional<double> log_tau;
  double log_bound = 0.0;  ///< |E| ln(1-x^2)
  std::optional<double> margin;
  std::optional<double> witness_log_bound;
  std::optional<bool> thm2_holds;
  RowStatus status = RowStatus::ok;
  double residual = 0.0;
  std::size_t passes = 0;
  std::optional<double> wall_ms;
  bool rerun = false;              ///< re-solved at the tighter tolerance
  bool witness_consistent = true;  ///< witness_log_bound <= log_tau + 1e-9
};

struct SweepReport {
  std::vector<SweepRow> rows;

  std::size_t count(RowStatus s) const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [s](const SweepRow& r) { return r.status == s; }));
  }
};

struct SweepOptions {
  SigmaOptions sigma;
  std::size_t jobs = 1;
  bool mirror_bipartite = false;  ///< also evaluate bipartite graphs at -x
  bool timing = false;            ///< record wall time (makes output non-reproducible)
  double violation_threshold = -1e-8;
  double rerun_tol = 1e-13;
};

namespace detail {

inline SweepRow evaluate_row(const Graph& g, double x, bool bipartite, const SweepOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  SweepRow row;
  row.graph = g.name();
  row.vertices = g.vertex_count();
  row.edges = g.edge_count();
  row.x = x;
  row.log_bound = static_cast<double>(g.edge_count()) * std::log1p(-x * x);

  auto solve = [&](const SigmaOptions& so) {
    const SigmaResult r = sigma(g, x, so);
    row.residual = r.state.residual;
    row.passes = r.state.passes;
    if (!r.converged()) {
      row.status = RowStatus::no_convergence;
      row.log_tau.reset();
      row.margin.reset();
      return;
    }
    row.status = RowStatus::ok;
    row.log_tau = r.logdet();
    row.margin = *row.log_tau - row.log_bound;
  };

  try {
    solve(opts.sigma);
    if (row.status == RowStatus::ok && *row.margin < opts.violation_threshold) {
      SigmaOptions tight = opts.sigma;
      tight.tol = opts.rerun_tol;
      tight.max_passes = opts.sigma.max_passes * 10;
      row.rerun = true;
      solve(tight);
      if (row.status == RowStatus::ok && *row.margin < opts.violation_threshold) row.status = RowStatus::violation;
    }
  } catch (const Infeasible&) {
    row.status = RowStatus::infeasible;
  }

  if (bipartite) {
    const WitnessPlan plan = make_witness_plan(g);
    row.witness_log_bound = witness_log_bound(plan.a(), plan.degrees, x);
    row.thm2_holds = plan.verdict.holds;
    if (row.log_tau) row.witness_consistent = *row.witness_log_bound <= *row.log_tau + 1e-9;
  }
  if (opts.timing)
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

}  // namespace detail

/// Evaluates tau, the conjectured bound and (for bipartite graphs) the
/// witness bound at every (graph, x). Per-row failures are recorded, never
/// thrown. Rows are sorted by (graph name, x).
inline SweepReport sweep(const std::vector<Graph>& graphs, const std::vector<double>& x_grid,
                         const SweepOptions& opts = {}) {
  struct Task {
    std::size_t graph;
    double x;
  };
  std::vector<Task> tasks;
  std::vector<bool> bipartite(graphs.size());
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    bipartite[gi] = bipartition(graphs[gi]).has_value();
    for (double x : x_grid) {
      if (!(x > -1.0 && x < 1.0)) throw std::domain_error("sweep: x must lie in (-1,1)");
      tasks.push_back({gi, x});
      if (opts.mirror_bipartite && bipartite[gi] && x > 0.0) tasks.push_back({gi, -x});
    }
  }

  SweepReport report;
  report.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < tasks.size();) {
      const Task& task = tasks[t];
      report.rows[t] = detail::evaluate_row(graphs[task.graph], task.x, bipartite[task.graph], opts);
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, tasks.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.graph != b.graph) return a.graph < b.graph;
    return a.x < b.x;
  });
  return report;
}

/// Evenly spaced grid lo, lo+step, ..., hi (inclusive up to rounding).
inline std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("make_grid: bad range");
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= count; ++i) grid.push_back(lo + static_cast<double>(i) * step);
  return grid;
}

/// The entropy inequality's left side evaluated at Sigma(G,x) and, for
/// bipartite G, at the witness matrix.
struct EntropyRecord {
  double x = 0.0;
  double lhs_sigma = 0.0;
  double half_margin = 0.0;  ///< (ln tau - |E| ln(1-x^2)) / 2
  std::optional<double> lhs_witness;
  std::optional<double> half_witness_margin;
  bool consistent = false;   ///< lhs values match the half margins to 1e-9
  bool nonnegative = false;  ///< every lhs >= -1e-9
};

inline EntropyRecord entropy_report(const Graph& g, double x, const SigmaOptions& opts = {}) {
  EntropyRecord rec;
  rec.x = x;
  const SigmaResult s = sigma(g, x, opts);
  if (!s.converged()) throw NoConvergence("entropy_report: recoupling did not converge", s);
  rec.lhs_sigma = entropy_lhs(s.sigma, g);
  rec.half_margin = 0.5 * conjecture_margin_from_log_tau(g, s.logdet(), x);
  rec.consistent = std::abs(rec.lhs_sigma - rec.half_margin) <= 1e-9;
  rec.nonnegative = rec.lhs_sigma >= -1e-9;
  if (bipartition(g)) {
    const SymMatrix w = witness_matrix(g, x);
    rec.lhs_witness = entropy_lhs(w, g);
    rec.half_witness_margin = 0.5 * conjecture_margin_from_log_tau(g, logdet(w), x);
    rec.consistent = rec.consistent && std::abs(*rec.lhs_witness - *rec.half_witness_margin) <= 1e-9;
    rec.nonnegative = rec.nonnegative && *rec.lhs_witness >= -1e-9;
  }
  return rec;
}

}  // namespace gmrf

#endif  // GMRF_CONJECTURE_HPP
