#ifndef GMRF_REPORT_HPP
#define GMRF_REPORT_HPP

// JSON / CSV emitters for the library's result types.

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"  // nlohmann/json, vendored

#include "gmrf/conjecture.hpp"
#include "gmrf/linalg.hpp"
#include "gmrf/series.hpp"
#include "gmrf/sphere.hpp"

namespace gmrf {

using nlohmann::json;

namespace detail {

/// Non-finite doubles are not representable in JSON; they become null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_number(double v) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return out.str();
}

}  // namespace detail

/// {"index_set": [...], "matrix": [[...], ...]}
inline json matrix_to_json(const SymMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"index_set", m.index_set()}, {"matrix", std::move(rows)}};
}

inline SymMatrix matrix_from_json(const json& j) {
  const auto& rows = j.at("matrix");
  const std::size_t n = rows.size();
  std::vector<double> dense;
  dense.reserve(n * n);
  for (const auto& row : rows) {
    if (row.size() != n) throw std::invalid_argument("matrix JSON is not square");
    for (const auto& v : row) dense.push_back(v.get<double>());
  }
  SymMatrix m = SymMatrix::from_dense(n, dense);
  if (j.contains("index_set")) m.set_index_set(j.at("index_set").get<std::vector<Vertex>>());
  return m;
}

/// Exact coefficients as decimal strings ("p" or "p/q").
inline json coefficients_to_json(const TruncSeries<Rational>& s) {
  json out = json::array();
  for (const auto& c : s.coefficients()) out.push_back(c.get_str());
  return out;
}

inline json row_to_json(const SweepRow& r) {
  json j;
  j["graph"] = r.graph;
  j["vertices"] = r.vertices;
  j["edges"] = r.edges;
  j["x"] = r.x;
  j["tau_log"] = detail::optional_json(r.log_tau);
  j["bound_log"] = r.log_bound;
  j["margin"] = detail::optional_json(r.margin);
  j["witness_bound_log"] = detail::optional_json(r.witness_log_bound);
  j["thm2_holds"] = detail::optional_json(r.thm2_holds);
  j["status"] = to_string(r.status);
  j["residual"] = r.residual;
  j["passes"] = r.passes;
  j["wall_ms"] = detail::optional_json(r.wall_ms);
  j["rerun"] = r.rerun;
  j["witness_consistent"] = r.witness_consistent;
  return j;
}

inline json sweep_to_json(const SweepReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) rows.push_back(row_to_json(r));
  return json{{"rows", std::move(rows)},
              {"violations", report.count(RowStatus::violation)},
              {"infeasible", report.count(RowStatus::infeasible)},
              {"no_convergence", report.count(RowStatus::no_convergence)}};
}

inline const std::vector<std::string>& sweep_csv_columns() {
  static const std::vector<std::string> cols{"graph",    "vertices",  "edges",       "x",
                                             "tau_log",  "bound_log", "margin",      "witness_bound_log",
                                             "status",   "residual",  "passes",      "wall_ms"};
  return cols;
}

inline std::string sweep_to_csv(const SweepReport& report) {
  std::ostringstream out;
  const auto& cols = sweep_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? detail::csv_number(*v) : std::string(); };
  for (const auto& r : report.rows) {
    out << detail::csv_field(r.graph) << ',' << r.vertices << ',' << r.edges << ',' << detail::csv_number(r.x) << ',' << opt(r.log_tau)
        << ',' << detail::csv_number(r.log_bound) << ',' << opt(r.margin) << ',' << opt(r.witness_log_bound) << ','
        << to_string(r.status) << ',' << detail::csv_number(r.residual) << ',' << r.passes << ',' << opt(r.wall_ms)
        << '\n';
  }
  return out.str();
}

/// {k, n, count, seed, predicate, p_hat, ci_low, ci_high, log_rate, target_rate}
inline json mu_report_to_json(std::size_t k, std::size_t n, std::uint64_t seed, const std::string& predicate,
                              const sphere::MuEstimate& e, double log_rate, double target_rate) {
  return json{{"k", k},
              {"n", n},
              {"count", e.count},
              {"seed", seed},
              {"predicate", predicate},
              {"p_hat", e.p_hat},
              {"ci_low", e.ci_low},
              {"ci_high", e.ci_high},
              {"log_rate", detail::number_or_null(log_rate)},
              {"target_rate", detail::number_or_null(target_rate)}};
}

inline json ldp_to_json(std::size_t k, std::uint64_t seed, const std::string& predicate,
                        const std::vector<sphere::LdpRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json j = mu_report_to_json(k, r.n, seed, predicate, r.mc, r.log_rate, r.target_rate);
    j["hits"] = r.mc.hits;
    j["log_rate_se"] = r.log_rate_se;
    j["quadrature_log_rate"] = r.quadrature_log_rate ? detail::number_or_null(*r.quadrature_log_rate) : json(nullptr);
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace gmrf

#endif  // GMRF_REPORT_HPP
