// gmrf: command-line front end for the max-det completion toolkit.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gmrf/gmrf.hpp"

using namespace gmrf;

namespace {

constexpr int kUsage = 2, kInfeasible = 3, kNoConvergence = 4, kCrossCheck = 5;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Graph given either as a family spec or as an edge-list file.
struct GraphSource {
  std::string spec;
  std::string edges;

  void add_to(CLI::App& app, const std::string& spec_flag = "--graph") {
    auto* g = app.add_option_group("graph source", "exactly one of");
    g->add_option(spec_flag, spec, "graph family spec, e.g. cycle:5, moebius-ladder, gnp:8:0.4:1");
    g->add_option("--edges", edges, "edge-list file (\"u v\" per line, # comments)");
    g->require_option(1);
  }

  Graph load() const {
    if (!spec.empty()) return make_family(spec);
    return parse_edge_list(read_file(edges), std::filesystem::path(edges).filename().string()).graph;
  }

  json describe() const { return spec.empty() ? json{{"edges", edges}} : json{{"graph", spec}}; }
};

/// Splits a comma-separated spec list; pieces starting with a digit belong
/// to the previous spec (complete-bipartite:3,4).
std::vector<std::string> split_specs(const std::string& list) {
  std::vector<std::string> out;
  std::string piece;
  std::istringstream in(list);
  while (std::getline(in, piece, ',')) {
    if (piece.empty()) continue;
    if (!out.empty() && std::isdigit(static_cast<unsigned char>(piece[0])))
      out.back() += "," + piece;
    else
      out.push_back(piece);
  }
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  double lo = 0, hi = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !in.eof())
    throw UsageError("--grid expects lo:hi:step, got '" + text + "'");
  return make_grid(lo, hi, step);
}

void emit(const json& doc, const std::string& out_path) {
  const std::string text = doc.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + out_path + "'");
    f << text;
  }
}

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + out_path + "'");
    f << text;
  }
}

json with_config(const std::string& command, json config, json result) {
  return json{{"command", command}, {"config", std::move(config)}, {"result", std::move(result)}};
}

json thm2_json(const Thm2Verdict& v) {
  return json{{"holds", v.holds},
              {"v1_is_left", v.v1_is_left},
              {"lhs_left_as_v1", v.lhs_left_as_v1},
              {"rhs_left_as_v1", v.rhs_left_as_v1},
              {"lhs_right_as_v1", v.lhs_right_as_v1},
              {"rhs_right_as_v1", v.rhs_right_as_v1}};
}

int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"exit_code", code}, {"message", message}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Max-det completions, conjecture sweeps and sphere sampling for graph-constrained GMRFs", "gmrf"};
  app.set_version_flag("--version", "gmrf 1.0.0");
  app.require_subcommand(1);
  std::size_t jobs = 1;
  app.add_option("--jobs", jobs, "worker threads; output does not depend on it")->default_val(1)->check(CLI::PositiveNumber);

  // tau ----------------------------------------------------------------------
  auto* tau_cmd = app.add_subcommand("tau", "max-det completion Sigma(G,x), tau = det Sigma and the conjecture margin");
  GraphSource tau_src;
  tau_src.add_to(*tau_cmd);
  double tau_x = 0;
  SigmaOptions tau_opts;
  bool dump_matrix = false;
  tau_cmd->add_option("--x", tau_x, "edge correlation in (-1,1)")->required();
  tau_cmd->add_option("--tol", tau_opts.tol, "stop when max |P_vw| over non-edges is below this")->default_val(1e-10);
  tau_cmd->add_option("--max-passes", tau_opts.max_passes, "sweep cap")->default_val(10000);
  tau_cmd->add_flag("--reverse", tau_opts.reverse_order, "sweep non-edges in reverse order");
  tau_cmd->add_flag("--dump-matrix", dump_matrix, "include Sigma in the output");

  // sweep --------------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate tau against (1-x^2)^|E| over graphs and an x grid");
  std::string sweep_graphs, sweep_grid = "0.02:0.98:0.02", sweep_out;
  std::vector<std::string> sweep_edges;
  bool sweep_csv = false;
  SweepOptions sweep_opts;
  sweep_cmd->add_option("--graphs", sweep_graphs, "comma-separated family specs");
  sweep_cmd->add_option("--edges", sweep_edges, "edge-list files (repeatable)");
  sweep_cmd->add_option("--grid", sweep_grid, "x grid lo:hi:step")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "write the report here instead of stdout");
  sweep_cmd->add_flag("--csv", sweep_csv, "CSV instead of JSON");
  sweep_cmd->add_flag("--mirror", sweep_opts.mirror_bipartite, "also evaluate bipartite graphs at -x");
  sweep_cmd->add_flag("--timing", sweep_opts.timing, "record wall time per row (output no longer reproducible)");
  sweep_cmd->add_option("--tol", sweep_opts.sigma.tol, "recoupling tolerance")->default_val(1e-10);
  sweep_cmd->add_option("--max-passes", sweep_opts.sigma.max_passes, "sweep cap")->default_val(10000);

  // witness ------------------------------------------------------------------
  auto* wit_cmd = app.add_subcommand("witness", "explicit lower-bound matrix for a bipartite graph");
  GraphSource wit_src;
  wit_src.add_to(*wit_cmd);
  double wit_x = 0;
  bool wit_desc = false, wit_dump = false;
  wit_cmd->add_option("--x", wit_x, "edge correlation in (-1,1)")->required();
  wit_cmd->add_flag("--descending", wit_desc, "couple star matrices in descending vertex order");
  wit_cmd->add_flag("--dump-matrix", wit_dump, "include the witness matrix in the output");

  // series -------------------------------------------------------------------
  auto* ser_cmd = app.add_subcommand("series", "exact power series of tau(G,x) and of the local margin");
  GraphSource ser_src;
  ser_src.add_to(*ser_cmd);
  std::size_t ser_order = 10;
  std::string ser_out;
  SeriesOptions ser_opts;
  ser_cmd->add_option("--order", ser_order, "truncation order N (>= 2)")->default_val(10);
  ser_cmd->add_option("--out", ser_out, "write the report here instead of stdout");
  ser_cmd->add_option("--max-sweeps", ser_opts.max_sweeps, "sweep cap; 0 selects 4 * non-edges * N")->default_val(0);
  ser_cmd->add_flag("--reverse", ser_opts.reverse_order, "sweep non-edges in reverse order");

  // sphere -------------------------------------------------------------------
  auto* sph_cmd = app.add_subcommand("sphere", "Gram matrices of random unit vectors");
  sph_cmd->require_subcommand(1);

  auto* dens_cmd = sph_cmd->add_subcommand("density-check", "KS test of the k=2 marginal, or normalization MC for k>=3");
  std::size_t dens_k = 2, dens_n = 10, dens_samples = 100000;
  std::uint64_t dens_seed = 1;
  dens_cmd->add_option("--k", dens_k, "matrix size")->default_val(2)->check(CLI::Range(2, 12));
  dens_cmd->add_option("--n", dens_n, "sphere dimension (>= k)")->default_val(10);
  dens_cmd->add_option("--samples", dens_samples, "sample count")->default_val(100000)->check(CLI::PositiveNumber);
  dens_cmd->add_option("--seed", dens_seed, "RNG seed")->default_val(1);

  auto* vol_cmd = sph_cmd->add_subcommand("volume", "volume of the elliptope of k x k correlation matrices");
  std::size_t vol_k = 3, vol_samples = 1000000;
  std::uint64_t vol_seed = 1;
  bool vol_mc = false;
  vol_cmd->add_option("--k", vol_k, "matrix size")->default_val(3)->check(CLI::Range(1, 64));
  vol_cmd->add_flag("--mc-check", vol_mc, "add a cube-rejection Monte Carlo estimate");
  vol_cmd->add_option("--samples", vol_samples, "Monte Carlo sample count")->default_val(1000000)->check(CLI::PositiveNumber);
  vol_cmd->add_option("--seed", vol_seed, "RNG seed")->default_val(1);

  auto* ldp_cmd = sph_cmd->add_subcommand("ldp", "empirical n^-1 ln mu(Psi(G,[x-eps,x+eps])) against its limit");
  GraphSource ldp_src;
  ldp_src.add_to(*ldp_cmd);
  std::size_t ldp_k = 0;
  double ldp_x = 0, ldp_eps = 0.05, ldp_step = 0.01;
  std::vector<std::size_t> ldp_ns{50, 100, 200, 400};
  sphere::LdpOptions ldp_opts;
  ldp_cmd->add_option("--k", ldp_k, "matrix size; defaults to the vertex count of the graph");
  ldp_cmd->add_option("--x", ldp_x, "interval centre")->required();
  ldp_cmd->add_option("--eps", ldp_eps, "interval half-width")->default_val(0.05);
  ldp_cmd->add_option("--n-list", ldp_ns, "sphere dimensions")->delimiter(',')->default_str("50,100,200,400");
  ldp_cmd->add_option("--samples", ldp_opts.count, "samples per n")->default_val(100000)->check(CLI::PositiveNumber);
  ldp_cmd->add_option("--seed", ldp_opts.seed, "RNG seed")->default_val(1);
  ldp_cmd->add_option("--grid-step", ldp_step, "x grid step for the sup of ln tau")->default_val(0.01);

  // homdensity ---------------------------------------------------------------
  auto* hom_cmd = app.add_subcommand("homdensity", "t(G,H) by exact enumeration and the Sidorenko margin");
  hom_cmd->set_help_flag("--help", "Print this help message and exit");  // frees the name h for --h
  GraphSource hom_src;
  hom_src.add_to(*hom_cmd, "--g");
  std::string hom_h;
  hom_cmd->add_option("--h", hom_h, "weighted edge-list file for H (\"u v [w]\", at most 8 vertices)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(kUsage, "UsageError", e.what());
  }

  try {
    if (*tau_cmd) {
      const Graph g = tau_src.load();
      const SigmaResult r = sigma(g, tau_x, tau_opts);
      if (!r.converged())
        throw NoConvergence("recoupling did not reach tol " + std::to_string(tau_opts.tol) + " within " +
                                std::to_string(tau_opts.max_passes) + " passes",
                            r);
      const double margin = conjecture_margin_from_log_tau(g, r.logdet(), tau_x);
      json result{{"vertices", g.vertex_count()},
                  {"edges", g.edge_count()},
                  {"tau", std::exp(r.logdet())},
                  {"tau_log", r.logdet()},
                  {"bound_log", static_cast<double>(g.edge_count()) * std::log1p(-tau_x * tau_x)},
                  {"margin", margin},
                  {"residual", r.state.residual},
                  {"passes", r.state.passes},
                  {"init", to_string(r.init)}};
      if (dump_matrix) result["sigma"] = matrix_to_json(r.sigma);
      json config = tau_src.describe();
      config.update(json{{"x", tau_x}, {"tol", tau_opts.tol}, {"max_passes", tau_opts.max_passes},
                         {"reverse", tau_opts.reverse_order}, {"dump_matrix", dump_matrix}, {"jobs", jobs}});
      emit(with_config("tau", config, result), "");
      std::fprintf(stderr, "%s x=%g: ln tau = %.12g, margin = %.6g (%zu passes)\n", g.name().c_str(), tau_x,
                   r.logdet(), margin, r.state.passes);
    } else if (*sweep_cmd) {
      std::vector<Graph> graphs;
      for (const auto& s : split_specs(sweep_graphs)) graphs.push_back(make_family(s));
      for (const auto& path : sweep_edges)
        graphs.push_back(parse_edge_list(read_file(path), std::filesystem::path(path).filename().string()).graph);
      if (graphs.empty()) throw UsageError("sweep needs --graphs or --edges");
      const auto grid = parse_grid(sweep_grid);
      sweep_opts.jobs = jobs;
      const SweepReport report = sweep(graphs, grid, sweep_opts);
      json config{{"graphs", split_specs(sweep_graphs)}, {"edges", sweep_edges},     {"grid", sweep_grid},
                  {"mirror", sweep_opts.mirror_bipartite}, {"timing", sweep_opts.timing}, {"tol", sweep_opts.sigma.tol},
                  {"max_passes", sweep_opts.sigma.max_passes}, {"csv", sweep_csv}};
      if (sweep_csv)
        emit_text("# config " + config.dump() + "\n" + sweep_to_csv(report), sweep_out);
      else
        emit(with_config("sweep", config, sweep_to_json(report)), sweep_out);
      std::fprintf(stderr, "%zu rows: %zu violations, %zu infeasible, %zu no-convergence\n", report.rows.size(),
                   report.count(RowStatus::violation), report.count(RowStatus::infeasible),
                   report.count(RowStatus::no_convergence));
    } else if (*wit_cmd) {
      const Graph g = wit_src.load();
      const WitnessPlan plan = make_witness_plan(g, wit_desc);
      const SymMatrix m = witness_matrix(g, wit_x, plan);
      const double ld = logdet(m);
      const double closed = witness_log_bound(plan.a(), plan.degrees, wit_x);
      if (std::abs(std::expm1(ld - closed)) > 1e-10)
        throw CrossCheckFailure("witness determinant " + std::to_string(ld) + " differs from closed form " +
                                std::to_string(closed));
      const auto psi = is_in_psi(m, g, wit_x);
      if (!psi.member) throw CrossCheckFailure("witness matrix is not in Psi(G,x): " + psi.reason);
      const double conj = static_cast<double>(g.edge_count()) * std::log1p(-wit_x * wit_x);
      json result{{"det", std::exp(ld)},
                  {"det_log", ld},
                  {"closed_form_log", closed},
                  {"conjecture_bound_log", conj},
                  {"bound_above_conjecture", closed >= conj - 1e-12},
                  {"a", plan.a()},
                  {"b", plan.b()},
                  {"v1", plan.v1},
                  {"v2", plan.v2},
                  {"degrees", plan.degrees},
                  {"isolated", plan.isolated},
                  {"thm2", thm2_json(plan.verdict)}};
      if (wit_dump) result["matrix"] = matrix_to_json(m);
      json config = wit_src.describe();
      config.update(json{{"x", wit_x}, {"descending", wit_desc}, {"dump_matrix", wit_dump}, {"jobs", jobs}});
      emit(with_config("witness", config, result), "");
      std::fprintf(stderr, "%s x=%g: ln det(witness) = %.12g, degree condition %s\n", g.name().c_str(), wit_x, ld,
                   plan.verdict.holds ? "holds" : "fails");
    } else if (*ser_cmd) {
      const Graph g = ser_src.load();
      const TauSeries ts = tau_series(g, ser_order, ser_opts);
      if (!ts.all_integer) throw CrossCheckFailure("tau series has a non-integer coefficient");
      const LocalMargin lm = local_margin_series(ts, g.edge_count());
      json margin{{"coefficients", coefficients_to_json(lm.coefficients)},
                  {"first_nonzero", lm.first_nonzero ? json(*lm.first_nonzero) : json(nullptr)},
                  {"first_value", lm.first_nonzero ? json(lm.first_value.get_str()) : json(nullptr)},
                  {"positive", lm.positive},
                  {"identically_zero", lm.identically_zero}};
      json result{{"coefficients", coefficients_to_json(ts.coefficients)},
                  {"sweeps", ts.sweeps},
                  {"all_integer", ts.all_integer},
                  {"unit_denominators", ts.unit_denominators},
                  {"local_margin", margin}};
      json config = ser_src.describe();
      config.update(json{{"order", ser_order}, {"max_sweeps", ser_opts.max_sweeps}, {"reverse", ser_opts.reverse_order}});
      emit(with_config("series", config, result), ser_out);
      if (lm.first_nonzero)
        std::fprintf(stderr, "%s: first nonzero local-margin coefficient x^%zu = %s (%s)\n", g.name().c_str(),
                     *lm.first_nonzero, lm.first_value.get_str().c_str(), lm.positive ? "positive" : "negative");
      else
        std::fprintf(stderr, "%s: local margin vanishes through x^%zu\n", g.name().c_str(), ser_order);
    } else if (*dens_cmd) {
      json config{{"k", dens_k}, {"n", dens_n}, {"samples", dens_samples}, {"seed", dens_seed}};
      json result;
      if (dens_k == 2) {
        const auto ks = sphere::density_check_k2(dens_n, dens_samples, dens_seed, jobs);
        result = {{"test", "ks"}, {"ks", ks.ks}, {"pass", ks.ks < 0.01}};
        std::fprintf(stderr, "KS statistic %.5g\n", ks.ks);
      } else {
        const auto z = sphere::normalization_mc(dens_k, dens_n, dens_samples, dens_seed, jobs);
        const bool ok = std::abs(z.estimate - 1.0) <= 3 * z.std_error;
        result = {{"test", "normalization"}, {"estimate", z.estimate}, {"std_error", z.std_error}, {"pass", ok}};
        std::fprintf(stderr, "integral of f = %.6f +- %.6f\n", z.estimate, z.std_error);
      }
      emit(with_config("sphere density-check", config, result), "");
    } else if (*vol_cmd) {
      const double lv = sphere::elliptope_log_volume(vol_k);
      json result{{"log_volume", lv}, {"volume", std::exp(lv)}};
      if (vol_mc) {
        const auto mc = sphere::volume_mc(vol_k, vol_samples, vol_seed, jobs);
        result["mc"] = {{"estimate", mc.estimate},
                        {"std_error", mc.std_error},
                        {"count", mc.count},
                        {"relative_difference", mc.estimate / std::exp(lv) - 1.0}};
      }
      emit(with_config("sphere volume", {{"k", vol_k}, {"mc_check", vol_mc}, {"samples", vol_samples}, {"seed", vol_seed}},
                       result),
           "");
      std::fprintf(stderr, "Vol(M_%zu) = %.15g\n", vol_k, std::exp(lv));
    } else if (*ldp_cmd) {
      const Graph g = ldp_src.load();
      const std::size_t k = ldp_k ? ldp_k : g.vertex_count();
      if (k != g.vertex_count()) throw UsageError("--k must equal the vertex count of the graph");
      const double lo = ldp_x - ldp_eps, hi = ldp_x + ldp_eps;
      const auto pred = sphere::psi_set_predicate(g, lo, hi);
      const double sup = sphere::sup_log_tau(g, lo, hi, ldp_step);
      ldp_opts.jobs = jobs;
      if (k == 2 && g.edge_count() == 1) ldp_opts.k2_interval = {{lo, hi}};
      const auto rows = sphere::ldp_rate(k, ldp_ns, pred, sup, ldp_opts);
      json config = ldp_src.describe();
      config.update(json{{"k", k},
                         {"x", ldp_x},
                         {"eps", ldp_eps},
                         {"n_list", ldp_ns},
                         {"samples", ldp_opts.count},
                         {"seed", ldp_opts.seed},
                         {"grid_step", ldp_step}});
      emit(with_config("sphere ldp", config, json{{"sup_log_det", sup}, {"rows", ldp_to_json(k, ldp_opts.seed, pred.description, rows)}}),
           "");
      for (const auto& r : rows)
        std::fprintf(stderr, "n=%zu: rate %.5g (target %.5g, %zu hits)\n", r.n, r.log_rate, r.target_rate, r.mc.hits);
    } else if (*hom_cmd) {
      const Graph g = hom_src.load();
      const WeightedGraph h = parse_weighted_edge_list(read_file(hom_h));
      const auto c = sphere::sidorenko_check(g, h);
      json config = hom_src.describe();
      config["h"] = hom_h;
      json result{{"t_g", c.t_g},
                  {"t_e", c.t_e},
                  {"edges", g.edge_count()},
                  {"slack", c.slack},
                  {"log_margin", detail::number_or_null(c.log_margin)},
                  {"sidorenko_holds", c.slack >= 0.0}};
      emit(with_config("homdensity", config, result), "");
      std::fprintf(stderr, "t(G,H) = %.12g, t(e,H)^|E| = %.12g\n", c.t_g, std::pow(c.t_e, static_cast<double>(g.edge_count())));
    }
  } catch (const Infeasible& e) {
    return fail(kInfeasible, "Infeasible", e.what());
  } catch (const NotPD& e) {
    return fail(kInfeasible, "NotPD", e.what());
  } catch (const NoConvergence& e) {
    return fail(kNoConvergence, "NoConvergence", e.what());
  } catch (const NoStabilization& e) {
    return fail(kNoConvergence, "NoStabilization", e.what());
  } catch (const CrossCheckFailure& e) {
    return fail(kCrossCheck, "CrossCheckFailure", e.what());
  } catch (const UsageError& e) {
    return fail(kUsage, "UsageError", e.what());
  } catch (const NotBipartite& e) {
    return fail(kUsage, "NotBipartite", e.what());
  } catch (const GraphError& e) {
    return fail(kUsage, "GraphError", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kUsage, "InvalidArgument", e.what());
  } catch (const std::domain_error& e) {
    return fail(kUsage, "DomainError", e.what());
  } catch (const std::exception& e) {
    return fail(1, "InternalError", e.what());
  }
  return 0;
}
