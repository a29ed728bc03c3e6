#ifndef GMRF_GRAPH_HPP
#define GMRF_GRAPH_HPP

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gmrf/random.hpp"

namespace gmrf {

using Vertex = std::size_t;

/// Unordered vertex pair stored as (min, max).
struct Edge {
  Vertex u = 0;
  Vertex v = 0;

  Edge() = default;
  Edge(Vertex a, Vertex b) : u(std::min(a, b)), v(std::max(a, b)) {}

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Simple undirected graph on vertices 0..n-1. Immutable once built.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n, const std::vector<Edge>& edges, std::string name = {})
      : n_(n), name_(std::move(name)), adjacency_(n) {
    for (const Edge& e : edges) {
      if (e.u == e.v) throw GraphError("self-loop at vertex " + std::to_string(e.u));
      if (e.v >= n_) throw GraphError("edge endpoint " + std::to_string(e.v) + " out of range");
      edges_.insert(e);
    }
    for (const Edge& e : edges_) {
      adjacency_[e.u].push_back(e.v);
      adjacency_[e.v].push_back(e.u);
    }
    for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
  }

  std::size_t vertex_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::set<Edge>& edges() const noexcept { return edges_; }
  const std::string& name() const noexcept { return name_; }

  bool has_edge(Vertex a, Vertex b) const { return a != b && edges_.contains(Edge(a, b)); }
  std::size_t degree(Vertex v) const { return adjacency_.at(v).size(); }
  const std::vector<Vertex>& neighbors(Vertex v) const { return adjacency_.at(v); }

  Graph renamed(std::string name) const {
    Graph g = *this;
    g.name_ = std::move(name);
    return g;
  }

  friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

 private:
  std::size_t n_ = 0;
  std::string name_;
  std::set<Edge> edges_;
  std::vector<std::vector<Vertex>> adjacency_;
};

struct Bipartition {
  std::vector<Vertex> left;
  std::vector<Vertex> right;
};

/// BFS 2-coloring. Each component is rooted at its smallest vertex, which
/// goes to `left`. Returns nullopt when an odd cycle exists.
inline std::optional<Bipartition> bipartition(const Graph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<int> color(n, -1);
  for (Vertex root = 0; root < n; ++root) {
    if (color[root] != -1) continue;
    color[root] = 0;
    std::queue<Vertex> queue;
    queue.push(root);
    while (!queue.empty()) {
      const Vertex v = queue.front();
      queue.pop();
      for (Vertex w : g.neighbors(v)) {
        if (color[w] == -1) {
          color[w] = 1 - color[v];
          queue.push(w);
        } else if (color[w] == color[v]) {
          return std::nullopt;
        }
      }
    }
  }
  Bipartition parts;
  for (Vertex v = 0; v < n; ++v) (color[v] == 0 ? parts.left : parts.right).push_back(v);
  return parts;
}

/// Outcome of the degree condition
///   sum_{v in V2} deg(v)(deg(v)-1) >= |V1|(|V1|-1)
/// evaluated with each color class in the role of V1.
struct Thm2Verdict {
  bool holds = false;
  bool v1_is_left = true;  ///< orientation reported as best
  std::int64_t lhs_left_as_v1 = 0;   ///< sum over right of d(d-1)
  std::int64_t rhs_left_as_v1 = 0;   ///< |left|(|left|-1)
  std::int64_t lhs_right_as_v1 = 0;  ///< sum over left of d(d-1)
  std::int64_t rhs_right_as_v1 = 0;  ///< |right|(|right|-1)
};

inline Thm2Verdict thm2_condition(const Graph& g, const Bipartition& parts) {
  auto pair_sum = [&](const std::vector<Vertex>& cls) {
    std::int64_t s = 0;
    for (Vertex v : cls) {
      const auto d = static_cast<std::int64_t>(g.degree(v));
      s += d * (d - 1);
    }
    return s;
  };
  auto pairs = [](std::size_t a) { return static_cast<std::int64_t>(a) * (static_cast<std::int64_t>(a) - 1); };

  Thm2Verdict r;
  r.lhs_left_as_v1 = pair_sum(parts.right);
  r.rhs_left_as_v1 = pairs(parts.left.size());
  r.lhs_right_as_v1 = pair_sum(parts.left);
  r.rhs_right_as_v1 = pairs(parts.right.size());
  const std::int64_t slack_left = r.lhs_left_as_v1 - r.rhs_left_as_v1;
  const std::int64_t slack_right = r.lhs_right_as_v1 - r.rhs_right_as_v1;
  r.v1_is_left = slack_left >= slack_right;
  r.holds = std::max(slack_left, slack_right) >= 0;
  return r;
}

inline Thm2Verdict thm2_condition(const Graph& g) {
  auto parts = bipartition(g);
  if (!parts) throw GraphError("graph '" + g.name() + "' is not bipartite");
  return thm2_condition(g, *parts);
}

/// All non-adjacent distinct pairs in lexicographic order.
inline std::vector<Edge> non_edges(const Graph& g) {
  std::vector<Edge> out;
  const std::size_t n = g.vertex_count();
  for (Vertex i = 0; i < n; ++i)
    for (Vertex j = i + 1; j < n; ++j)
      if (!g.has_edge(i, j)) out.emplace_back(i, j);
  return out;
}

/// Disjoint union; vertices of `b` are shifted by |V(a)|.
inline Graph disjoint_union(const Graph& a, const Graph& b) {
  std::vector<Edge> edges(a.edges().begin(), a.edges().end());
  const std::size_t shift = a.vertex_count();
  for (const Edge& e : b.edges()) edges.emplace_back(e.u + shift, e.v + shift);
  return Graph(a.vertex_count() + b.vertex_count(), edges, a.name() + "+" + b.name());
}

/// Unweighted single-source shortest path lengths; unreachable vertices
/// get SIZE_MAX.
inline std::vector<std::size_t> bfs_distances(const Graph& g, Vertex source) {
  constexpr auto inf = static_cast<std::size_t>(-1);
  std::vector<std::size_t> dist(g.vertex_count(), inf);
  std::queue<Vertex> queue;
  dist[source] = 0;
  queue.push(source);
  while (!queue.empty()) {
    const Vertex v = queue.front();
    queue.pop();
    for (Vertex w : g.neighbors(v)) {
      if (dist[w] == inf) {
        dist[w] = dist[v] + 1;
        queue.push(w);
      }
    }
  }
  return dist;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::int64_t parse_int(std::string_view s, std::string_view what) {
  std::int64_t value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) throw GraphError("bad integer '" + std::string(s) + "' for " + std::string(what));
  return value;
}

inline double parse_double(std::string_view s, std::string_view what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(s), &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw GraphError("bad number '" + std::string(s) + "' for " + std::string(what));
  }
}

inline std::size_t positive(std::int64_t v, std::string_view what) {
  if (v <= 0) throw GraphError(std::string(what) + " must be positive");
  return static_cast<std::size_t>(v);
}

inline Graph random_tree(std::size_t k, std::uint64_t seed, std::string name) {
  if (k == 1) return Graph(1, {}, std::move(name));
  if (k == 2) return Graph(2, {Edge(0, 1)}, std::move(name));
  // Prüfer decoding of a uniformly random sequence.
  Stream rng(seed, 0);
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);
  std::vector<Vertex> code(k - 2);
  for (auto& c : code) c = pick(rng);
  std::vector<std::size_t> degree(k, 1);
  for (Vertex c : code) ++degree[c];
  std::set<Vertex> leaves;
  for (Vertex v = 0; v < k; ++v)
    if (degree[v] == 1) leaves.insert(v);
  std::vector<Edge> edges;
  for (Vertex c : code) {
    const Vertex leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    edges.emplace_back(leaf, c);
    if (--degree[c] == 1) leaves.insert(c);
  }
  const Vertex a = *leaves.begin();
  const Vertex b = *std::next(leaves.begin());
  edges.emplace_back(a, b);
  return Graph(k, edges, std::move(name));
}

}  // namespace detail

/// Builds a graph from a family descriptor:
///   path:k  cycle:k  complete:k  complete-bipartite:a,b  star:k  hypercube:d
///   tree-random:k:seed  moebius-ladder  petersen  gnp:k:p:seed
///   bipartite-random:a:b:p:seed
/// path:k and star:k have k edges; cycle:k and complete:k have k vertices.
inline Graph make_family(std::string_view spec) {
  using detail::parse_int;
  using detail::positive;
  const auto parts = detail::split(spec, ':');
  const std::string_view family = parts[0];
  const std::string name(spec);
  auto arg = [&](std::size_t i) -> std::string_view {
    if (i >= parts.size()) throw GraphError("missing argument " + std::to_string(i) + " in '" + name + "'");
    return parts[i];
  };
  auto expect_args = [&](std::size_t count) {
    if (parts.size() != count + 1) throw GraphError("wrong number of arguments in '" + name + "'");
  };

  std::vector<Edge> edges;
  if (family == "path") {
    expect_args(1);
    const std::size_t k = positive(parse_int(arg(1), "path length"), "path length");
    for (Vertex i = 0; i < k; ++i) edges.emplace_back(i, i + 1);
    return Graph(k + 1, edges, name);
  }
  if (family == "cycle") {
    expect_args(1);
    const std::size_t k = positive(parse_int(arg(1), "cycle length"), "cycle length");
    if (k < 3) throw GraphError("cycle needs at least 3 vertices");
    for (Vertex i = 0; i < k; ++i) edges.emplace_back(i, (i + 1) % k);
    return Graph(k, edges, name);
  }
  if (family == "complete") {
    expect_args(1);
    const std::size_t k = positive(parse_int(arg(1), "vertex count"), "vertex count");
    for (Vertex i = 0; i < k; ++i)
      for (Vertex j = i + 1; j < k; ++j) edges.emplace_back(i, j);
    return Graph(k, edges, name);
  }
  if (family == "complete-bipartite") {
    expect_args(1);
    const auto sizes = detail::split(arg(1), ',');
    if (sizes.size() != 2) throw GraphError("complete-bipartite expects a,b");
    const std::size_t a = positive(parse_int(sizes[0], "class size"), "class size");
    const std::size_t b = positive(parse_int(sizes[1], "class size"), "class size");
    for (Vertex i = 0; i < a; ++i)
      for (Vertex j = 0; j < b; ++j) edges.emplace_back(i, a + j);
    return Graph(a + b, edges, name);
  }
  if (family == "star") {
    expect_args(1);
    const std::size_t k = positive(parse_int(arg(1), "leaf count"), "leaf count");
    for (Vertex i = 1; i <= k; ++i) edges.emplace_back(0, i);
    return Graph(k + 1, edges, name);
  }
  if (family == "hypercube") {
    expect_args(1);
    const std::size_t d = positive(parse_int(arg(1), "dimension"), "dimension");
    if (d > 16) throw GraphError("hypercube dimension too large");
    const std::size_t n = std::size_t{1} << d;
    for (Vertex v = 0; v < n; ++v)
      for (std::size_t bit = 0; bit < d; ++bit) {
        const Vertex w = v ^ (std::size_t{1} << bit);
        if (v < w) edges.emplace_back(v, w);
      }
    return Graph(n, edges, name);
  }
  if (family == "tree-random") {
    expect_args(2);
    const std::size_t k = positive(parse_int(arg(1), "vertex count"), "vertex count");
    const auto seed = static_cast<std::uint64_t>(parse_int(arg(2), "seed"));
    return detail::random_tree(k, seed, name);
  }
  if (family == "moebius-ladder") {
    expect_args(0);
    // K_{5,5} on L={0..4}, R={5..9} minus the 10-cycle 0-5-1-6-2-7-3-8-4-9-0.
    std::set<Edge> removed;
    for (Vertex i = 0; i < 5; ++i) {
      removed.emplace(i, 5 + i);
      removed.emplace((i + 1) % 5, 5 + i);
    }
    for (Vertex i = 0; i < 5; ++i)
      for (Vertex j = 5; j < 10; ++j)
        if (!removed.contains(Edge(i, j))) edges.emplace_back(i, j);
    return Graph(10, edges, name);
  }
  if (family == "petersen") {
    expect_args(0);
    for (Vertex i = 0; i < 5; ++i) {
      edges.emplace_back(i, (i + 1) % 5);
      edges.emplace_back(i, i + 5);
      edges.emplace_back(5 + i, 5 + (i + 2) % 5);
    }
    return Graph(10, edges, name);
  }
  if (family == "gnp") {
    expect_args(3);
    const std::size_t k = positive(parse_int(arg(1), "vertex count"), "vertex count");
    const double p = detail::parse_double(arg(2), "edge probability");
    if (!(p >= 0.0 && p <= 1.0)) throw GraphError("edge probability must lie in [0,1]");
    Stream rng(static_cast<std::uint64_t>(parse_int(arg(3), "seed")), 0);
    for (Vertex i = 0; i < k; ++i)
      for (Vertex j = i + 1; j < k; ++j)
        if (rng.uniform01() < p) edges.emplace_back(i, j);
    return Graph(k, edges, name);
  }
  if (family == "bipartite-random") {
    expect_args(4);
    const std::size_t a = positive(parse_int(arg(1), "class size"), "class size");
    const std::size_t b = positive(parse_int(arg(2), "class size"), "class size");
    const double p = detail::parse_double(arg(3), "edge probability");
    if (!(p >= 0.0 && p <= 1.0)) throw GraphError("edge probability must lie in [0,1]");
    Stream rng(static_cast<std::uint64_t>(parse_int(arg(4), "seed")), 0);
    for (Vertex i = 0; i < a; ++i)
      for (Vertex j = 0; j < b; ++j)
        if (rng.uniform01() < p) edges.emplace_back(i, a + j);
    return Graph(a + b, edges, name);
  }
  throw GraphError("unknown graph family '" + std::string(family) + "'");
}

/// Result of reading an edge-list file: the graph plus the original label
/// of every vertex (labels[v] is the file's name for vertex v).
struct ParsedGraph {
  Graph graph;
  std::vector<std::int64_t> labels;
};

namespace detail {

struct RawEdgeList {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  std::vector<double> weights;
  std::optional<std::size_t> declared_vertices;
};

inline RawEdgeList read_raw_edges(std::string_view text, bool allow_weight) {
  RawEdgeList raw;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      // "# vertices N" keeps isolated vertices across a round trip.
      std::istringstream directive(line.substr(first + 1));
      std::string key;
      long long count = -1;
      if (directive >> key && key == "vertices" && directive >> count && count >= 0)
        raw.declared_vertices = static_cast<std::size_t>(count);
      continue;
    }
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    const std::size_t max_tokens = allow_weight ? 3 : 2;
    if (tokens.size() < 2 || tokens.size() > max_tokens)
      throw GraphError("line " + std::to_string(lineno) + ": expected 'u v" + (allow_weight ? " [w]'" : "'"));
    const auto u = parse_int(tokens[0], "vertex label");
    const auto v = parse_int(tokens[1], "vertex label");
    if (u < 0 || v < 0) throw GraphError("line " + std::to_string(lineno) + ": negative vertex label");
    if (u == v) throw GraphError("line " + std::to_string(lineno) + ": self-loop");
    raw.pairs.emplace_back(u, v);
    raw.weights.push_back(tokens.size() == 3 ? parse_double(tokens[2], "edge weight") : 1.0);
  }
  return raw;
}

/// Labels already forming 0..n-1 (or below a declared vertex count) are
/// kept; anything else is relabeled by order of first appearance.
inline std::pair<std::size_t, std::map<std::int64_t, Vertex>> assign_indices(const RawEdgeList& raw,
                                                                             std::vector<std::int64_t>& labels) {
  std::set<std::int64_t> seen;
  std::int64_t max_label = -1;
  for (auto [u, v] : raw.pairs) {
    seen.insert(u);
    seen.insert(v);
    max_label = std::max({max_label, u, v});
  }
  std::map<std::int64_t, Vertex> index;
  const std::size_t declared = raw.declared_vertices.value_or(0);
  const bool contiguous = seen.empty() || static_cast<std::size_t>(max_label) + 1 == seen.size();
  const bool within_declared = raw.declared_vertices && max_label < static_cast<std::int64_t>(declared);
  if (contiguous || within_declared) {
    const std::size_t n = std::max(declared, static_cast<std::size_t>(max_label + 1));
    labels.resize(n);
    std::iota(labels.begin(), labels.end(), std::int64_t{0});
    for (std::int64_t l : seen) index[l] = static_cast<Vertex>(l);
    return {n, index};
  }
  for (auto [u, v] : raw.pairs)
    for (std::int64_t l : {u, v})
      if (index.emplace(l, labels.size()).second) labels.push_back(l);
  return {std::max(declared, labels.size()), index};
}

}  // namespace detail

/// Parses "u v" lines; '#' lines are comments.
inline ParsedGraph parse_edge_list(std::string_view text, std::string name = {}) {
  const auto raw = detail::read_raw_edges(text, false);
  ParsedGraph out;
  auto [n, index] = detail::assign_indices(raw, out.labels);
  while (out.labels.size() < n) out.labels.push_back(static_cast<std::int64_t>(out.labels.size()));
  std::vector<Edge> edges;
  for (auto [u, v] : raw.pairs) edges.emplace_back(index.at(u), index.at(v));
  out.graph = Graph(n, edges, std::move(name));
  return out;
}

inline std::string serialize_edge_list(const Graph& g) {
  std::ostringstream out;
  if (!g.name().empty()) out << "# " << g.name() << '\n';
  out << "# vertices " << g.vertex_count() << '\n';
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
  return out.str();
}

/// Symmetric nonnegative edge weights on a small vertex set; weight 0 means
/// no edge.
struct WeightedGraph {
  std::size_t n = 0;
  std::vector<double> weight;  ///< row-major n x n, symmetric, zero diagonal

  double operator()(Vertex i, Vertex j) const { return weight[i * n + j]; }
};

/// Parses "u v [w]" lines (weight defaults to 1).
inline WeightedGraph parse_weighted_edge_list(std::string_view text) {
  const auto raw = detail::read_raw_edges(text, true);
  std::vector<std::int64_t> labels;
  auto [n, index] = detail::assign_indices(raw, labels);
  WeightedGraph h{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < raw.pairs.size(); ++i) {
    const double w = raw.weights[i];
    if (!(w >= 0.0 && w <= 1.0)) throw GraphError("edge weight must lie in [0,1]");
    const Vertex u = index.at(raw.pairs[i].first);
    const Vertex v = index.at(raw.pairs[i].second);
    h.weight[u * n + v] = h.weight[v * n + u] = w;
  }
  return h;
}

}  // namespace gmrf

#endif  // GMRF_GRAPH_HPP
