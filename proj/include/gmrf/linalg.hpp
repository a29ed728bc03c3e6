#ifndef GMRF_LINALG_HPP
#define GMRF_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmrf/graph.hpp"

namespace gmrf {

/// Cholesky pivot failure. Carries the first failing pivot.
class NotPD : public std::runtime_error {
 public:
  NotPD(std::size_t pivot_index, double pivot_value)
      : std::runtime_error("matrix is not positive definite: pivot " + std::to_string(pivot_index) + " = " +
                           std::to_string(pivot_value)),
        pivot_index_(pivot_index),
        pivot_value_(pivot_value) {}

  std::size_t pivot_index() const noexcept { return pivot_index_; }
  double pivot_value() const noexcept { return pivot_value_; }

 private:
  std::size_t pivot_index_;
  double pivot_value_;
};

class OverlapMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when two independent computations of the same quantity disagree.
class CrossCheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPdTolerance = 1e-12;

/// Dense symmetric matrix with one stored value per unordered index pair.
/// Rows/columns carry labels (`index_set`) so that matrices over different
/// vertex sets can be glued together.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(std::size_t dim, double fill = 0.0) : dim_(dim), data_(dim * (dim + 1) / 2, fill), labels_(dim) {
    std::iota(labels_.begin(), labels_.end(), Vertex{0});
  }

  SymMatrix(std::vector<Vertex> labels, double fill) : SymMatrix(labels.size(), fill) {
    labels_ = std::move(labels);
  }

  static SymMatrix identity(std::size_t dim) {
    SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) m.set(i, i, 1.0);
    return m;
  }

  /// Unit diagonal with `off` everywhere else.
  static SymMatrix constant_correlation(std::vector<Vertex> labels, double off) {
    SymMatrix m(std::move(labels), off);
    for (std::size_t i = 0; i < m.dim(); ++i) m.set(i, i, 1.0);
    return m;
  }

  /// Builds from a dense row-major array; only the lower triangle is read.
  static SymMatrix from_dense(std::size_t dim, const std::vector<double>& rows) {
    if (rows.size() != dim * dim) throw std::invalid_argument("from_dense: size mismatch");
    SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j <= i; ++j) m.set(i, j, rows[i * dim + j]);
    return m;
  }

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Vertex>& index_set() const noexcept { return labels_; }
  void set_index_set(std::vector<Vertex> labels) {
    if (labels.size() != dim_) throw std::invalid_argument("index set size mismatch");
    labels_ = std::move(labels);
  }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[slot(i, j)]; }
  void set(std::size_t i, std::size_t j, double v) noexcept { data_[slot(i, j)] = v; }
  void add(std::size_t i, std::size_t j, double v) noexcept { data_[slot(i, j)] += v; }

  /// Position of `label` in the index set, if present.
  std::optional<std::size_t> position(Vertex label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
  }

  /// Principal submatrix on the given positions (labels follow along).
  SymMatrix principal(const std::vector<std::size_t>& positions) const {
    SymMatrix m(positions.size());
    std::vector<Vertex> labels;
    labels.reserve(positions.size());
    for (std::size_t a = 0; a < positions.size(); ++a) {
      labels.push_back(labels_[positions[a]]);
      for (std::size_t b = 0; b <= a; ++b) m.set(a, b, (*this)(positions[a], positions[b]));
    }
    m.labels_ = std::move(labels);
    return m;
  }

  /// Principal submatrix on the given labels.
  SymMatrix restrict_to(const std::vector<Vertex>& labels) const {
    std::vector<std::size_t> positions;
    positions.reserve(labels.size());
    for (Vertex l : labels) {
      auto p = position(l);
      if (!p) throw std::out_of_range("label " + std::to_string(l) + " not in index set");
      positions.push_back(*p);
    }
    return principal(positions);
  }

  /// Same matrix with rows/columns reordered so labels ascend.
  SymMatrix sorted_by_label() const {
    std::vector<std::size_t> order(dim_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels_[a] < labels_[b]; });
    return principal(order);
  }

  double max_abs_diff(const SymMatrix& other) const {
    if (other.dim_ != dim_) throw std::invalid_argument("max_abs_diff: dimension mismatch");
    double m = 0.0;
    for (std::size_t k = 0; k < data_.size(); ++k) m = std::max(m, std::abs(data_[k] - other.data_[k]));
    return m;
  }

  std::vector<double> dense() const {
    std::vector<double> out(dim_ * dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) out[i * dim_ + j] = (*this)(i, j);
    return out;
  }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  static std::size_t slot(std::size_t i, std::size_t j) noexcept {
    if (i < j) std::swap(i, j);
    return i * (i + 1) / 2 + j;
  }

  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::vector<Vertex> labels_;
};

/// Lower-triangular Cholesky factor, packed by rows.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const SymMatrix& m, double pd_tolerance = kPdTolerance) : n_(m.dim()), l_(n_ * (n_ + 1) / 2) {
    double min_pivot = std::numeric_limits<double>::infinity();
    double max_pivot = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      double d = m(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= at(j, k) * at(j, k);
      if (!(d > pd_tolerance)) throw NotPD(j, d);
      const double ljj = std::sqrt(d);
      at(j, j) = ljj;
      min_pivot = std::min(min_pivot, d);
      max_pivot = std::max(max_pivot, d);
      for (std::size_t i = j + 1; i < n_; ++i) {
        double s = m(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= at(i, k) * at(j, k);
        at(i, j) = s / ljj;
      }
    }
    pivot_ratio_ = n_ == 0 ? 1.0 : max_pivot / min_pivot;
  }

  std::size_t dim() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return i < j ? 0.0 : l_[i * (i + 1) / 2 + j]; }

  double logdet() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += std::log(l_[i * (i + 1) / 2 + i]);
    return 2.0 * s;
  }

  /// Ratio of largest to smallest squared pivot; a cheap conditioning
  /// indicator near the PSD boundary.
  double pivot_ratio() const noexcept { return pivot_ratio_; }

  /// Solves M y = b in place.
  void solve_in_place(std::vector<double>& b) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= (*this)(i, k) * b[k];
      b[i] = s / (*this)(i, i);
    }
    for (std::size_t i = n_; i-- > 0;) {
      double s = b[i];
      for (std::size_t k = i + 1; k < n_; ++k) s -= (*this)(k, i) * b[k];
      b[i] = s / (*this)(i, i);
    }
  }

  SymMatrix inverse() const {
    // Invert L, then M^{-1} = L^{-T} L^{-1}.
    std::vector<double> linv(n_ * n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      linv[j * n_ + j] = 1.0 / (*this)(j, j);
      for (std::size_t i = j + 1; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t k = j; k < i; ++k) s -= (*this)(i, k) * linv[k * n_ + j];
        linv[i * n_ + j] = s / (*this)(i, i);
      }
    }
    SymMatrix inv(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t k = i; k < n_; ++k) s += linv[k * n_ + i] * linv[k * n_ + j];
        inv.set(i, j, s);
      }
    return inv;
  }

 private:
  double& at(std::size_t i, std::size_t j) noexcept { return l_[i * (i + 1) / 2 + j]; }

  std::size_t n_;
  std::vector<double> l_;
  double pivot_ratio_ = 1.0;
};

inline CholeskyFactor cholesky(const SymMatrix& m, double pd_tolerance = kPdTolerance) {
  return CholeskyFactor(m, pd_tolerance);
}

inline double logdet(const SymMatrix& m) { return cholesky(m).logdet(); }

inline SymMatrix inverse(const SymMatrix& m) {
  SymMatrix inv = cholesky(m).inverse();
  inv.set_index_set(m.index_set());
  return inv;
}

inline bool is_positive_definite(const SymMatrix& m, double pd_tolerance = kPdTolerance) {
  try {
    cholesky(m, pd_tolerance);
    return true;
  } catch (const NotPD&) {
    return false;
  }
}

/// max |M * Minv - I|.
inline double inverse_residual(const SymMatrix& m, const SymMatrix& minv) {
  const std::size_t n = m.dim();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += m(i, k) * minv(k, j);
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

/// Outcome of a membership test for Psi(G, x).
struct PsiReport {
  bool member = false;
  bool positive_definite = false;
  std::optional<std::size_t> bad_diagonal;
  std::optional<Edge> bad_edge;
  std::string reason;
};

/// Membership in Psi(G,x): positive definite, unit diagonal, x on every
/// edge. Matrix positions are taken as vertex indices.
inline PsiReport is_in_psi(const SymMatrix& m, const Graph& g, double x, double tol = 1e-10) {
  PsiReport r;
  if (m.dim() != g.vertex_count()) {
    r.reason = "dimension " + std::to_string(m.dim()) + " != vertex count " + std::to_string(g.vertex_count());
    return r;
  }
  try {
    cholesky(m);
    r.positive_definite = true;
  } catch (const NotPD& e) {
    r.reason = e.what();
    return r;
  }
  for (std::size_t i = 0; i < m.dim(); ++i)
    if (std::abs(m(i, i) - 1.0) > tol) {
      r.bad_diagonal = i;
      r.reason = "diagonal entry " + std::to_string(i) + " is " + std::to_string(m(i, i));
      return r;
    }
  for (const Edge& e : g.edges())
    if (std::abs(m(e.u, e.v) - x) > tol) {
      r.bad_edge = e;
      r.reason = "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ") has entry " +
                 std::to_string(m(e.u, e.v)) + ", expected " + std::to_string(x);
      return r;
    }
  r.member = true;
  return r;
}

/// Differential entropy of a centered Gaussian with covariance M.
inline double differential_entropy(const SymMatrix& m) {
  return 0.5 * static_cast<double>(m.dim()) * std::log(2.0 * std::numbers::pi * std::numbers::e) + 0.5 * logdet(m);
}

namespace detail {

/// Index bookkeeping shared by both coupling routes. Q is ordered as X
/// followed by Y \ X.
struct CouplingLayout {
  std::vector<Vertex> q;           // labels of Q
  std::vector<std::size_t> a_pos;  // Q position of A's rows
  std::vector<std::size_t> b_pos;  // Q position of B's rows
  std::vector<std::size_t> z_in_a, z_in_b;
  std::vector<std::size_t> xonly_in_a;  // X \ Z, positions in A
  std::vector<std::size_t> yonly_in_b;  // Y \ Z, positions in B
};

inline CouplingLayout coupling_layout(const SymMatrix& a, const SymMatrix& b) {
  CouplingLayout lay;
  lay.q = a.index_set();
  std::map<Vertex, std::size_t> a_index;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (!a_index.emplace(a.index_set()[i], i).second) throw std::invalid_argument("duplicate label in A");
    lay.a_pos.push_back(i);
  }
  std::vector<bool> a_shared(a.dim(), false);
  for (std::size_t j = 0; j < b.dim(); ++j) {
    const Vertex label = b.index_set()[j];
    if (auto it = a_index.find(label); it != a_index.end()) {
      lay.z_in_a.push_back(it->second);
      lay.z_in_b.push_back(j);
      lay.b_pos.push_back(it->second);
      a_shared[it->second] = true;
    } else {
      lay.b_pos.push_back(lay.q.size());
      lay.q.push_back(label);
      lay.yonly_in_b.push_back(j);
    }
  }
  for (std::size_t i = 0; i < a.dim(); ++i)
    if (!a_shared[i]) lay.xonly_in_a.push_back(i);
  return lay;
}

inline void check_overlap(const SymMatrix& a, const SymMatrix& b, const CouplingLayout& lay, double overlap_tol) {
  if (lay.z_in_a.empty()) throw std::invalid_argument("couple: index sets do not overlap");
  for (std::size_t p = 0; p < lay.z_in_a.size(); ++p)
    for (std::size_t q = 0; q <= p; ++q) {
      const double da = a(lay.z_in_a[p], lay.z_in_a[q]);
      const double db = b(lay.z_in_b[p], lay.z_in_b[q]);
      if (std::abs(da - db) > overlap_tol)
        throw OverlapMismatch("couple: overlap blocks differ by " + std::to_string(std::abs(da - db)));
    }
}

}  // namespace detail

/// Route (i): D = (A~ + B~ - C~)^{-1} with the inverses zero-padded to Q.
inline SymMatrix couple_padded_inverse(const SymMatrix& a, const SymMatrix& b, double overlap_tol = 1e-9) {
  const auto lay = detail::coupling_layout(a, b);
  detail::check_overlap(a, b, lay, overlap_tol);
  const SymMatrix c = a.principal(lay.z_in_a);
  const SymMatrix ainv = cholesky(a).inverse();
  const SymMatrix binv = cholesky(b).inverse();
  const SymMatrix cinv = cholesky(c).inverse();

  SymMatrix precision(lay.q, 0.0);
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j <= i; ++j) precision.add(lay.a_pos[i], lay.a_pos[j], ainv(i, j));
  for (std::size_t i = 0; i < b.dim(); ++i)
    for (std::size_t j = 0; j <= i; ++j) precision.add(lay.b_pos[i], lay.b_pos[j], binv(i, j));
  for (std::size_t i = 0; i < c.dim(); ++i)
    for (std::size_t j = 0; j <= i; ++j) precision.add(lay.z_in_a[i], lay.z_in_a[j], -cinv(i, j));

  SymMatrix d = cholesky(precision).inverse();
  d.set_index_set(lay.q);
  return d;
}

/// Route (ii): keep A and B on their blocks and fill the cross block
/// D_{X\Z, Y\Z} = A_{X\Z,Z} C^{-1} B_{Z,Y\Z}.
inline SymMatrix couple_conditional(const SymMatrix& a, const SymMatrix& b, double overlap_tol = 1e-9) {
  const auto lay = detail::coupling_layout(a, b);
  detail::check_overlap(a, b, lay, overlap_tol);
  const SymMatrix c = a.principal(lay.z_in_a);
  const CholeskyFactor cf = cholesky(c);
  cholesky(a);
  cholesky(b);

  SymMatrix d(lay.q, 0.0);
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j <= i; ++j) d.set(lay.a_pos[i], lay.a_pos[j], a(i, j));
  for (std::size_t i = 0; i < b.dim(); ++i)
    for (std::size_t j = 0; j <= i; ++j) d.set(lay.b_pos[i], lay.b_pos[j], b(i, j));

  const std::size_t nz = c.dim();
  std::vector<double> col(nz);
  for (std::size_t jb : lay.yonly_in_b) {
    for (std::size_t p = 0; p < nz; ++p) col[p] = b(lay.z_in_b[p], jb);
    cf.solve_in_place(col);  // C^{-1} B_{Z,j}
    for (std::size_t ia : lay.xonly_in_a) {
      double s = 0.0;
      for (std::size_t p = 0; p < nz; ++p) s += a(ia, lay.z_in_a[p]) * col[p];
      d.set(lay.a_pos[ia], lay.b_pos[jb], s);
    }
  }
  return d;
}

/// Conditionally independent coupling of A (over X) and B (over Y) along
/// their common block C. Both routes are evaluated and must agree to 1e-8.
/// The result is indexed by X followed by Y \ X.
inline SymMatrix couple(const SymMatrix& a, const SymMatrix& b, double overlap_tol = 1e-9) {
  SymMatrix d = couple_conditional(a, b, overlap_tol);
  const SymMatrix check = couple_padded_inverse(a, b, overlap_tol);
  const double diff = d.max_abs_diff(check);
  if (!(diff <= 1e-8)) throw CrossCheckFailure("couple: routes disagree by " + std::to_string(diff));
  return d;
}

}  // namespace gmrf

#endif  // GMRF_LINALG_HPP
