#ifndef GMRF_SERIES_HPP
#define GMRF_SERIES_HPP

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "gmrf/graph.hpp"
#include "gmrf/linalg.hpp"

namespace gmrf {

using Rational = mpq_class;

class ZeroConstantTerm : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline bool is_zero(const mpq_class& v) { return sgn(v) == 0; }
inline bool is_one(const mpq_class& v) { return v == 1; }
inline double to_double(const mpq_class& v) { return v.get_d(); }
inline bool is_integer(const mpq_class& v) { return v.get_den() == 1; }

template <class T>
bool is_zero(const T& v) { return v == T(0); }
template <class T>
bool is_one(const T& v) { return v == T(1); }
template <class T>
double to_double(const T& v) { return static_cast<double>(v); }

}  // namespace detail

/// Power series truncated after x^N, coefficients in an exact field T.
/// All operands of a binary operation must share the same order N.
template <class T>
class TruncSeries {
 public:
  TruncSeries() : c_(1, T(0)) {}
  explicit TruncSeries(std::size_t order) : c_(order + 1, T(0)) {}
  TruncSeries(std::size_t order, std::vector<T> coefficients) : c_(std::move(coefficients)) {
    c_.resize(order + 1, T(0));
  }

  static TruncSeries constant(std::size_t order, const T& value) {
    TruncSeries s(order);
    s.c_[0] = value;
    return s;
  }

  /// The series x (zero when order is 0).
  static TruncSeries variable(std::size_t order) {
    TruncSeries s(order);
    if (order >= 1) s.c_[1] = T(1);
    return s;
  }

  std::size_t order() const noexcept { return c_.size() - 1; }
  const T& operator[](std::size_t i) const { return c_.at(i); }
  T& operator[](std::size_t i) { return c_.at(i); }
  const std::vector<T>& coefficients() const noexcept { return c_; }

  bool is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](const T& v) { return detail::is_zero(v); });
  }

  /// Index of the first nonzero coefficient.
  std::optional<std::size_t> valuation() const {
    for (std::size_t i = 0; i < c_.size(); ++i)
      if (!detail::is_zero(c_[i])) return i;
    return std::nullopt;
  }

  double evaluate(double x) const {
    double acc = 0.0;
    for (std::size_t i = c_.size(); i-- > 0;) acc = acc * x + detail::to_double(c_[i]);
    return acc;
  }

  TruncSeries& operator+=(const TruncSeries& o) {
    same_order(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  TruncSeries& operator-=(const TruncSeries& o) {
    same_order(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  TruncSeries& operator*=(const T& k) {
    for (auto& v : c_) v *= k;
    return *this;
  }
  TruncSeries& operator*=(const TruncSeries& o) { return *this = *this * o; }

  friend TruncSeries operator+(TruncSeries a, const TruncSeries& b) { return a += b; }
  friend TruncSeries operator-(TruncSeries a, const TruncSeries& b) { return a -= b; }
  friend TruncSeries operator-(TruncSeries a) {
    for (auto& v : a.c_) v = -v;
    return a;
  }
  friend TruncSeries operator*(TruncSeries a, const T& k) { return a *= k; }
  friend TruncSeries operator*(const T& k, TruncSeries a) { return a *= k; }

  friend TruncSeries operator*(const TruncSeries& a, const TruncSeries& b) {
    a.same_order(b);
    const std::size_t n = a.c_.size();
    TruncSeries out(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (detail::is_zero(a.c_[i])) continue;
      for (std::size_t j = 0; i + j < n; ++j) {
        if (detail::is_zero(b.c_[j])) continue;
        out.c_[i + j] += a.c_[i] * b.c_[j];
      }
    }
    return out;
  }

  friend bool operator==(const TruncSeries& a, const TruncSeries& b) { return a.c_ == b.c_; }

 private:
  void same_order(const TruncSeries& o) const {
    if (o.c_.size() != c_.size()) throw std::invalid_argument("series truncation orders differ");
  }

  std::vector<T> c_;
};

/// Multiplicative inverse; requires a nonzero constant term.
template <class T>
TruncSeries<T> inverse(const TruncSeries<T>& a) {
  if (detail::is_zero(a[0])) throw ZeroConstantTerm("inverse: constant term is zero");
  const std::size_t n = a.order() + 1;
  TruncSeries<T> b(a.order());
  const T inv0 = T(1) / a[0];
  b[0] = inv0;
  for (std::size_t k = 1; k < n; ++k) {
    T s(0);
    for (std::size_t j = 1; j <= k; ++j)
      if (!detail::is_zero(a[j])) s += a[j] * b[k - j];
    b[k] = -s * inv0;
  }
  return b;
}

/// Term-by-term derivative; the result has order N-1.
template <class T>
TruncSeries<T> derivative(const TruncSeries<T>& a) {
  if (a.order() == 0) return TruncSeries<T>(0);
  TruncSeries<T> d(a.order() - 1);
  for (std::size_t i = 1; i <= a.order(); ++i) d[i - 1] = a[i] * T(static_cast<long>(i));
  return d;
}

/// Logarithm of a series with constant term 1.
template <class T>
TruncSeries<T> log(const TruncSeries<T>& a) {
  if (!detail::is_one(a[0])) throw ZeroConstantTerm("log: constant term must be 1");
  TruncSeries<T> out(a.order());
  if (a.order() == 0) return out;
  // (log a)' = a'/a, computed at order N-1 then integrated.
  TruncSeries<T> lowered(a.order() - 1, std::vector<T>(a.coefficients().begin(), a.coefficients().end() - 1));
  const TruncSeries<T> q = derivative(a) * inverse(lowered);
  for (std::size_t i = 1; i <= a.order(); ++i) out[i] = q[i - 1] / T(static_cast<long>(i));
  return out;
}

/// Symmetric matrix of truncated series, one stored entry per unordered pair.
template <class T>
class SeriesMatrix {
 public:
  SeriesMatrix() = default;
  SeriesMatrix(std::size_t dim, std::size_t order) : dim_(dim), order_(order), data_(dim * (dim + 1) / 2, TruncSeries<T>(order)) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t order() const noexcept { return order_; }
  const TruncSeries<T>& operator()(std::size_t i, std::size_t j) const { return data_[slot(i, j)]; }
  TruncSeries<T>& at(std::size_t i, std::size_t j) { return data_[slot(i, j)]; }

  /// Constant-term matrix evaluated in double precision.
  SymMatrix constant_term() const {
    SymMatrix m(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j <= i; ++j) m.set(i, j, detail::to_double((*this)(i, j)[0]));
    return m;
  }

  friend bool operator==(const SeriesMatrix&, const SeriesMatrix&) = default;

 private:
  static std::size_t slot(std::size_t i, std::size_t j) noexcept {
    if (i < j) std::swap(i, j);
    return i * (i + 1) / 2 + j;
  }

  std::size_t dim_ = 0;
  std::size_t order_ = 0;
  std::vector<TruncSeries<T>> data_;
};

namespace detail {

/// Gauss-Jordan over the series ring. Pivots are chosen with a nonzero
/// constant term, so every division is by a unit. Returns the determinant
/// and, when requested, the inverse.
template <class T>
TruncSeries<T> series_gauss_jordan(const SeriesMatrix<T>& m, SeriesMatrix<T>* inverse_out) {
  const std::size_t n = m.dim();
  const std::size_t order = m.order();
  std::vector<std::vector<TruncSeries<T>>> a(n, std::vector<TruncSeries<T>>(n, TruncSeries<T>(order)));
  std::vector<std::vector<TruncSeries<T>>> b;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = m(i, j);
  if (inverse_out) {
    b.assign(n, std::vector<TruncSeries<T>>(n, TruncSeries<T>(order)));
    for (std::size_t i = 0; i < n; ++i) b[i][i][0] = T(1);
  }
  TruncSeries<T> det = TruncSeries<T>::constant(order, T(1));
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    while (piv < n && is_zero(a[piv][k][0])) ++piv;
    if (piv == n) throw ZeroConstantTerm("series matrix: constant-term matrix is singular");
    if (piv != k) {
      std::swap(a[piv], a[k]);
      if (inverse_out) std::swap(b[piv], b[k]);
      det = -det;
    }
    det *= a[k][k];
    const TruncSeries<T> pinv = gmrf::inverse(a[k][k]);
    for (std::size_t j = 0; j < n; ++j) {
      a[k][j] = a[k][j] * pinv;
      if (inverse_out) b[k][j] = b[k][j] * pinv;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k || a[i][k].is_zero()) continue;
      const TruncSeries<T> f = a[i][k];
      for (std::size_t j = 0; j < n; ++j) {
        if (!a[k][j].is_zero()) a[i][j] -= f * a[k][j];
        if (inverse_out && !b[k][j].is_zero()) b[i][j] -= f * b[k][j];
      }
    }
  }
  if (inverse_out) {
    SeriesMatrix<T> inv(n, order);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) inv.at(i, j) = b[i][j];
    *inverse_out = std::move(inv);
  }
  return det;
}

}  // namespace detail

template <class T>
SeriesMatrix<T> series_matrix_inverse(const SeriesMatrix<T>& m) {
  SeriesMatrix<T> inv;
  detail::series_gauss_jordan(m, &inv);
  return inv;
}

template <class T>
TruncSeries<T> series_matrix_det(const SeriesMatrix<T>& m) {
  return detail::series_gauss_jordan<T>(m, nullptr);
}

/// The sweep cap was exhausted before the entries stopped changing.
class NoStabilization : public std::runtime_error {
 public:
  NoStabilization(const std::string& what, std::size_t stable_order)
      : std::runtime_error(what), stable_order_(stable_order) {}
  /// Number of leading coefficients that were unchanged over the last sweep.
  std::size_t stable_order() const noexcept { return stable_order_; }

 private:
  std::size_t stable_order_;
};

struct TauSeries {
  TruncSeries<Rational> coefficients;
  std::size_t sweeps = 0;
  bool all_integer = false;        ///< every coefficient has denominator 1
  bool unit_denominators = true;   ///< every series inverted during recoupling had constant term 1
  SeriesMatrix<Rational> sigma;    ///< stabilized formal completion
};

struct SeriesOptions {
  std::size_t max_sweeps = 0;  ///< 0 selects 4 * (#non-edges) * N
  bool reverse_order = false;
};

/// Power series of tau(G,x) around 0, through x^N, by formal recoupling.
///
/// Starts from the matrix with unit diagonal and x elsewhere, then sweeps
/// the non-edges in lexicographic order with the same rank-2 update as the
/// numeric solver, in exact truncated arithmetic. Stops after the first
/// sweep that changes no entry.
inline TauSeries tau_series(const Graph& g, std::size_t order, const SeriesOptions& opts = {}) {
  using S = TruncSeries<Rational>;
  if (order < 2) throw std::invalid_argument("tau_series: order must be at least 2");
  const std::size_t n = g.vertex_count();
  std::vector<Edge> ne = non_edges(g);
  if (opts.reverse_order) std::reverse(ne.begin(), ne.end());
  const std::size_t cap = opts.max_sweeps ? opts.max_sweeps : std::max<std::size_t>(1, 4 * ne.size() * order);

  TauSeries out;
  SeriesMatrix<Rational> m(n, order);
  for (std::size_t i = 0; i < n; ++i) {
    m.at(i, i) = S::constant(order, Rational(1));
    for (std::size_t j = 0; j < i; ++j) m.at(i, j) = S::variable(order);
  }
  const S det0 = series_matrix_det(m);
  S det_by_steps = det0;
  SeriesMatrix<Rational> p = series_matrix_inverse(m);

  auto checked_inverse = [&](const S& s) {
    if (!detail::is_one(s[0])) out.unit_denominators = false;
    return inverse(s);
  };

  std::vector<S> pv(n, S(order)), pw(n, S(order)), r(n, S(order)), s(n, S(order));
  bool stable = ne.empty();
  std::size_t stable_prefix = order + 1;
  while (!stable) {
    if (out.sweeps >= cap) {
      throw NoStabilization("tau_series: '" + g.name() + "' did not stabilize within " + std::to_string(cap) +
                                " sweeps",
                            stable_prefix);
    }
    const SeriesMatrix<Rational> before = m;
    for (const Edge& e : ne) {
      const std::size_t v = e.u, w = e.v;
      const S pvw = p(v, w);
      if (pvw.is_zero()) continue;
      const S& pvv = p(v, v);
      const S& pww = p(w, w);
      const S delta = pvw * checked_inverse(pvv * pww - pvw * pvw);
      m.at(v, w) += delta;

      const S t00 = S::constant(order, Rational(1)) + delta * pvw;
      const S t01 = delta * pvv;
      const S t10 = delta * pww;
      const S det_t = t00 * t00 - t01 * t10;
      det_by_steps *= det_t;
      const S inv_det = checked_inverse(det_t);
      const S i00 = t00 * inv_det, i01 = -(t01 * inv_det), i10 = -(t10 * inv_det);
      const S w00 = delta * i10, w01 = delta * i00, w11 = delta * i01;  // W is symmetric, w10 == w01

      for (std::size_t k = 0; k < n; ++k) {
        pv[k] = p(k, v);
        pw[k] = p(k, w);
      }
      for (std::size_t k = 0; k < n; ++k) {
        r[k] = w00 * pv[k] + w01 * pw[k];
        s[k] = w01 * pv[k] + w11 * pw[k];
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) p.at(i, j) -= pv[i] * r[j] + pw[i] * s[j];
    }
    ++out.sweeps;

    stable = true;
    stable_prefix = order + 1;
    for (const Edge& e : ne) {
      const S& now = m(e.u, e.v);
      const S& then = before(e.u, e.v);
      for (std::size_t k = 0; k <= order; ++k)
        if (now[k] != then[k]) {
          stable = false;
          stable_prefix = std::min(stable_prefix, k);
          break;
        }
    }
  }

  out.coefficients = series_matrix_det(m);
  if (!(out.coefficients == det_by_steps))
    throw CrossCheckFailure("tau_series: determinant by elimination differs from product of step ratios");
  out.all_integer = std::all_of(out.coefficients.coefficients().begin(), out.coefficients.coefficients().end(),
                                [](const Rational& c) { return detail::is_integer(c); });
  out.sigma = std::move(m);
  return out;
}

struct LocalMargin {
  TruncSeries<Rational> coefficients;  ///< ln tau - |E| ln(1-x^2) through x^N
  std::optional<std::size_t> first_nonzero;
  Rational first_value;
  bool positive = false;  ///< first nonzero coefficient exists and is > 0
  bool identically_zero = false;
};

inline LocalMargin local_margin_series(const TauSeries& ts, std::size_t edge_count) {
  using S = TruncSeries<Rational>;
  const std::size_t order = ts.coefficients.order();
  S one_minus_x2 = S::constant(order, Rational(1));
  one_minus_x2[2] = Rational(-1);
  LocalMargin out;
  out.coefficients = log(ts.coefficients) - Rational(static_cast<long>(edge_count)) * log(one_minus_x2);
  out.first_nonzero = out.coefficients.valuation();
  out.identically_zero = !out.first_nonzero.has_value();
  if (out.first_nonzero) {
    out.first_value = out.coefficients[*out.first_nonzero];
    out.positive = sgn(out.first_value) > 0;
  }
  return out;
}

inline LocalMargin local_margin_series(const Graph& g, std::size_t order) {
  return local_margin_series(tau_series(g, order), g.edge_count());
}

}  // namespace gmrf

#endif  // GMRF_SERIES_HPP
