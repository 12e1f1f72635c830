#pragma once

// Chebyshev grids, univariate/bivariate/piecewise expansions, adaptive
// discretization, spectral integration and quadrature.
//
// Conventions: the order-k grid on [a,b] is (b-a)/2*cos(j*pi/k) + (b+a)/2,
// j = 0..k, so node 0 is the right endpoint b and node k the left endpoint a.
// Sample vectors passed to the fitting routines follow this ordering.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pswf/errors.hpp"

namespace pswf::cheb {

inline constexpr int default_order = 29;

/// Precomputed matrices for one expansion order. Obtain through ops(k).
struct ChebOps {
  int k = 0;
  std::vector<double> nodes;      // on [-1,1], descending
  std::vector<double> to_coeffs;  // (k+1)x(k+1), row-major: coeffs = M * values
  std::vector<double> to_values;  // values = V * coeffs
  // Value-space integration matrices on [-1,1]: row j gives the integral from
  // -1 (left) or from +1 (right) to node j.
  std::vector<double> int_left, int_left2, int_left3;
  std::vector<double> int_right, int_right2, int_right3;
  std::vector<double> diff;  // value-space differentiation on [-1,1]

  std::size_t size() const { return static_cast<std::size_t>(k) + 1; }
};

namespace detail {

inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                                  std::size_t n) {
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < n; ++l) {
      const double ail = a[i * n + l];
      if (ail == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += ail * b[l * n + j];
    }
  return c;
}

// Antiderivative coefficients (length k+2) of a Chebyshev series on [-1,1],
// with the constant term left at zero.
inline std::vector<double> antiderivative_coeffs(std::span<const double> beta) {
  const std::size_t n = beta.size();
  std::vector<double> out(n + 1, 0.0);
  auto b = [&](std::size_t i) { return i < n ? beta[i] : 0.0; };
  for (std::size_t i = 1; i <= n; ++i) {
    const double prev = (i == 1) ? 2.0 * b(0) : b(i - 1);
    out[i] = (prev - b(i + 1)) / (2.0 * static_cast<double>(i));
  }
  return out;
}

inline std::vector<double> derivative_coeffs(std::span<const double> beta) {
  const std::size_t n = beta.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  const std::size_t k = n - 1;
  std::vector<double> tmp(n + 1, 0.0);
  for (std::size_t i = k; i >= 1; --i) {
    tmp[i - 1] = tmp[i + 1] + 2.0 * static_cast<double>(i) * beta[i];
  }
  tmp[0] *= 0.5;
  for (std::size_t i = 0; i < n; ++i) d[i] = tmp[i];
  d[k] = 0.0;
  return d;
}

inline double clenshaw(std::span<const double> beta, double s) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t i = beta.size(); i-- > 1;) {
    const double b0 = beta[i] + 2.0 * s * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return (beta.empty() ? 0.0 : beta[0]) + s * b1 - b2;
}

inline std::shared_ptr<const ChebOps> build_ops(int k) {
  auto o = std::make_shared<ChebOps>();
  o->k = k;
  const std::size_t n = static_cast<std::size_t>(k) + 1;
  const double pi = std::numbers::pi;
  const long double pi_l = std::numbers::pi_v<long double>;
  o->nodes.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    // sin form keeps the grid exactly antisymmetric
    o->nodes[j] = std::sin(pi * (static_cast<double>(k) - 2.0 * static_cast<double>(j)) /
                           (2.0 * static_cast<double>(k)));
  }
  o->to_values.assign(n * n, 0.0);
  o->to_coeffs.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      // extended precision keeps the transform entries correctly rounded
      const long double c = std::cos(pi_l * static_cast<long double>((i * j) % (2 * n - 2)) /
                                     static_cast<long double>(k));
      o->to_values[j * n + i] = static_cast<double>(c);
      const long double wj = (j == 0 || j == n - 1) ? 0.5L : 1.0L;
      const long double ci = (i == 0 || i == n - 1) ? 1.0L : 2.0L;
      o->to_coeffs[i * n + j] = static_cast<double>(ci * wj * c / static_cast<long double>(k));
    }

  // integration of each basis polynomial, evaluated at the nodes
  std::vector<double> ic(n * n, 0.0);  // ic[j*n+i] = int_{-1}^{t_j} T_i
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    auto anti = antiderivative_coeffs(e);
    double left = 0.0;
    for (std::size_t m = 0; m < anti.size(); ++m) left += anti[m] * ((m % 2) ? -1.0 : 1.0);
    for (std::size_t j = 0; j < n; ++j) ic[j * n + i] = clenshaw(anti, o->nodes[j]) - left;
  }
  o->int_left = matmul(ic, o->to_coeffs, n);
  o->int_right = o->int_left;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) o->int_right[j * n + i] -= o->int_left[i];
  o->int_left2 = matmul(o->int_left, o->int_left, n);
  o->int_left3 = matmul(o->int_left2, o->int_left, n);
  o->int_right2 = matmul(o->int_right, o->int_right, n);
  o->int_right3 = matmul(o->int_right2, o->int_right, n);

  std::vector<double> dc(n * n, 0.0);  // dc[j*n+i] = T_i'(t_j)
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    auto d = derivative_coeffs(e);
    for (std::size_t j = 0; j < n; ++j) dc[j * n + i] = clenshaw(d, o->nodes[j]);
  }
  o->diff = matmul(dc, o->to_coeffs, n);
  return o;
}

}  // namespace detail

/// Shared, immutable operator set for order k (thread-safe cache).
inline const ChebOps& ops(int k) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const ChebOps>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, detail::build_ops(k)).first;
  return *it->second;
}

/// The n-th order Chebyshev grid on [a,b], descending.
inline std::vector<double> cheb_grid(int n, double a, double b) {
  if (n < 1) throw domain_error("cheb_grid: order must be >= 1");
  if (!(a < b)) throw domain_error("cheb_grid: degenerate interval");
  const auto& o = ops(n);
  std::vector<double> x(o.size());
  const double h = (b - a) / 2.0, m = (b + a) / 2.0;
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = h * o.nodes[j] + m;
  x.front() = b;
  x.back() = a;
  return x;
}

/// Coefficients (length k+1) of the interpolant through values at the
/// order-k grid.
inline std::vector<double> values_to_coeffs(std::span<const double> values) {
  if (values.size() < 2) throw domain_error("values_to_coeffs: need at least 2 samples");
  const int k = static_cast<int>(values.size()) - 1;
  const auto& o = ops(k);
  const std::size_t n = o.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += o.to_coeffs[i * n + j] * values[j];
    c[i] = s;
  }
  return c;
}

/// Relative tail measure: max|beta_{k/2+1..k}| / max(max|beta|, floor).
inline double tail_ratio(std::span<const double> beta, double floor = 0.0) {
  const std::size_t k = beta.size() - 1;
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    head = std::max(head, std::abs(beta[i]));
    if (i >= k / 2 + 1) tail = std::max(tail, std::abs(beta[i]));
  }
  const double den = std::max(head, floor);
  if (den == 0.0) return 0.0;
  return tail / den;
}

struct ChebyshevPiece {
  double a = -1.0, b = 1.0;
  std::vector<double> coeffs;

  int order() const { return static_cast<int>(coeffs.size()) - 1; }
  double mapped(double x) const { return (2.0 * x - (a + b)) / (b - a); }
  double operator()(double x) const { return detail::clenshaw(coeffs, mapped(x)); }

  /// Exact integral over [a,b].
  double integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); i += 2)
      s += coeffs[i] * 2.0 / (1.0 - static_cast<double>(i * i));
    return s * (b - a) / 2.0;
  }

  ChebyshevPiece derivative() const {
    ChebyshevPiece d{a, b, detail::derivative_coeffs(coeffs)};
    const double scale = 2.0 / (b - a);
    for (double& c : d.coeffs) c *= scale;
    return d;
  }
};

/// Fit the order-n interpolant on [a,b] from n+1 samples at cheb_grid(n,a,b).
inline ChebyshevPiece fit_univariate(std::span<const double> samples, double a, double b) {
  if (samples.size() < 2) throw domain_error("fit_univariate: need at least 2 samples");
  if (!(a < b)) throw domain_error("fit_univariate: degenerate interval");
  return ChebyshevPiece{a, b, values_to_coeffs(samples)};
}

/// Order-k Chebyshev expansions on the intervals of a partition.
class PiecewiseChebyshev {
 public:
  PiecewiseChebyshev() = default;

  explicit PiecewiseChebyshev(std::vector<ChebyshevPiece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw domain_error("PiecewiseChebyshev: no pieces");
    const std::size_t nc = pieces_.front().coeffs.size();
    breaks_.reserve(pieces_.size() + 1);
    breaks_.push_back(pieces_.front().a);
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const auto& p = pieces_[i];
      if (!(p.a < p.b)) throw domain_error("PiecewiseChebyshev: degenerate piece");
      if (p.coeffs.size() != nc) throw domain_error("PiecewiseChebyshev: mixed orders");
      if (i > 0 && p.a != pieces_[i - 1].b)
        throw domain_error("PiecewiseChebyshev: pieces do not tile");
      breaks_.push_back(p.b);
    }
  }

  bool empty() const { return pieces_.empty(); }
  int order() const { return pieces_.empty() ? 0 : pieces_.front().order(); }
  double a() const { return breaks_.front(); }
  double b() const { return breaks_.back(); }
  std::span<const double> breakpoints() const { return breaks_; }
  const std::vector<ChebyshevPiece>& pieces() const { return pieces_; }
  std::size_t num_pieces() const { return pieces_.size(); }

  /// Index of the piece containing x (bisection over breakpoints).
  std::size_t locate(double x) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (!(x >= std::nextafter(breaks_.front(), -inf) && x <= std::nextafter(breaks_.back(), inf))) {
      std::ostringstream msg;
      msg << "PiecewiseChebyshev: x=" << x << " outside [" << breaks_.front() << ", "
          << breaks_.back() << "]";
      throw domain_error(msg.str());
    }
    auto first = breaks_.begin() + 1, last = breaks_.end() - 1;
    return static_cast<std::size_t>(std::upper_bound(first, last, x) - first);
  }

  double operator()(double x) const { return pieces_[locate(x)](x); }

  PiecewiseChebyshev derivative() const {
    std::vector<ChebyshevPiece> d;
    d.reserve(pieces_.size());
    for (const auto& p : pieces_) d.push_back(p.derivative());
    return PiecewiseChebyshev(std::move(d));
  }

 private:
  std::vector<ChebyshevPiece> pieces_;
  std::vector<double> breaks_;
};

inline double eval_piecewise(const PiecewiseChebyshev& p, double x) { return p(x); }

/// Fit a function on every interval of a partition at the order-k grid.
template <class F>
PiecewiseChebyshev fit_piecewise(F&& f, std::span<const double> breakpoints, int k = default_order) {
  std::vector<ChebyshevPiece> pieces;
  pieces.reserve(breakpoints.size());
  std::vector<double> vals(static_cast<std::size_t>(k) + 1);
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const auto x = cheb_grid(k, breakpoints[i], breakpoints[i + 1]);
    for (std::size_t j = 0; j < x.size(); ++j) vals[j] = f(x[j]);
    pieces.push_back(fit_univariate(vals, breakpoints[i], breakpoints[i + 1]));
  }
  return PiecewiseChebyshev(std::move(pieces));
}

namespace detail {

inline ChebyshevPiece anti_piece(const ChebyshevPiece& p, bool anchor_left, double anchor) {
  auto anti = antiderivative_coeffs(p.coeffs);
  anti.pop_back();  // degree k+1 term; the piece stays order k
  const double h = (p.b - p.a) / 2.0;
  for (double& c : anti) c *= h;
  double end = 0.0;
  for (std::size_t m = 0; m < anti.size(); ++m)
    end += anti[m] * ((anchor_left && (m % 2)) ? -1.0 : 1.0);
  anti[0] += anchor - end;
  return ChebyshevPiece{p.a, p.b, std::move(anti)};
}

}  // namespace detail

/// x -> c0 + int_{a_1}^x p, accumulated left to right.
inline PiecewiseChebyshev spectral_integrate(const PiecewiseChebyshev& p, double c0) {
  std::vector<ChebyshevPiece> out;
  out.reserve(p.num_pieces());
  double acc = c0;
  for (const auto& piece : p.pieces()) {
    out.push_back(detail::anti_piece(piece, true, acc));
    acc += piece.integral();
  }
  return PiecewiseChebyshev(std::move(out));
}

/// x -> c_end - int_x^{a_m} p, accumulated right to left. Small values near
/// the right end keep their relative accuracy.
inline PiecewiseChebyshev spectral_integrate_from_right(const PiecewiseChebyshev& p,
                                                        double c_end) {
  std::vector<ChebyshevPiece> out(p.num_pieces());
  double acc = c_end;
  for (std::size_t i = p.num_pieces(); i-- > 0;) {
    const auto& piece = p.pieces()[i];
    out[i] = detail::anti_piece(piece, false, acc);
    acc -= piece.integral();
  }
  return PiecewiseChebyshev(std::move(out));
}

/// Integral of p over its whole domain.
inline double cc_quadrature(const PiecewiseChebyshev& p) {
  double s = 0.0;
  for (const auto& piece : p.pieces()) s += piece.integral();
  return s;
}

// ---------------------------------------------------------------------------
// Bivariate expansions

/// Triangular storage index of beta_{i,j}: graded by i+j, then by i.
inline constexpr std::size_t tri_index(std::size_t i, std::size_t j) {
  const std::size_t s = i + j;
  return s * (s + 1) / 2 + i;
}

inline constexpr std::size_t tri_count(int k) {
  return static_cast<std::size_t>(k + 1) * static_cast<std::size_t>(k + 2) / 2;
}

struct BivariatePiece {
  double a = -1.0, b = 1.0, c = -1.0, d = 1.0;
  int k = 0;
  std::vector<double> coeffs;  // tri_count(k) entries
};

/// Full tensor coefficients C[i*(k+1)+j] from samples[i*(k+1)+j] =
/// f(x_i, y_j) on the tensor grid.
inline std::vector<double> tensor_coefficients(std::span<const double> samples, int k) {
  const auto& o = ops(k);
  const std::size_t n = o.size();
  if (samples.size() != n * n) throw domain_error("tensor_coefficients: shape mismatch");
  std::vector<double> tmp(n * n, 0.0), out(n * n, 0.0);
  // tmp = M * F
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < n; ++l) {
      const double m = o.to_coeffs[i * n + l];
      for (std::size_t j = 0; j < n; ++j) tmp[i * n + j] += m * samples[l * n + j];
    }
  // out = tmp * M^T
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < n; ++l) s += tmp[i * n + l] * o.to_coeffs[j * n + l];
      out[i * n + j] = s;
    }
  return out;
}

/// Order-k bivariate fit on [a,b]x[c,d]; coefficients with i+j > k are
/// discarded from the tensor fit.
inline BivariatePiece fit_bivariate(std::span<const double> samples, int k, double a, double b,
                                    double c, double d) {
  if (!(a < b) || !(c < d)) throw domain_error("fit_bivariate: degenerate rectangle");
  const std::size_t n = static_cast<std::size_t>(k) + 1;
  if (samples.size() != n * n) throw domain_error("fit_bivariate: shape mismatch");
  const auto full = tensor_coefficients(samples, k);
  BivariatePiece p{a, b, c, d, k, std::vector<double>(tri_count(k), 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; i + j < n; ++j) p.coeffs[tri_index(i, j)] = full[i * n + j];
  return p;
}

namespace detail {

inline void cheb_values(double s, std::span<double> t) {
  t[0] = 1.0;
  if (t.size() > 1) t[1] = s;
  for (std::size_t i = 2; i < t.size(); ++i) t[i] = 2.0 * s * t[i - 1] - t[i - 2];
}

inline double mapped_checked(double x, double lo, double hi, const char* what) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (!(x >= std::nextafter(lo, -inf) && x <= std::nextafter(hi, inf))) {
    std::ostringstream msg;
    msg << "eval_bivariate: " << what << "=" << x << " outside [" << lo << ", " << hi << "]";
    throw domain_error(msg.str());
  }
  return std::clamp((2.0 * x - (lo + hi)) / (hi - lo), -1.0, 1.0);
}

}  // namespace detail

/// Evaluate the triangular sum from a raw coefficient span.
inline double eval_bivariate_raw(std::span<const double> coeffs, int k, double sx, double sy) {
  constexpr int max_k = 64;
  double tx[max_k + 1], ty[max_k + 1];
  const std::size_t n = static_cast<std::size_t>(k) + 1;
  detail::cheb_values(sx, std::span<double>(tx, n));
  detail::cheb_values(sy, std::span<double>(ty, n));
  double sum = 0.0;
  std::size_t idx = 0;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i <= s; ++i) sum += coeffs[idx++] * tx[i] * ty[s - i];
  }
  return sum;
}

inline double eval_bivariate(const BivariatePiece& p, double x, double y) {
  if (p.k > 64) throw domain_error("eval_bivariate: order above 64 unsupported");
  const double sx = detail::mapped_checked(x, p.a, p.b, "x");
  const double sy = detail::mapped_checked(y, p.c, p.d, "y");
  return eval_bivariate_raw(p.coeffs, p.k, sx, sy);
}

// ---------------------------------------------------------------------------
// Adaptive discretization

struct AdaptiveOptions {
  int order = default_order;
  double eps = 1e-14;
  int max_intervals = 300;
  /// Points of the uniform probe used to estimate each component's scale;
  /// 0 disables the probe.
  int probe_points = 200;
  double probe_floor = 1e-3;
  /// Optional absolute denominator floors, one per component.
  std::vector<double> scales;
};

struct Discretization {
  std::vector<double> breakpoints;
  std::vector<PiecewiseChebyshev> components;
};

namespace detail {

template <class F>
Discretization adaptive_impl(F&& f, std::vector<std::pair<double, double>> todo_init,
                             const AdaptiveOptions& opt) {
  if (!(opt.eps > 0.0)) throw domain_error("adaptive_discretize: eps must be positive");
  if (todo_init.empty()) throw domain_error("adaptive_discretize: empty partition");
  const double a = todo_init.front().first, b = todo_init.back().second;
  const int k = opt.order;
  const std::size_t n = static_cast<std::size_t>(k) + 1;

  std::vector<double> floors = opt.scales;
  if (opt.probe_points > 1) {
    for (int i = 0; i < opt.probe_points; ++i) {
      const double x = (i + 1 == opt.probe_points)
                           ? b
                           : a + (b - a) * static_cast<double>(i) / (opt.probe_points - 1);
      const auto v = f(x);
      if (floors.size() < v.size()) floors.resize(v.size(), 0.0);
      for (std::size_t c = 0; c < v.size(); ++c)
        floors[c] = std::max(floors[c], opt.probe_floor * std::abs(v[c]));
    }
  }

  struct Accepted {
    double a, b;
    std::vector<std::vector<double>> coeffs;
  };
  std::vector<Accepted> out;
  std::deque<std::pair<double, double>> todo(todo_init.begin(), todo_init.end());
  std::size_t dim = 0;
  std::vector<std::vector<double>> samples;

  while (!todo.empty()) {
    if (out.size() + todo.size() > static_cast<std::size_t>(opt.max_intervals)) {
      std::ostringstream msg;
      msg << "adaptive_discretize: more than " << opt.max_intervals << " intervals on [" << a
          << ", " << b << "]";
      throw solver_failure(msg.str());
    }
    auto [lo, hi] = todo.front();
    todo.pop_front();
    const auto x = cheb_grid(k, lo, hi);
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = f(x[j]);
      if (dim == 0) {
        dim = v.size();
        if (dim == 0) throw domain_error("adaptive_discretize: function returned no values");
      }
      if (v.size() != dim) throw domain_error("adaptive_discretize: inconsistent dimension");
      if (samples.size() != dim) samples.assign(dim, std::vector<double>(n));
      for (std::size_t c = 0; c < dim; ++c) samples[c][j] = v[c];
    }
    if (floors.size() < dim) floors.resize(dim, 0.0);
    std::vector<std::vector<double>> coeffs(dim);
    double worst = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      coeffs[c] = values_to_coeffs(samples[c]);
      worst = std::max(worst, tail_ratio(coeffs[c], floors[c]));
    }
    if (worst < opt.eps) {
      out.push_back({lo, hi, std::move(coeffs)});
      continue;
    }
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) {
      std::ostringstream msg;
      msg << "adaptive_discretize: interval collapsed near " << lo;
      throw solver_failure(msg.str());
    }
    todo.emplace_back(lo, mid);
    todo.emplace_back(mid, hi);
  }

  std::sort(out.begin(), out.end(), [](const Accepted& l, const Accepted& r) { return l.a < r.a; });
  Discretization d;
  d.breakpoints.push_back(out.front().a);
  for (const auto& o : out) d.breakpoints.push_back(o.b);
  for (std::size_t c = 0; c < dim; ++c) {
    std::vector<ChebyshevPiece> pieces;
    pieces.reserve(out.size());
    for (const auto& o : out) pieces.push_back(ChebyshevPiece{o.a, o.b, o.coeffs[c]});
    d.components.emplace_back(std::move(pieces));
  }
  return d;
}

}  // namespace detail

/// Adaptive order-k discretization of a vector-valued f on [a,b]. Every
/// accepted interval satisfies max_c tail_ratio < eps.
template <class F>
Discretization adaptive_discretize(F&& f, double a, double b, const AdaptiveOptions& opt = {}) {
  if (!(a < b)) throw domain_error("adaptive_discretize: degenerate interval");
  return detail::adaptive_impl(std::forward<F>(f), {{a, b}}, opt);
}

/// As above, seeded with an existing partition (intervals only get split).
template <class F>
Discretization adaptive_discretize(F&& f, std::span<const double> breakpoints,
                                   const AdaptiveOptions& opt = {}) {
  if (breakpoints.size() < 2) throw domain_error("adaptive_discretize: need >= 2 breakpoints");
  std::vector<std::pair<double, double>> init;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i] < breakpoints[i + 1]))
      throw domain_error("adaptive_discretize: breakpoints not increasing");
    init.emplace_back(breakpoints[i], breakpoints[i + 1]);
  }
  return detail::adaptive_impl(std::forward<F>(f), std::move(init), opt);
}

}  // namespace pswf::cheb
