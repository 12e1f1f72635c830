#pragma once

// Legendre polynomials and the Legendre-Galerkin baseline: eigenvalues chi_n
// and Legendre coefficients of ps_n from a symmetric tridiagonal matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "pswf/errors.hpp"

namespace pswf::xr {

enum class Parity { even = 0, odd = 1 };

inline Parity parity_of(long n) { return (n % 2 == 0) ? Parity::even : Parity::odd; }

/// (P_m(x), P_m'(x)) by upward recurrence.
inline std::pair<double, double> legendre_eval(int m, double x) {
  if (m < 0) throw domain_error("legendre_eval: negative degree");
  if (!(std::abs(x) <= 1.0)) throw domain_error("legendre_eval: |x| > 1");
  if (m == 0) return {1.0, 0.0};
  double p0 = 1.0, p1 = x;
  for (int l = 1; l < m; ++l) {
    const double p2 = ((2.0 * l + 1.0) * x * p1 - l * p0) / (l + 1.0);
    p0 = p1;
    p1 = p2;
  }
  const double md = static_cast<double>(m);
  double dp;
  if (std::abs(x) == 1.0) {
    dp = 0.5 * md * (md + 1.0) * ((m % 2 == 0) ? x : 1.0);
  } else {
    dp = md * (p0 - x * p1) / ((1.0 - x) * (1.0 + x));
  }
  return {p1, dp};
}

/// Galerkin matrix of the prolate operator in the orthonormal Legendre basis
/// restricted to one parity class; row j has degree 2j + parity.
struct TridiagonalOperator {
  Parity parity = Parity::even;
  double gamma = 0.0;
  std::vector<double> diag;
  std::vector<double> offdiag;

  std::size_t dim() const { return diag.size(); }
  int degree(std::size_t j) const { return 2 * static_cast<int>(j) + static_cast<int>(parity); }
};

inline double xr_diag_entry(double gamma, double m) {
  const double g2 = gamma * gamma;
  return m * (m + 1.0) + g2 * (2.0 * m * m + 2.0 * m - 1.0) / ((2.0 * m - 1.0) * (2.0 * m + 3.0));
}

/// Coupling between degrees m and m+2.
inline double xr_offdiag_entry(double gamma, double m) {
  const double g2 = gamma * gamma;
  return g2 * (m + 1.0) * (m + 2.0) / ((2.0 * m + 3.0) * std::sqrt((2.0 * m + 1.0) * (2.0 * m + 5.0)));
}

inline TridiagonalOperator build_tridiagonal(double gamma, Parity parity, std::size_t dim) {
  if (dim < 2) throw domain_error("build_tridiagonal: dim must be >= 2");
  TridiagonalOperator op;
  op.parity = parity;
  op.gamma = gamma;
  op.diag.resize(dim);
  op.offdiag.resize(dim - 1);
  for (std::size_t j = 0; j < dim; ++j) {
    const double m = op.degree(j);
    op.diag[j] = xr_diag_entry(gamma, m);
    if (j + 1 < dim) op.offdiag[j] = xr_offdiag_entry(gamma, m);
  }
  return op;
}

/// Default matrix dimension for index n: ceil(n + sqrt(n*gamma)) + 16 rows per
/// parity class.
inline std::size_t xr_dimension(long n, double gamma) {
  if (n < 0) throw domain_error("xr_dimension: negative n");
  const double d = std::ceil(static_cast<double>(n) + std::sqrt(static_cast<double>(n) * gamma)) + 16.0;
  if (!(d < 5.0e7)) throw domain_error("xr_dimension: matrix dimension overflow");
  return static_cast<std::size_t>(d);
}

/// Number of eigenvalues strictly below lambda (Sturm sequence).
inline std::size_t sturm_count(const TridiagonalOperator& op, double lambda) {
  const std::size_t n = op.dim();
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  std::size_t count = 0;
  double d = op.diag[0] - lambda;
  for (std::size_t i = 0;; ++i) {
    if (d == 0.0) d = -tiny;
    if (d < 0.0) ++count;
    if (i + 1 == n) break;
    const double e = op.offdiag[i];
    d = op.diag[i + 1] - lambda - e * e / d;
  }
  return count;
}

/// The index-th smallest eigenvalue (0-based), bisected to adjacent doubles.
inline double tridiagonal_eigenvalue(const TridiagonalOperator& op, std::size_t index) {
  if (index >= op.dim()) throw domain_error("tridiagonal_eigenvalue: index out of range");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < op.dim(); ++i) {
    const double r = (i > 0 ? std::abs(op.offdiag[i - 1]) : 0.0) +
                     (i + 1 < op.dim() ? std::abs(op.offdiag[i]) : 0.0);
    lo = std::min(lo, op.diag[i] - r);
    hi = std::max(hi, op.diag[i] + r);
  }
  lo -= 1.0;
  hi += 1.0;
  // invariant: count(lo) <= index < count(hi)
  for (;;) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (sturm_count(op, mid) > index) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

inline double chi_xr(long n, double gamma, std::size_t dim) {
  if (n < 0) throw domain_error("chi_xr: n must be nonnegative");
  if (gamma < 0.0) throw domain_error("chi_xr: gamma must be nonnegative");
  const std::size_t idx = static_cast<std::size_t>(n / 2);
  const auto op = build_tridiagonal(gamma, parity_of(n), std::max<std::size_t>(dim, idx + 2));
  return tridiagonal_eigenvalue(op, idx);
}

/// chi_n(gamma^2) from the default-dimension matrix.
inline double chi_xr(long n, double gamma) { return chi_xr(n, gamma, xr_dimension(n, gamma)); }

/// ps_n as a Legendre series: sum_j coeffs[j] * Pbar_{m_j}, Pbar_m = sqrt(m+1/2) P_m.
struct ProlateLegendreExpansion {
  long n = 0;
  double gamma = 0.0;
  double chi = 0.0;
  Parity parity = Parity::even;
  std::vector<double> coeffs;

  int degree(std::size_t j) const { return 2 * static_cast<int>(j) + static_cast<int>(parity); }
};

namespace detail {

// Solve (T - shift I) y = rhs by Gaussian elimination with partial pivoting.
// Returns false on an exactly singular pivot.
inline bool shifted_tridiagonal_solve(const TridiagonalOperator& op, double shift,
                                      std::vector<double>& rhs) {
  const std::size_t n = op.dim();
  // row i after elimination: u0[i] x_i + u1[i] x_{i+1} + u2[i] x_{i+2}
  std::vector<double> u0(n), u1(n, 0.0), u2(n, 0.0);
  double c0 = op.diag[0] - shift, c1 = n > 1 ? op.offdiag[0] : 0.0, c2 = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    // candidate rows: current (c0,c1,c2) and original row i+1 (sub, d, sup)
    const double sub = op.offdiag[i];
    double d = op.diag[i + 1] - shift;
    double sup = (i + 2 < n) ? op.offdiag[i + 1] : 0.0;
    if (std::abs(sub) > std::abs(c0)) {
      std::swap(rhs[i], rhs[i + 1]);
      u0[i] = sub;
      u1[i] = d;
      u2[i] = sup;
      const double l = c0 / sub;
      rhs[i + 1] -= l * rhs[i];
      c0 = c1 - l * d;
      c1 = c2 - l * sup;
      c2 = 0.0;
    } else {
      if (c0 == 0.0) return false;
      u0[i] = c0;
      u1[i] = c1;
      u2[i] = c2;
      const double l = sub / c0;
      rhs[i + 1] -= l * rhs[i];
      c0 = d - l * c1;
      c1 = sup - l * c2;
      c2 = 0.0;
    }
  }
  u0[n - 1] = c0;
  if (c0 == 0.0) return false;
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    if (i + 1 < n) s -= u1[i] * rhs[i + 1];
    if (i + 2 < n) s -= u2[i] * rhs[i + 2];
    rhs[i] = s / u0[i];
  }
  return true;
}

}  // namespace detail

inline double ps_xr_eval(const ProlateLegendreExpansion& e, double x);

namespace detail {

// Sign of ps at x = 1. The coefficient sum sum_j c_j sqrt(m_j + 1/2) is the
// value at 1, but past a turning point that value is exponentially small and
// the sum is rounding noise; ps has no zeros beyond the turning point, so the
// value there carries the same sign.
inline double value_at_one_sign(const ProlateLegendreExpansion& e) {
  double s = 0.0, mag = 0.0;
  for (std::size_t j = 0; j < e.coeffs.size(); ++j) {
    const double w = e.coeffs[j] * std::sqrt(e.degree(j) + 0.5);
    s += w;
    mag += std::abs(w);
  }
  if (std::abs(s) > 1e-8 * mag) return s;
  const double g2 = e.gamma * e.gamma, b = e.chi + g2;
  const double disc = b * b - 4.0 * g2 * (e.chi + 1.0);
  if (disc < 0.0) return s;
  const double y = 2.0 * (e.chi + 1.0) / (b + std::sqrt(disc));
  if (!(y > 0.0 && y < 1.0)) return s;
  return ps_xr_eval(e, std::sqrt(y));
}

}  // namespace detail

inline ProlateLegendreExpansion legendre_coeffs_xr(long n, double gamma, std::size_t dim) {
  const double chi = chi_xr(n, gamma, dim);
  const auto op = build_tridiagonal(gamma, parity_of(n), std::max<std::size_t>(dim, n / 2 + 2));
  const std::size_t N = op.dim();

  double shift = chi;
  for (int attempt = 0; attempt <= 5; ++attempt) {
    std::vector<double> y(N);
    for (std::size_t j = 0; j < N; ++j) y[j] = 1.0 + 0.25 * std::sin(1.0 + static_cast<double>(j));
    bool ok = true;
    for (int it = 0; it < 3 && ok; ++it) {
      ok = detail::shifted_tridiagonal_solve(op, shift, y);
      if (!ok) break;
      double nrm = 0.0;
      for (double v : y) nrm += v * v;
      nrm = std::sqrt(nrm);
      if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        ok = false;
        break;
      }
      for (double& v : y) v /= nrm;
    }
    if (ok) {
      ProlateLegendreExpansion e;
      e.n = n;
      e.gamma = gamma;
      e.chi = chi;
      e.parity = op.parity;
      e.coeffs = std::move(y);
      if (detail::value_at_one_sign(e) < 0.0)
        for (double& v : e.coeffs) v = -v;
      return e;
    }
    shift = chi + ((attempt % 2 == 0) ? 1.0 : -1.0) * 1e-13 * std::abs(chi) * (attempt / 2 + 1);
  }
  std::ostringstream msg;
  msg << "legendre_coeffs_xr: inverse iteration broke down for n=" << n << ", gamma=" << gamma;
  throw solver_failure(msg.str());
}

inline ProlateLegendreExpansion legendre_coeffs_xr(long n, double gamma) {
  return legendre_coeffs_xr(n, gamma, xr_dimension(n, gamma));
}

/// ||(T - chi I) c||_2 for a computed expansion.
inline double eigen_residual(const ProlateLegendreExpansion& e) {
  const auto op = build_tridiagonal(e.gamma, e.parity, e.coeffs.size());
  double r2 = 0.0;
  const auto& c = e.coeffs;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double r = (op.diag[i] - e.chi) * c[i];
    if (i > 0) r += op.offdiag[i - 1] * c[i - 1];
    if (i + 1 < c.size()) r += op.offdiag[i] * c[i + 1];
    r2 += r * r;
  }
  return std::sqrt(r2);
}

namespace detail {

/// Forward sweep of P_0..P_mmax at x >= 0, calling visit(l, P_l, P_{l-1}).
/// For x > 1/2 the recurrence runs on D_l = P_l - P_{l-1}, driven by the
/// exact u = x - 1, which keeps the sweep accurate as x -> 1.
template <class F>
void legendre_sweep(double x, int mmax, F&& visit) {
  double p0 = 1.0, p1 = x;  // P_{l-1}, P_l with l = 1
  if (x > 0.5) {
    const double u = x - 1.0;
    double d = u;  // P_1 - P_0
    for (int l = 1; l < mmax; ++l) {
      d = ((2.0 * l + 1.0) * u * p1 + l * d) / (l + 1.0);
      p0 = p1;
      p1 += d;
      visit(l + 1, p1, p0);
    }
  } else {
    for (int l = 1; l < mmax; ++l) {
      const double p2 = ((2.0 * l + 1.0) * x * p1 - l * p0) / (l + 1.0);
      p0 = p1;
      p1 = p2;
      visit(l + 1, p1, p0);
    }
  }
}

}  // namespace detail

/// Value and derivative of the Legendre series at x, one recurrence sweep.
inline std::pair<double, double> ps_xr_eval_with_derivative(const ProlateLegendreExpansion& e,
                                                            double x) {
  if (!(std::abs(x) <= 1.0)) throw domain_error("ps_xr_eval: |x| > 1");
  const int odd = static_cast<int>(e.parity);
  const int mmax = 2 * static_cast<int>(e.coeffs.size()) - 2 + odd;
  const double ax = std::abs(x);
  double val = 0.0, der = 0.0;
  const bool endpoint = ax == 1.0;
  const double om = (1.0 - ax) * (1.0 + ax);
  auto add = [&](int m, double pm, double pm1) {
    const double w = e.coeffs[static_cast<std::size_t>((m - odd) / 2)] * std::sqrt(m + 0.5);
    val += w * pm;
    if (m == 0) return;
    if (endpoint) {
      der += w * 0.5 * m * (m + 1.0);
    } else {
      der += w * m * (pm1 - ax * pm) / om;
    }
  };
  if (odd == 0) add(0, 1.0, 0.0);
  else add(1, ax, 1.0);
  detail::legendre_sweep(ax, mmax, [&](int m, double pm, double pm1) {
    if ((m & 1) == odd) add(m, pm, pm1);
  });
  // ps_n has the parity of n; its derivative the opposite
  if (x < 0.0) return {odd ? -val : val, odd ? der : -der};
  return {val, der};
}

inline double ps_xr_eval(const ProlateLegendreExpansion& e, double x) {
  if (!(std::abs(x) <= 1.0)) throw domain_error("ps_xr_eval: |x| > 1");
  const int odd = static_cast<int>(e.parity);
  const int mmax = 2 * static_cast<int>(e.coeffs.size()) - 2 + odd;
  const auto& c = e.coeffs;
  const double ax = std::abs(x);
  double val = odd ? c[0] * std::sqrt(1.5) * ax : c[0] * std::sqrt(0.5);
  std::size_t j = 1;
  detail::legendre_sweep(ax, mmax, [&](int m, double pm, double) {
    if ((m & 1) == odd) val += c[j++] * std::sqrt(m + 0.5) * pm;
  });
  return (x < 0.0 && odd) ? -val : val;
}

}  // namespace pswf::xr
