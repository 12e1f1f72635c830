#pragma once

// Normal form of the spheroidal wave equation, W <-> Psi derivative algebra,
// and an adaptive spectral solver for Appell's equation
//   w''' + 4 q w' + 2 q' w = 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pswf/chebkit.hpp"
#include "pswf/errors.hpp"

namespace pswf {

struct SWEParameters {
  double gamma = 0.0;
  double chi = 0.0;
};

struct QValue {
  double q = 0.0;
  double dq = 0.0;
};

/// q(x) = 1/(1-x^2)^2 + (chi - gamma^2 x^2)/(1-x^2) and its derivative.
inline QValue q_eval(const SWEParameters& p, double x) {
  if (!(std::abs(x) < 1.0)) throw domain_error("q_eval: |x| must be < 1");
  const double om = (1.0 - x) * (1.0 + x);
  const double g2 = p.gamma * p.gamma;
  const double r = p.chi - g2 * x * x;
  const double q = 1.0 / (om * om) + r / om;
  const double dq = 4.0 * x / (om * om * om) + (-2.0 * g2 * x * om + 2.0 * x * r) / (om * om);
  return {q, dq};
}

/// q and dq/dt as functions of t = 1 - x. Near x = 1 the double t carries
/// full relative precision, which x itself cannot. Appell's equation keeps its
/// form under x -> 1 - t.
inline QValue q_eval_t(const SWEParameters& p, double t) {
  if (!(t > 0.0 && t < 2.0)) throw domain_error("q_eval_t: t must lie in (0,2)");
  const double x = 1.0 - t;
  const double om = t * (2.0 - t);
  const double g2 = p.gamma * p.gamma;
  const double r = p.chi - g2 * x * x;
  const double q = 1.0 / (om * om) + r / om;
  const double dq = 4.0 * x / (om * om * om) + (-2.0 * g2 * x * om + 2.0 * x * r) / (om * om);
  return {q, -dq};
}

/// Phase data at x = 0 together with the parameter chi.
struct PhaseSeed {
  double psi0 = 0.0;
  double dpsi0 = 0.0;
  double d2psi0 = 0.0;
  double d3psi0 = 0.0;
  double chi = 0.0;
};

/// Triples (f, f', f'') or (f', f'', f''') at one point.
using Triple = std::array<double, 3>;

/// (W, W', W'') -> (Psi', Psi'', Psi''').
inline Triple psi_from_w(const Triple& w) {
  const double W = w[0], W1 = w[1], W2 = w[2];
  if (!(W > 0.0)) throw domain_error("psi_from_w: W must be positive");
  return {1.0 / W, -W1 / (W * W), -W2 / (W * W) + 2.0 * W1 * W1 / (W * W * W)};
}

/// (Psi', Psi'', Psi''') -> (W, W', W'').
inline Triple w_from_psi(const Triple& d) {
  const double P1 = d[0], P2 = d[1], P3 = d[2];
  if (!(P1 > 0.0)) throw domain_error("w_from_psi: Psi' must be positive");
  return {1.0 / P1, -P2 / (P1 * P1), -P3 / (P1 * P1) + 2.0 * P2 * P2 / (P1 * P1 * P1)};
}

/// W''' from Appell's equation itself.
inline double w_third(double q, double dq, double W, double W1) { return -4.0 * q * W1 - 2.0 * dq * W; }

/// 2 W W'' - W'^2 + 4 q W^2; equals 4 for the unit-Wronskian pair.
inline double appell_invariant(double W, double W1, double W2, double q) {
  return 2.0 * W * W2 - W1 * W1 + 4.0 * q * W * W;
}

/// Magnitude of the largest term of the invariant; the natural scale for its
/// relative drift where W is large.
inline double appell_invariant_scale(double W, double W1, double W2, double q) {
  return std::max({4.0, std::abs(2.0 * W * W2), W1 * W1, std::abs(4.0 * q * W * W)});
}

struct AppellOptions {
  int order = cheb::default_order;
  double eps = 1e-12;
  int max_intervals = 1200;
  double min_width = 1e-13;
  /// Stop once W exceeds this value (0 disables); the solve is then marked
  /// truncated at the last accepted endpoint.
  double growth_cap = 0.0;
};

/// Nodal data of one accepted collocation interval, nodes descending.
struct AppellPiece {
  double a = 0.0, b = 0.0;
  std::vector<double> x, W, W1, W2;
};

struct AppellSolution {
  double x_start = 0.0;   // where the initial conditions were imposed
  double x_target = 0.0;  // requested end
  double x_end = 0.0;     // reached end (== x_target unless truncated)
  bool truncated = false;
  Triple end_values{};  // (W, W', W'') at x_end
  std::vector<AppellPiece> pieces;  // ascending in x

  double a() const { return pieces.front().a; }
  double b() const { return pieces.back().b; }
  std::vector<double> breakpoints() const {
    std::vector<double> br{pieces.front().a};
    for (const auto& p : pieces) br.push_back(p.b);
    return br;
  }
  cheb::PiecewiseChebyshev component(int which) const {
    std::vector<cheb::ChebyshevPiece> out;
    out.reserve(pieces.size());
    for (const auto& p : pieces) {
      const auto& v = which == 0 ? p.W : which == 1 ? p.W1 : p.W2;
      out.push_back(cheb::fit_univariate(v, p.a, p.b));
    }
    return cheb::PiecewiseChebyshev(std::move(out));
  }
  cheb::PiecewiseChebyshev W() const { return component(0); }
  cheb::PiecewiseChebyshev dW() const { return component(1); }
  cheb::PiecewiseChebyshev d2W() const { return component(2); }
};

namespace detail {

// One collocation step on [lo,hi] with initial data at the left end
// (forward) or the right end (backward).
template <class Coef>
AppellPiece appell_step(Coef& coef, double lo, double hi, const Triple& ic, bool forward, int k) {
  const auto& o = cheb::ops(k);
  const std::size_t n = o.size();
  const double h = (hi - lo) / 2.0;
  const auto& J1 = forward ? o.int_left : o.int_right;
  const auto& J2 = forward ? o.int_left2 : o.int_right2;
  const auto& J3 = forward ? o.int_left3 : o.int_right3;
  AppellPiece piece;
  piece.a = lo;
  piece.b = hi;
  piece.x = cheb::cheb_grid(k, lo, hi);
  const double x0 = forward ? lo : hi;
  const double w0 = ic[0], w1 = ic[1], w2 = ic[2];
  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd rhs(n);
  std::vector<double> d(n);
  const double h2 = h * h, h3 = h2 * h;
  for (std::size_t i = 0; i < n; ++i) {
    const auto qv = coef(piece.x[i]);
    d[i] = piece.x[i] - x0;
    for (std::size_t j = 0; j < n; ++j)
      A(i, j) = 4.0 * qv.q * h2 * J2[i * n + j] + 2.0 * qv.dq * h3 * J3[i * n + j];
    A(i, i) += 1.0;
    rhs(i) = -4.0 * qv.q * (w1 + d[i] * w2) - 2.0 * qv.dq * (w0 + d[i] * w1 + 0.5 * d[i] * d[i] * w2);
  }
  const Eigen::VectorXd s = A.partialPivLu().solve(rhs);
  piece.W.resize(n);
  piece.W1.resize(n);
  piece.W2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double j1 = 0.0, j2 = 0.0, j3 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      j1 += J1[i * n + j] * s(j);
      j2 += J2[i * n + j] * s(j);
      j3 += J3[i * n + j] * s(j);
    }
    piece.W2[i] = w2 + h * j1;
    piece.W1[i] = w1 + d[i] * w2 + h2 * j2;
    piece.W[i] = w0 + d[i] * w1 + 0.5 * d[i] * d[i] * w2 + h3 * j3;
  }
  // the anchor node carries the initial data exactly
  const std::size_t anchor = forward ? n - 1 : 0;
  piece.W[anchor] = w0;
  piece.W1[anchor] = w1;
  piece.W2[anchor] = w2;
  return piece;
}

}  // namespace detail

/// Adaptive solve of Appell's equation from x0 (with (W,W',W'') = ic) to
/// x_end. coef(x) must return a QValue {q(x), q'(x)}.
template <class Coef>
  requires std::invocable<Coef&, double>
AppellSolution appell_solve(Coef&& coef, double x0, double x_end, const Triple& ic,
                            const AppellOptions& opt = {}) {
  if (!(ic[0] > 0.0)) throw domain_error("appell_solve: W(x0) must be positive");
  if (!std::isfinite(x0) || !std::isfinite(x_end)) throw domain_error("appell_solve: bad interval");
  if (x0 == x_end) throw domain_error("appell_solve: empty interval");
  const bool forward = x_end > x0;
  const int k = opt.order;
  constexpr double u = std::numeric_limits<double>::epsilon();

  AppellSolution sol;
  sol.x_start = x0;
  sol.x_target = x_end;
  sol.x_end = x_end;
  Triple cur = ic;
  // (start, stop) in direction of travel; top of stack is processed next
  std::vector<std::pair<double, double>> stack{{x0, x_end}};
  long attempts = 0;
  const long max_attempts = 40L * opt.max_intervals;

  while (!stack.empty()) {
    auto [s0, s1] = stack.back();
    stack.pop_back();
    if (++attempts > max_attempts ||
        static_cast<int>(sol.pieces.size()) >= opt.max_intervals) {
      std::ostringstream msg;
      msg << "appell_solve: interval budget exhausted near x=" << s0;
      throw solver_failure(msg.str());
    }
    const double lo = std::min(s0, s1), hi = std::max(s0, s1);
    auto piece = detail::appell_step(coef, lo, hi, cur, forward, k);

    double wmax = 0.0, w1max = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < piece.W.size(); ++i) {
      wmax = std::max(wmax, std::abs(piece.W[i]));
      w1max = std::max(w1max, std::abs(piece.W1[i]));
      finite = finite && std::isfinite(piece.W[i]) && std::isfinite(piece.W1[i]) &&
               std::isfinite(piece.W2[i]);
    }
    const double floor = wmax > 0.0 ? 100.0 * u * std::max(std::abs(lo), std::abs(hi)) * w1max / wmax : 0.0;
    const double delta = finite ? cheb::tail_ratio(cheb::values_to_coeffs(piece.W)) : 1.0;
    const bool narrow = (hi - lo) < opt.min_width;
    if (finite && (delta < std::max(opt.eps, floor) || narrow)) {
      for (double w : piece.W) {
        if (!(w > 0.0)) {
          std::ostringstream msg;
          msg << "appell_solve: W <= 0 on [" << lo << ", " << hi << "]";
          throw solver_failure(msg.str());
        }
      }
      const std::size_t e = forward ? 0 : piece.W.size() - 1;
      cur = {piece.W[e], piece.W1[e], piece.W2[e]};
      sol.pieces.push_back(std::move(piece));
      if (opt.growth_cap > 0.0 && cur[0] > opt.growth_cap && !stack.empty()) {
        sol.truncated = true;
        sol.x_end = s1;
        break;
      }
      continue;
    }
    if (!finite && narrow) throw solver_failure("appell_solve: non-finite solution");
    const double mid = 0.5 * (s0 + s1);
    if (!(mid != s0 && mid != s1)) throw solver_failure("appell_solve: interval collapsed");
    stack.emplace_back(mid, s1);
    stack.emplace_back(s0, mid);
  }
  sol.end_values = cur;
  if (!forward) std::reverse(sol.pieces.begin(), sol.pieces.end());
  return sol;
}

/// Appell solve for the spheroidal normal form.
inline AppellSolution appell_solve(const SWEParameters& p, double x0, double x_end, const Triple& ic,
                                   const AppellOptions& opt = {}) {
  if (!(std::abs(x0) < 1.0) || !(std::abs(x_end) < 1.0))
    throw domain_error("appell_solve: interval must lie in (-1,1)");
  return appell_solve([&p](double x) { return q_eval(p, x); }, x0, x_end, ic, opt);
}

}  // namespace pswf
