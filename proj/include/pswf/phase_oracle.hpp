#pragma once

// Phase seed (Psi(0), Psi'(0), Psi''(0), Psi'''(0)) for arbitrary (gamma, chi).
//
// W at 0 comes from a windowed problem: q is blended to the constant q(c) on
// [0,c], where the nonoscillatory solution is exactly q(c)^{-1/2}, and Appell's
// equation is transported back to 0. The constant of integration comes from
// matching against the Frobenius solution that is bounded at x = 1.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "pswf/chebkit.hpp"
#include "pswf/errors.hpp"
#include "pswf/swe_core.hpp"

namespace pswf {

/// Smallest root of q in (0,1), if any.
inline std::optional<double> turning_point(const SWEParameters& p) {
  const double g2 = p.gamma * p.gamma;
  if (!(g2 > 0.0)) return std::nullopt;
  // q = 0  <=>  g2 y^2 - (chi + g2) y + chi + 1 = 0 with y = x^2
  const double b = p.chi + g2;
  const double disc = b * b - 4.0 * g2 * (p.chi + 1.0);
  if (disc < 0.0) return std::nullopt;
  const double y = 2.0 * (p.chi + 1.0) / (b + std::sqrt(disc));
  if (!(y > 0.0 && y < 1.0)) return std::nullopt;
  return std::sqrt(y);
}

struct WindowProfile {
  double c = 0.5;
  double s = 12.0;

  double phi(double x) const { return 0.5 * (1.0 + std::erf(s * (x / c - 0.5))); }
  double dphi(double x) const {
    const double z = s * (x / c - 0.5);
    return s / (c * std::sqrt(std::numbers::pi)) * std::exp(-z * z);
  }
};

inline WindowProfile default_window(const SWEParameters& p, double steepness = 12.0) {
  const auto xt = turning_point(p);
  return WindowProfile{xt ? std::min(0.9 * *xt, 0.5) : 0.5, steepness};
}

struct PhaseOracleOptions {
  int order = cheb::default_order;
  double eps = 1e-12;
  double steepness = 12.0;
  /// Window endpoint; 0 selects min(0.9 x_t, 0.5).
  double window_c = 0.0;
  /// Matching distance from x = 1; 0 selects default_match_delta.
  double delta = 0.0;
  /// The forward solve stops once W exceeds growth_factor * W(0).
  double growth_factor = 1e40;
};

/// Windowed initialization for an arbitrary even coefficient q (callable
/// returning QValue). Returns (W, W', W'') at 0.
template <class Coef>
Triple init_w_at_zero_with(Coef&& coef, const WindowProfile& win, const AppellOptions& opt = {}) {
  const QValue qc = coef(win.c);
  if (!(qc.q > 0.0)) {
    std::ostringstream msg;
    msg << "init_w_at_zero: q(c) <= 0 at c=" << win.c;
    throw domain_error(msg.str());
  }
  auto blended = [&](double x) {
    const QValue v = coef(x);
    const double f = win.phi(x), df = win.dphi(x);
    return QValue{(1.0 - f) * v.q + f * qc.q, (1.0 - f) * v.dq + df * (qc.q - v.q)};
  };
  const Triple ic{1.0 / std::sqrt(qc.q), 0.0, 0.0};
  const auto sol = appell_solve(blended, win.c, 0.0, ic, opt);
  return sol.end_values;
}

inline Triple init_w_at_zero(const SWEParameters& p, const PhaseOracleOptions& opt = {}) {
  WindowProfile win = default_window(p, opt.steepness);
  if (opt.window_c > 0.0) win.c = opt.window_c;
  AppellOptions ao;
  ao.order = opt.order;
  ao.eps = opt.eps;
  return init_w_at_zero_with([&p](double x) { return q_eval(p, x); }, win, ao);
}

/// Power series in t = 1 - x of the solution of the spheroidal equation that
/// is analytic at x = 1, normalized by y(1) = 1.
struct FrobeniusSeries {
  double gamma = 0.0, chi = 0.0;
  std::vector<double> coeffs;

  double value(double t) const {
    double s = 0.0;
    for (std::size_t m = coeffs.size(); m-- > 0;) s = s * t + coeffs[m];
    return s;
  }
  double derivative(double t) const {  // d/dt
    double s = 0.0;
    for (std::size_t m = coeffs.size(); m-- > 1;) s = s * t + static_cast<double>(m) * coeffs[m];
    return s;
  }
  double second_derivative(double t) const {
    double s = 0.0;
    for (std::size_t m = coeffs.size(); m-- > 2;)
      s = s * t + static_cast<double>(m) * static_cast<double>(m - 1) * coeffs[m];
    return s;
  }
  /// t(2-t) y'' + 2(1-t) y' + (chi - gamma^2 (1-t)^2) y
  double residual(double t) const {
    const double g2 = gamma * gamma;
    return t * (2.0 - t) * second_derivative(t) + 2.0 * (1.0 - t) * derivative(t) +
           (chi - g2 * (1.0 - t) * (1.0 - t)) * value(t);
  }
  /// Scale against which the residual is measured.
  double residual_scale(double t) const {
    const double g2 = gamma * gamma;
    return std::abs(t * (2.0 - t) * second_derivative(t)) + std::abs(2.0 * (1.0 - t) * derivative(t)) +
           (std::abs(chi) + g2) * std::abs(value(t));
  }
};

/// Series coefficients, truncated once terms at t = delta fall below 1e-18
/// relative to the partial sum.
inline FrobeniusSeries frobenius_series(const SWEParameters& p, double delta) {
  const double g2 = p.gamma * p.gamma;
  FrobeniusSeries fs{p.gamma, p.chi, {1.0}};
  auto& c = fs.coeffs;
  double sum = 1.0, pw = 1.0;
  int small = 0;
  for (int m = 0; m < 500; ++m) {
    const double cm = c[m];
    const double c1 = m >= 1 ? c[m - 1] : 0.0;
    const double c2 = m >= 2 ? c[m - 2] : 0.0;
    const double md = m;
    const double next = ((md * (md + 1.0) - p.chi + g2) * cm - 2.0 * g2 * c1 + g2 * c2) /
                        (2.0 * (md + 1.0) * (md + 1.0));
    c.push_back(next);
    pw *= delta;
    const double term = std::abs(next * pw);
    sum += next * pw;
    small = (term < 1e-18 * std::abs(sum)) ? small + 1 : 0;
    if (small >= 3) return fs;
  }
  throw solver_failure("frobenius_series: no convergence within 500 terms");
}

/// Matching distance from x = 1. The phase accumulated on [1-delta, 1]
/// behaves like sqrt(2 |chi - gamma^2| delta), which must stay well below pi
/// for the branch choice to be unambiguous.
inline double default_match_delta(double gamma, double chi) {
  const double d = std::min({1e-4, 8.0 / (gamma * gamma), 1.0 / (1.0 + std::abs(chi - gamma * gamma))});
  return std::max(d, 1e-12);
}

struct FrobeniusValue {
  double phi = 0.0;   // normal-form solution y sqrt(t(2-t)) at x = 1 - delta
  double dphi = 0.0;  // its x-derivative
};

inline FrobeniusValue frobenius_at_one(const SWEParameters& p, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw domain_error("frobenius_at_one: delta must lie in (0,1)");
  const auto fs = frobenius_series(p, delta);
  const double t = delta;
  const double y = fs.value(t), dy = fs.derivative(t);
  const double r = std::sqrt(t * (2.0 - t));
  const double dphidt = dy * r + y * (1.0 - t) / r;
  return {y * r, -dphidt};
}

/// Psi at x from (W, W') there and the Frobenius solution, on the branch
/// (-pi, 0].
inline double match_phase(double W, double W1, const FrobeniusValue& f) {
  const double A = f.dphi * W - f.phi * W1 / 2.0;
  const double kappa = std::sqrt(W / (A * A + f.phi * f.phi));
  const double u = kappa * f.phi, v = kappa * A;
  double psi = std::atan2(u, v);
  if (psi > 0.0) psi = std::atan2(-u, -v);
  return psi;
}

/// Psi deep in the nonoscillatory region (q < 0), where it is exponentially
/// small: leading-order WKB of sin(Psi)/sqrt(Psi') decaying.
inline double wkb_tail_phase(double W, double q) { return -(1.0 / W) / (2.0 * std::sqrt(-q)); }

/// Integral of 1/W over the whole solution domain.
inline double reciprocal_integral(const AppellSolution& sol) {
  double s = 0.0;
  std::vector<double> inv;
  for (const auto& pc : sol.pieces) {
    inv.resize(pc.W.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / pc.W[i];
    s += cheb::fit_univariate(inv, pc.a, pc.b).integral();
  }
  return s;
}

/// Appell solve from x = 0 toward x = 1 carried out in t = 1 - x. The
/// returned pieces live in t; W' in t is the negative of W' in x.
inline AppellSolution appell_solve_toward_one(const SWEParameters& p, const Triple& w_at_zero,
                                              double t_end, const AppellOptions& opt) {
  const Triple ic{w_at_zero[0], -w_at_zero[1], w_at_zero[2]};
  return appell_solve([&p](double t) { return q_eval_t(p, t); }, 1.0, t_end, ic, opt);
}

/// As above with the growth cap honoured only inside the nonoscillatory
/// region: a cap hit where q >= 0 again (close to x = 1, past a short
/// forbidden zone) is discarded and the solve is redone uncapped.
inline AppellSolution appell_solve_toward_one_capped(const SWEParameters& p, const Triple& w_at_zero,
                                                     double t_end, const AppellOptions& opt) {
  auto sol = appell_solve_toward_one(p, w_at_zero, t_end, opt);
  if (sol.truncated && !(q_eval_t(p, sol.x_end).q < 0.0)) {
    AppellOptions uncapped = opt;
    uncapped.growth_cap = 0.0;
    sol = appell_solve_toward_one(p, w_at_zero, t_end, uncapped);
  }
  return sol;
}

struct PhaseOracleResult {
  PhaseSeed seed;
  Triple w0{};              // (W, W', W'') at x = 0
  AppellSolution forward;   // in t = 1 - x, from t = 1 down to delta (or the growth cap)
  double delta = 0.0;
  double psi_end = 0.0;     // Psi at t = forward.x_end
  double integral = 0.0;    // int 1/W over the forward solve
};

inline PhaseOracleResult phase_at_zero_detailed(const SWEParameters& p, const PhaseOracleOptions& opt = {}) {
  if (!(p.gamma > 0.0)) throw domain_error("phase_at_zero: gamma must be positive");
  PhaseOracleResult r;
  r.w0 = init_w_at_zero(p, opt);
  AppellOptions ao;
  ao.order = opt.order;
  ao.eps = opt.eps;
  ao.growth_cap = opt.growth_factor > 0.0 ? r.w0[0] * opt.growth_factor : 0.0;

  double delta = opt.delta > 0.0 ? opt.delta : default_match_delta(p.gamma, p.chi);
  for (int attempt = 0;; ++attempt) {
    r.delta = delta;
    r.forward = appell_solve_toward_one_capped(p, r.w0, delta, ao);
    const auto& e = r.forward.end_values;
    if (r.forward.truncated) {
      const double q = q_eval_t(p, r.forward.x_end).q;
      if (!(q < 0.0)) throw solver_failure("phase_at_zero: growth cap reached where q >= 0");
      r.psi_end = wkb_tail_phase(e[0], q);
    } else {
      r.psi_end = match_phase(e[0], -e[1], frobenius_at_one(p, delta));
    }
    if (std::abs(r.psi_end) < std::numbers::pi) break;
    if (attempt == 3) {
      std::ostringstream msg;
      msg << "phase_at_zero: endpoint matching failed for gamma=" << p.gamma << ", chi=" << p.chi;
      throw solver_failure(msg.str());
    }
    delta /= 10.0;
  }
  r.integral = reciprocal_integral(r.forward);
  const Triple d = psi_from_w(r.w0);
  r.seed = PhaseSeed{r.psi_end - r.integral, d[0], d[1], d[2], p.chi};
  return r;
}

inline PhaseSeed phase_at_zero(const SWEParameters& p, const PhaseOracleOptions& opt = {}) {
  return phase_at_zero_detailed(p, opt).seed;
}

/// xi = -(2/pi) Psi(0) - 1; equals n at chi = chi_n.
inline double xi_of_psi0(double psi0) { return -2.0 / std::numbers::pi * psi0 - 1.0; }

}  // namespace pswf
