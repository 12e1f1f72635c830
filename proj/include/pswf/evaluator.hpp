#pragma once

// Nonoscillatory phase function of ps_n on [0,1) built from a phase seed, and
// O(1) evaluation of ps_n and its second-kind companion qs_n.
//
// Internally everything is expanded in t = 1 - x (see swe_core.hpp). Psi is
// kept twice: anchored at x = 0 by Psi(0) = -pi/2 (n+1), and anchored near
// x = 1 by the Frobenius match (or the WKB tail beyond the growth cap). Past
// the turning point Psi is exponentially small and only the second anchoring
// resolves it to relative precision.
//
// Psi reaches pi/2 (n+1) in magnitude, so a double Psi loses ~n ulps of
// phase. Each branch therefore also stores, per piece, the anchor reduced
// mod pi/2 in extended precision plus a local antiderivative that starts
// from zero; sin and cos are taken of the small remainder only.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pswf/chebkit.hpp"
#include "pswf/errors.hpp"
#include "pswf/phase_oracle.hpp"
#include "pswf/swe_core.hpp"

namespace pswf {

struct PhaseOptions {
  int order = cheb::default_order;
  double eps = 1e-12;
  double delta_dom = 1e-12;
  double growth_factor = 1e40;
};

/// Psi on one anchoring: per piece, Psi = quadrant * pi/2 + rem + local(t).
struct PhaseBranch {
  cheb::PiecewiseChebyshev local;  // zero at the piece's anchored end
  std::vector<double> rem;
  std::vector<int> quadrant;       // mod 4

  /// (sin Psi, cos Psi) on piece i at t.
  std::pair<double, double> sincos(std::size_t i, double t) const {
    const double th = rem[i] + local.pieces()[i](t);
    const double s = std::sin(th), c = std::cos(th);
    switch (quadrant[i]) {
      case 0: return {s, c};
      case 1: return {c, -s};
      case 2: return {-s, -c};
      default: return {-c, s};
    }
  }

  /// exp(2 i Psi) on piece i at t.
  std::complex<double> exp2i(std::size_t i, double t) const {
    const double th = 2.0 * (rem[i] + local.pieces()[i](t));
    const double sg = (quadrant[i] % 2) ? -1.0 : 1.0;
    return {sg * std::cos(th), sg * std::sin(th)};
  }
};

class PhaseFunction {
 public:
  long n = 0;
  double gamma = 0.0;
  double chi = 0.0;
  double delta_dom = 1e-12;
  double norm_constant = 1.0;
  int sigma = 1;

  // all in t = 1 - x, on [t_end, 1]
  cheb::PiecewiseChebyshev dpsi;       // Psi'(x) = 1/W
  cheb::PiecewiseChebyshev psi_left;   // anchored at x = 0
  cheb::PiecewiseChebyshev psi_right;  // anchored near x = 1
  PhaseBranch left, right;             // the same, reduced for sin and cos
  double t_end = 0.0;     // smallest t covered; > delta_dom only when truncated
  double t_switch = 0.0;  // psi_right is used for t <= t_switch
  bool truncated = false;
  AppellSolution appell;  // the underlying solve, kept for diagnostics

  /// Psi(x) and Psi'(x) for 0 <= x with 1 - x >= t_end.
  std::pair<double, double> phase(double x) const {
    const double t = 1.0 - x;
    const std::size_t i = dpsi.locate(t);
    const auto& src = (t <= t_switch) ? psi_right : psi_left;
    return {src.pieces()[i](t), dpsi.pieces()[i](t)};
  }

  /// ps_n(x). Unit L^2 norm on [-1,1], positive near x = 1.
  double ps(double x) const { return eval(x, false); }
  /// Second-kind companion: cos in place of sin, same normalization.
  double qs(double x) const { return eval(x, true); }

  /// Unnormalized sin(Psi) sqrt(W)/sqrt(1-x^2) (or cos) for x in [0,1).
  double raw(double x, bool second) const {
    const double t = 1.0 - x;
    if (t < t_end) {
      if (second) {
        std::ostringstream msg;
        msg << "qs: x=" << x << " lies beyond the representable range (qs overflows past x="
            << 1.0 - t_end << ")";
        throw domain_error(msg.str());
      }
      return 0.0;
    }
    return raw_t(t, second);
  }

  const PhaseBranch& branch(double t) const { return (t <= t_switch) ? right : left; }

  /// As raw, addressed by t = 1 - x in [t_end, 1].
  double raw_t(double t, bool second) const {
    const std::size_t i = dpsi.locate(t);
    const auto [sn, cs] = branch(t).sincos(i, t);
    const double dp = dpsi.pieces()[i](t);
    const double om = t * (2.0 - t);
    return (second ? cs : sn) / std::sqrt(dp * om);
  }

  /// (value, d/dx value) of the normalized function; used by tests.
  std::pair<double, double> eval_with_derivative(double x, bool second = false) const {
    check_domain(x);
    const double ax = std::abs(x);
    const double t = 1.0 - ax;
    if (t < t_end) {
      if (second) return {raw(ax, true), 0.0};
      return {0.0, 0.0};
    }
    const std::size_t i = dpsi.locate(t);
    const auto [sn, cs] = branch(t).sincos(i, t);
    const double dp = dpsi.pieces()[i](t);
    const double d2p = -dpsi.pieces()[i].derivative()(t);  // x-derivative
    const double W = 1.0 / dp, W1 = -d2p / (dp * dp);
    const double om = t * (2.0 - t);
    const double s = second ? cs : sn;
    const double c = second ? -sn : cs;
    const double sw = std::sqrt(W), so = std::sqrt(om);
    const double val = s * sw / so;
    const double der = c * dp * sw / so + s * W1 / (2.0 * sw * so) + s * sw * ax / (om * so);
    const double scale = sigma / norm_constant;
    const bool even = ((n + (second ? 1 : 0)) % 2) == 0;
    if (x >= 0.0) return {scale * val, scale * der};
    return {(even ? 1.0 : -1.0) * scale * val, (even ? -1.0 : 1.0) * scale * der};
  }

 private:
  void check_domain(double x) const {
    if (!(std::abs(x) <= 1.0 - delta_dom)) {
      std::ostringstream msg;
      msg << std::setprecision(17) << "x=" << x << std::setprecision(6) << " outside [-1+" << delta_dom << ", 1-" << delta_dom << "]";
      throw domain_error(msg.str());
    }
  }

  double eval(double x, bool second) const {
    check_domain(x);
    const double v = raw(std::abs(x), second) * sigma / norm_constant;
    if (x >= 0.0) return v;
    const bool even = ((n + (second ? 1 : 0)) % 2) == 0;
    return even ? v : -v;
  }
};

inline double eval_ps(const PhaseFunction& p, double x) { return p.ps(x); }
inline double eval_qs(const PhaseFunction& p, double x) { return p.qs(x); }

namespace detail {

// int_a^b sin^2(F) A dt on one piece by Levin collocation: solve
// p' + 2i F' p = A, then int A e^{2iF} = [p e^{2iF}]_a^b. Here F is Psi as a
// function of t, so F' = -dpsi.
inline double levin_sin2(const cheb::ChebyshevPiece& A, const PhaseBranch& F, std::size_t piece,
                         const cheb::ChebyshevPiece& dpsi, int k) {
  const auto& o = cheb::ops(k);
  const std::size_t n = o.size();
  const auto x = cheb::cheb_grid(k, A.a, A.b);
  const double scale = 2.0 / (A.b - A.a);
  Eigen::MatrixXcd M(n, n);
  Eigen::VectorXcd rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) M(i, j) = scale * o.diff[i * n + j];
    M(i, i) -= std::complex<double>(0.0, 2.0 * dpsi(x[i]));
    rhs(i) = A(x[i]);
  }
  const Eigen::VectorXcd p = M.partialPivLu().solve(rhs);
  const std::complex<double> osc =
      p(0) * F.exp2i(piece, A.b) - p(static_cast<Eigen::Index>(n - 1)) * F.exp2i(piece, A.a);
  return 0.5 * A.integral() - 0.5 * osc.real();
}

}  // namespace detail

/// Psi from dPsi/dt with Psi = anchor at the first piece's left end
/// (from_left) or at the last piece's right end.
inline PhaseBranch make_branch(const cheb::PiecewiseChebyshev& dF, long double anchor, bool from_left) {
  const std::size_t m = dF.num_pieces();
  std::vector<cheb::ChebyshevPiece> loc(m);
  std::vector<long double> off(m);
  long double acc = anchor;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t i = from_left ? j : m - 1 - j;
    const auto& pc = dF.pieces()[i];
    loc[i] = cheb::detail::anti_piece(pc, from_left, 0.0);
    off[i] = acc;
    acc += from_left ? static_cast<long double>(pc.integral()) : -static_cast<long double>(pc.integral());
  }
  PhaseBranch b;
  b.local = cheb::PiecewiseChebyshev(std::move(loc));
  constexpr long double half_pi = std::numbers::pi_v<long double> / 2;
  for (long double o : off) {
    const long double k = std::nearbyint(o / half_pi);
    b.rem.push_back(static_cast<double>(o - k * half_pi));
    b.quadrant.push_back(static_cast<int>(((static_cast<long long>(k) % 4) + 4) % 4));
  }
  return b;
}

/// Computes the L^2 scale and the sign convention; stores them in p and
/// returns (norm_constant, sigma).
inline std::pair<double, int> l2_normalize(PhaseFunction& p, int k = cheb::default_order) {
  constexpr double levin_threshold = 60.0;  // 2 * phase change per piece
  double integral = 0.0;
  const auto& pieces = p.dpsi.pieces();
  const auto& grid = cheb::ops(k);
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& dp = pieces[i];
    const bool on_right = dp.b <= p.t_switch, on_left = dp.a >= p.t_switch;
    const auto& F = on_right ? p.psi_right.pieces()[i] : p.psi_left.pieces()[i];
    const double dphase = 2.0 * std::abs(F(dp.b) - F(dp.a));
    if (dphase > levin_threshold && (on_left || on_right)) {
      std::vector<double> a(grid.size());
      const auto x = cheb::cheb_grid(k, dp.a, dp.b);
      for (std::size_t j = 0; j < x.size(); ++j) a[j] = 1.0 / (dp(x[j]) * x[j] * (2.0 - x[j]));
      integral += detail::levin_sin2(cheb::fit_univariate(a, dp.a, dp.b), on_right ? p.right : p.left, i, dp, k);
      continue;
    }
    const int m = std::max(1, static_cast<int>(std::ceil(dphase / 8.0)));
    for (int s = 0; s < m; ++s) {
      const double a = dp.a + (dp.b - dp.a) * s / m;
      const double b = (s + 1 == m) ? dp.b : dp.a + (dp.b - dp.a) * (s + 1) / m;
      const auto t = cheb::cheb_grid(k, a, b);
      for (std::size_t j = 0; j < t.size(); ++j) {
        const double r = p.raw_t(t[j], false);
        vals[j] = r * r;
      }
      integral += cheb::fit_univariate(vals, a, b).integral();
    }
  }
  // [0, t_end]: ps is analytic at x = 1 and nearly constant over this sliver
  const double edge = p.raw_t(p.t_end, false);
  integral += edge * edge * p.t_end;
  p.norm_constant = std::sqrt(2.0 * integral);
  const double end = p.raw_t(p.t_end, false);
  p.sigma = end < 0.0 ? -1 : 1;
  return {p.norm_constant, p.sigma};
}

/// Builds the phase function of ps_n from its seed at x = 0.
inline PhaseFunction build_phase(const PhaseSeed& seed, long n, double gamma, const PhaseOptions& opt = {}) {
  if (!(seed.dpsi0 > 0.0)) throw domain_error("build_phase: seed must have Psi'(0) > 0");
  if (n < 0) throw domain_error("build_phase: n must be nonnegative");
  if (!(gamma > 0.0)) throw domain_error("build_phase: gamma must be positive");
  const SWEParameters prm{gamma, seed.chi};
  const Triple w0 = w_from_psi({seed.dpsi0, seed.d2psi0, seed.d3psi0});

  AppellOptions ao;
  ao.order = opt.order;
  ao.eps = opt.eps;
  ao.growth_cap = opt.growth_factor > 0.0 ? w0[0] * opt.growth_factor : 0.0;

  PhaseFunction f;
  f.n = n;
  f.gamma = gamma;
  f.chi = seed.chi;
  f.delta_dom = opt.delta_dom;
  // t of the largest admissible x, which may sit just below delta_dom
  const double t_lim = std::min(opt.delta_dom, 1.0 - (1.0 - opt.delta_dom));
  f.appell = appell_solve_toward_one_capped(prm, w0, t_lim, ao);
  f.truncated = f.appell.truncated;
  f.t_end = f.appell.x_end;

  std::vector<cheb::ChebyshevPiece> dp, neg;
  dp.reserve(f.appell.pieces.size());
  neg.reserve(f.appell.pieces.size());
  std::vector<double> inv;
  for (const auto& pc : f.appell.pieces) {
    inv.resize(pc.W.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / pc.W[i];
    dp.push_back(cheb::fit_univariate(inv, pc.a, pc.b));
    for (double& v : inv) v = -v;
    neg.push_back(cheb::fit_univariate(inv, pc.a, pc.b));
  }
  f.dpsi = cheb::PiecewiseChebyshev(std::move(dp));
  const cheb::PiecewiseChebyshev dF(std::move(neg));  // dPsi/dt

  const long double psi0 = -std::numbers::pi_v<long double> / 2 * static_cast<long double>(n + 1);
  f.psi_left = cheb::spectral_integrate_from_right(dF, static_cast<double>(psi0));
  f.left = make_branch(dF, psi0, false);

  const auto xt = turning_point(prm);
  f.t_switch = xt ? 1.0 - *xt : 0.0;
  if (f.truncated) {
    const double q = q_eval_t(prm, f.t_end).q;
    if (!(q < 0.0)) throw solver_failure("build_phase: growth cap reached where q >= 0");
    const double c0 = wkb_tail_phase(f.appell.end_values[0], q);
    f.psi_right = cheb::spectral_integrate(dF, c0);
    f.right = make_branch(dF, c0, true);
  } else {
    const double tm = std::max(default_match_delta(gamma, seed.chi), f.t_end);
    const auto W = f.appell.W(), dW = f.appell.dW();
    const double psi_m = match_phase(W(tm), -dW(tm), frobenius_at_one(prm, tm));
    const auto R = cheb::spectral_integrate(dF, 0.0);
    f.psi_right = cheb::spectral_integrate(dF, psi_m - R(tm));
    f.right = make_branch(dF, psi_m - R(tm), true);
  }
  // Each anchoring loses accuracy with the phase accumulated from its anchor,
  // so hand over at the piece boundary nearest half of Psi(0), and never
  // before the turning point.
  double t_mid = 0.0, best = std::numeric_limits<double>::infinity();
  for (const auto& pc : f.psi_left.pieces()) {
    const double d = std::abs(pc(pc.a) - 0.5 * static_cast<double>(psi0));
    if (d < best) best = d, t_mid = pc.a;
  }
  f.t_switch = std::max(xt ? 1.0 - *xt : 0.0, t_mid);
  l2_normalize(f, opt.order);
  return f;
}

}  // namespace pswf
