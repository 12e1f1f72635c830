#pragma once

// Table construction: per-gamma adaptive fits in chi, inversion to xi and
// zeta, a unified zeta partition shared by every gamma node, and bivariate
// fits on (dyadic gamma interval) x (zeta interval) rectangles.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pswf/chebkit.hpp"
#include "pswf/errors.hpp"
#include "pswf/expansion_store.hpp"
#include "pswf/legendre_xr.hpp"
#include "pswf/phase_oracle.hpp"

namespace pswf {

struct GammaNodeData {
  double gamma = 0.0;
  double chi_lo = 0.0, chi_hi = 0.0;
  // Psi(0), Psi'(0), Psi''(0), Psi'''(0) vs chi
  std::vector<double> chi_breaks;
  std::array<cheb::PiecewiseChebyshev, 4> chi_fits;
  // chi, Psi'(0), Psi''(0), Psi'''(0) vs zeta on [0,1]
  std::vector<double> zeta_breaks;
  std::array<cheb::PiecewiseChebyshev, 4> zeta_fits;
  // absolute denominator floors of the zeta quantities
  std::vector<double> zeta_floors;

  double xi_of_chi(double chi) const { return xi_of_psi0(chi_fits[0](chi)); }
  /// chi with xi(chi) = xi_target, by bisection to a bracket of 4 ulp.
  double chi_of_xi(double xi_target) const;
  std::array<double, 4> zeta_values(double zeta) const {
    return {zeta_fits[0](zeta), zeta_fits[1](zeta), zeta_fits[2](zeta), zeta_fits[3](zeta)};
  }
};

inline double GammaNodeData::chi_of_xi(double xi_target) const {
  double lo = chi_lo, hi = chi_hi;
  if (!(xi_of_chi(lo) <= xi_target && xi_target <= xi_of_chi(hi))) {
    std::ostringstream msg;
    msg << "chi_of_xi: xi=" << xi_target << " not bracketed at gamma=" << gamma;
    throw domain_error(msg.str());
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double ulp = std::nextafter(hi, std::numeric_limits<double>::infinity()) - hi;
    if (hi - lo <= 4.0 * ulp || !(mid > lo && mid < hi))
      break;
    (xi_of_chi(mid) < xi_target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct BuildOptions {
  int gamma_min_exp = 8;
  int gamma_max_exp = 14;
  int order = cheb::default_order;
  double eps = 1e-14;
  int threads = 1;
  int max_intervals = 300;
  int unified_max_intervals = 2000;
  int verify_probes = 100;
  double verify_tol = 1e-11;
  /// Receives one progress line per gamma node; empty disables logging.
  std::function<void(const std::string&)> log = [](const std::string& s) { std::cerr << s << '\n'; };
};

namespace detail {

/// Bisects the intervals listed (ascending) in `bad`.
inline std::vector<double> split_intervals(const std::vector<double>& bp, const std::vector<std::size_t>& bad) {
  std::vector<double> out;
  out.reserve(bp.size() + bad.size());
  std::size_t b = 0;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    out.push_back(bp[i]);
    if (b < bad.size() && bad[b] == i) {
      out.push_back(0.5 * (bp[i] + bp[i + 1]));
      ++b;
    }
  }
  out.push_back(bp.back());
  return out;
}

}  // namespace detail

/// Fits the phase data at one gamma in chi, then in zeta.
inline GammaNodeData build_gamma_node(double gamma, int k = cheb::default_order, double eps = 1e-14,
                                      const BuildOptions& opt = {}) {
  const double xi1 = default_xi1;
  if (!(gamma > xi1)) throw domain_error("build_gamma_node: gamma must exceed 200");
  GammaNodeData node;
  node.gamma = gamma;
  const double xi_lo = xi_floor(gamma, xi1);
  node.chi_lo = xr::chi_xr(static_cast<long>(std::floor(xi_lo)) - 1, gamma);
  node.chi_hi = xr::chi_xr(static_cast<long>(std::ceil(gamma)) + 1, gamma);

  auto seed_at = [&](double chi) {
    try {
      return phase_at_zero(SWEParameters{gamma, chi});
    } catch (const error& e) {
      std::ostringstream msg;
      msg << "phase oracle failed at gamma=" << gamma << ", chi=" << chi << ": " << e.what();
      throw solver_failure(msg.str());
    }
  };

  // the four seed quantities vs chi
  const double sup1 = seed_at(node.chi_hi).dpsi0;
  cheb::AdaptiveOptions ao;
  ao.order = k;
  ao.eps = eps;
  ao.max_intervals = opt.max_intervals;
  ao.scales = {0.0, 0.0, sup1 * sup1, sup1 * sup1 * sup1};
  // adaptive failures carry no gamma of their own
  auto named = [&](auto&& fit) {
    try {
      return fit();
    } catch (const solver_failure& e) {
      if (std::string(e.what()).find("gamma=") != std::string::npos) throw;
      std::ostringstream msg;
      msg << e.what() << " at gamma=" << gamma;
      throw solver_failure(msg.str());
    }
  };
  auto d = named([&] {
    return cheb::adaptive_discretize(
        [&](double chi) {
          const auto s = seed_at(chi);
          return std::array<double, 4>{s.psi0, s.dpsi0, s.d2psi0, s.d3psi0};
        },
        node.chi_lo, node.chi_hi, ao);
  });
  node.chi_breaks = d.breakpoints;
  for (int c = 0; c < 4; ++c) node.chi_fits[c] = std::move(d.components[c]);

  // xi(chi) must be strictly increasing
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < node.chi_breaks.size(); ++i) {
    const auto x = cheb::cheb_grid(k, node.chi_breaks[i], node.chi_breaks[i + 1]);
    for (std::size_t j = x.size(); j-- > 0;) {
      if (j + 1 == x.size() && i > 0) continue;
      const double xi = node.xi_of_chi(x[j]);
      if (!(xi > prev)) {
        std::ostringstream msg;
        msg << "xi(chi) not increasing at gamma=" << gamma << ", chi=" << x[j];
        throw solver_failure(msg.str());
      }
      prev = xi;
    }
  }
  if (!(node.xi_of_chi(node.chi_lo) <= xi_lo && node.xi_of_chi(node.chi_hi) >= gamma)) {
    std::ostringstream msg;
    msg << "chi bracket does not cover the tabulated xi range at gamma=" << gamma;
    throw solver_failure(msg.str());
  }

  // invert xi(chi), reparameterize to zeta and refit
  auto truth = [&](double zeta) {
    const double chi = node.chi_of_xi(zeta_to_xi(gamma, zeta, xi1));
    return std::array<double, 4>{chi, node.chi_fits[1](chi), node.chi_fits[2](chi), node.chi_fits[3](chi)};
  };
  cheb::AdaptiveOptions zo = ao;
  zo.probe_points = 0;
  double sup_chi = 0.0, sup_d1 = 0.0;
  for (const auto& p : node.chi_fits[1].pieces())
    for (double c : {p.a, p.b}) sup_d1 = std::max(sup_d1, std::abs(node.chi_fits[1](c)));
  sup_chi = std::max(std::abs(node.chi_lo), std::abs(node.chi_hi));
  sup_d1 = std::max(sup_d1, sup1);
  node.zeta_floors = {1e-3 * sup_chi, 1e-3 * sup_d1, sup_d1 * sup_d1, sup_d1 * sup_d1 * sup_d1};
  zo.scales = node.zeta_floors;

  std::vector<double> seed{0.0, 1.0};
  std::mt19937_64 rng(std::bit_cast<std::uint64_t>(gamma));
  for (int round = 0;; ++round) {
    auto z = named([&] { return cheb::adaptive_discretize(truth, std::span<const double>(seed), zo); });
    node.zeta_breaks = z.breakpoints;
    for (int c = 0; c < 4; ++c) node.zeta_fits[c] = std::move(z.components[c]);
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i + 1 < node.zeta_breaks.size(); ++i) {
      std::uniform_real_distribution<double> u(node.zeta_breaks[i], node.zeta_breaks[i + 1]);
      for (int p = 0; p < opt.verify_probes; ++p) {
        const double zeta = u(rng);
        const auto want = truth(zeta);
        const auto got = node.zeta_values(zeta);
        bool ok = true;
        for (int c = 0; c < 4; ++c)
          ok = ok && std::abs(got[c] - want[c]) <= opt.verify_tol * std::max(std::abs(want[c]), node.zeta_floors[c]);
        if (!ok) {
          bad.push_back(i);
          break;
        }
      }
    }
    if (bad.empty()) break;
    if (round == 4) {
      std::ostringstream msg;
      msg << "inverse-function verification failed at gamma=" << gamma;
      throw solver_failure(msg.str());
    }
    seed = detail::split_intervals(node.zeta_breaks, bad);
  }
  return node;
}

// ---------------------------------------------------------------------------
// Unified partition

using VectorFunction = std::function<std::vector<double>(double)>;

/// Smallest refinement of `seed` on which every function passes the
/// tail test, by repeated seeded adaptive passes until a full pass makes no
/// change.
inline std::vector<double> unify_partition(const std::vector<VectorFunction>& fs,
                                           const std::vector<std::vector<double>>& floors,
                                           std::vector<double> seed, const cheb::AdaptiveOptions& base) {
  if (fs.empty()) throw domain_error("unify_partition: need at least one function");
  for (int pass = 0; pass < 16; ++pass) {
    bool changed = false;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      cheb::AdaptiveOptions o = base;
      o.probe_points = 0;
      o.scales = i < floors.size() ? floors[i] : std::vector<double>{};
      auto d = cheb::adaptive_discretize(fs[i], std::span<const double>(seed), o);
      if (d.breakpoints.size() != seed.size()) {
        changed = true;
        seed = std::move(d.breakpoints);
      }
    }
    if (!changed) return seed;
  }
  throw solver_failure("unify_partition: partition did not stabilize");
}

inline std::vector<double> unify_partition(const std::vector<GammaNodeData>& nodes, int k = cheb::default_order,
                                           double eps = 1e-14, int max_intervals = 2000) {
  if (nodes.empty()) throw domain_error("unify_partition: need at least one node");
  std::vector<VectorFunction> fs;
  std::vector<std::vector<double>> floors;
  for (const auto& n : nodes) {
    fs.push_back([&n](double z) {
      const auto v = n.zeta_values(z);
      return std::vector<double>(v.begin(), v.end());
    });
    floors.push_back(n.zeta_floors);
  }
  cheb::AdaptiveOptions o;
  o.order = k;
  o.eps = eps;
  o.max_intervals = max_intervals;
  return unify_partition(fs, floors, nodes.front().zeta_breaks, o);
}

// ---------------------------------------------------------------------------
// Assembly

/// Distinct gamma nodes of all dyadic intervals, ascending.
inline std::vector<double> gamma_nodes(int gamma_min_exp, int gamma_max_exp, int k) {
  std::vector<double> g;
  for (int e = gamma_min_exp; e < gamma_max_exp; ++e) {
    const auto x = cheb::cheb_grid(k, std::ldexp(1.0, e), std::ldexp(1.0, e + 1));
    g.insert(g.end(), x.begin(), x.end());
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

inline BivariateTableSet build_tables(const BuildOptions& opt) {
  if (!(8 <= opt.gamma_min_exp && opt.gamma_min_exp < opt.gamma_max_exp && opt.gamma_max_exp <= 20))
    throw domain_error("build_tables: need 8 <= gamma_min_exp < gamma_max_exp <= 20");
  if (opt.order < 2 || opt.order > 64) throw domain_error("build_tables: order must be in [2, 64]");
  if (!(opt.eps > 0.0)) throw domain_error("build_tables: eps must be positive");
  const int k = opt.order;
  const auto gs = gamma_nodes(opt.gamma_min_exp, opt.gamma_max_exp, k);

  std::vector<GammaNodeData> nodes(gs.size());
  std::vector<std::exception_ptr> errs(gs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < gs.size();) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        nodes[i] = build_gamma_node(gs[i], k, opt.eps, opt);
      } catch (...) {
        errs[i] = std::current_exception();
        next.store(gs.size());
        continue;
      }
      if (opt.log) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream line;
        line.precision(17);
        line << "gamma=" << gs[i] << " chi_intervals=" << nodes[i].chi_breaks.size() - 1
             << " zeta_intervals=" << nodes[i].zeta_breaks.size() - 1;
        line.precision(3);
        line << " time=" << secs << "s";
        std::lock_guard lk(log_mu);
        opt.log(line.str());
      }
    }
  };
  const int width = std::max(1, opt.threads);
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < width; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);

  BivariateTableSet t;
  t.k = k;
  t.xi1 = default_xi1;
  for (int e = opt.gamma_min_exp; e <= opt.gamma_max_exp; ++e) t.gamma_breaks.push_back(std::ldexp(1.0, e));
  t.zeta_breaks = unify_partition(nodes, k, opt.eps, opt.unified_max_intervals);
  if (opt.log) {
    std::ostringstream line;
    line << "unified zeta partition: " << t.zeta_breaks.size() - 1 << " intervals";
    opt.log(line.str());
  }

  std::map<double, std::size_t> index;
  for (std::size_t i = 0; i < gs.size(); ++i) index[gs[i]] = i;
  const std::size_t n = static_cast<std::size_t>(k) + 1;
  const std::size_t nz = t.num_zeta_intervals();
  for (auto& s : t.surfaces) s.assign(t.num_gamma_intervals() * nz * t.stride(), 0.0);
  std::vector<double> samples(n * n);
  for (std::size_t gi = 0; gi < t.num_gamma_intervals(); ++gi) {
    const auto gx = cheb::cheb_grid(k, t.gamma_breaks[gi], t.gamma_breaks[gi + 1]);
    for (std::size_t zi = 0; zi < nz; ++zi) {
      const auto zx = cheb::cheb_grid(k, t.zeta_breaks[zi], t.zeta_breaks[zi + 1]);
      std::array<std::vector<double>, 4> vals;
      for (auto& v : vals) v.resize(n * n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& node = nodes[index.at(gx[i])];
        for (std::size_t j = 0; j < n; ++j) {
          const auto v = node.zeta_values(zx[j]);
          for (int s = 0; s < 4; ++s) vals[s][i * n + j] = v[s];
        }
      }
      for (int s = 0; s < 4; ++s) {
        const auto p = cheb::fit_bivariate(vals[s], k, t.gamma_breaks[gi], t.gamma_breaks[gi + 1],
                                           t.zeta_breaks[zi], t.zeta_breaks[zi + 1]);
        std::copy(p.coeffs.begin(), p.coeffs.end(), t.coeffs(s, gi, zi).begin());
      }
    }
  }
  validate_tables(t);
  return t;
}

inline BivariateTableSet build_tables(int gamma_min_exp, int gamma_max_exp, int k = cheb::default_order,
                                      double eps = 1e-14, int parallel_width = 1) {
  BuildOptions o;
  o.gamma_min_exp = gamma_min_exp;
  o.gamma_max_exp = gamma_max_exp;
  o.order = k;
  o.eps = eps;
  o.threads = parallel_width;
  return build_tables(o);
}

}  // namespace pswf
