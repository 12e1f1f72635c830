#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "pswf/errors.hpp"
#include "pswf/legendre_xr.hpp"
#include "pswf/phase_oracle.hpp"

using namespace pswf;

namespace {

constexpr double pi = std::numbers::pi;

SWEParameters at_eigenvalue(long n, double gamma) { return {gamma, xr::chi_xr(n, gamma)}; }

}  // namespace

TEST(InitW, ConstantCoefficientFixedPoint) {
  const double lambda = 40.0;
  auto coef = [&](double) { return QValue{lambda * lambda, 0.0}; };
  const auto w = init_w_at_zero_with(coef, WindowProfile{0.5, 12.0});
  EXPECT_NEAR(w[0], 1.0 / lambda, 1e-15 / lambda);
  EXPECT_NEAR(w[1], 0.0, 1e-15);
  EXPECT_NEAR(w[2], 0.0, 1e-13);
}

TEST(InitW, RejectsNonpositiveWindowCoefficient) {
  auto coef = [](double) { return QValue{-1.0, 0.0}; };
  EXPECT_THROW(init_w_at_zero_with(coef, WindowProfile{0.5, 12.0}), domain_error);
}

TEST(InitW, WindowProfileEnds) {
  const WindowProfile w{0.4, 12.0};
  EXPECT_LE(w.phi(0.0), 1e-15);
  EXPECT_GE(w.phi(0.4), 1.0 - 1e-15);
}

TEST(InitW, ParityForcesFlatPhaseAtZero) {
  const auto seed = phase_at_zero(at_eigenvalue(220, 256.0));
  EXPECT_LE(std::abs(seed.d2psi0), 1e-8 * seed.dpsi0);
}

TEST(InitW, SteepnessIndependence) {
  const auto p = at_eigenvalue(220, 256.0);
  PhaseOracleOptions a, b;
  a.steepness = 10.0;
  b.steepness = 14.0;
  const double wa = init_w_at_zero(p, a)[0], wb = init_w_at_zero(p, b)[0];
  EXPECT_NEAR(wa, wb, 1e-11 * wb);
}

TEST(Frobenius, FirstCoefficient) {
  for (auto [g, chi] : std::vector<std::pair<double, double>>{{256.0, 70000.0}, {1000.0, 2e5}, {10.0, 5.0}}) {
    const auto fs = frobenius_series(SWEParameters{g, chi}, 1e-5);
    ASSERT_GE(fs.coeffs.size(), 2u);
    EXPECT_EQ(fs.coeffs[0], 1.0);
    EXPECT_DOUBLE_EQ(fs.coeffs[1], (g * g - chi) / 2.0);
  }
}

TEST(Frobenius, LegendreLimit) {
  const long n = 10;
  const SWEParameters p{0.0, static_cast<double>(n * (n + 1))};
  const double delta = 1e-4;
  std::vector<double> ratio;
  for (double d : {delta, delta / 2.0}) {
    const double x = 1.0 - d;
    const auto f = frobenius_at_one(p, d);
    ratio.push_back(f.phi / (xr::legendre_eval(n, x).first * std::sqrt(d * (2.0 - d))));
  }
  EXPECT_NEAR(ratio[0], ratio[1], 1e-10 * std::abs(ratio[1]));
}

TEST(Frobenius, ResidualAtMatchingPoint) {
  for (long n : {200L, 220L, 400L}) {
    const auto p = at_eigenvalue(n, 512.0);
    const double delta = default_match_delta(p.gamma, p.chi);
    const auto fs = frobenius_series(p, delta);
    EXPECT_LE(std::abs(fs.residual(delta)), 1e-12 * fs.residual_scale(delta)) << "n=" << n;
  }
}

TEST(PhaseAtZero, IntegerCrossings) {
  const auto s220 = phase_at_zero(at_eigenvalue(220, 256.0));
  const auto s221 = phase_at_zero(at_eigenvalue(221, 256.0));
  EXPECT_NEAR(s220.psi0, -pi / 2.0 * 221.0, 1e-9);
  EXPECT_NEAR(s221.psi0, -pi / 2.0 * 222.0, 1e-9);
  EXPECT_NEAR(s221.psi0 - s220.psi0, -pi / 2.0, 2e-9);
  EXPECT_GT(s220.dpsi0, 0.0);
  EXPECT_GT(s221.dpsi0, 0.0);
}

TEST(PhaseAtZero, XiIsIntegerAtEigenvalues) {
  for (auto [n, g] : std::vector<std::pair<long, double>>{
           {200, 256.0}, {256, 256.0}, {300, 700.0}, {650, 700.0}, {1000, 4096.0}, {4000, 4096.0}}) {
    const auto s = phase_at_zero(at_eigenvalue(n, g));
    EXPECT_NEAR(xi_of_psi0(s.psi0), static_cast<double>(n), 1e-9) << "n=" << n << " gamma=" << g;
  }
}

TEST(PhaseAtZero, XiIncreasingInChi) {
  const double g = 256.0;
  const double lo = xr::chi_xr(215, g), hi = xr::chi_xr(225, g);
  double prev = -1.0;
  for (int i = 0; i <= 40; ++i) {
    const double chi = lo + (hi - lo) * i / 40.0;
    const double xi = xi_of_psi0(phase_at_zero(SWEParameters{g, chi}).psi0);
    EXPECT_GT(xi, prev) << "chi=" << chi;
    prev = xi;
  }
}

// The windowed W is even to working precision at every chi, not only at
// eigenvalues, so Psi''(0) stays at rounding level between them too.
TEST(PhaseAtZero, SecondDerivativeAtRoundingLevelBetweenEigenvalues) {
  const double g = 256.0;
  const double c220 = xr::chi_xr(220, g), c221 = xr::chi_xr(221, g), c222 = xr::chi_xr(222, g);
  for (double chi : {0.5 * (c220 + c221), c221, 0.5 * (c221 + c222)}) {
    const auto s = phase_at_zero(SWEParameters{g, chi});
    EXPECT_LE(std::abs(s.d2psi0), 1e-8 * s.dpsi0) << "chi=" << chi;
  }
}

TEST(PhaseAtZero, WindowIndependence) {
  // with and without a turning point in (0,1)
  for (auto [n, g] : std::vector<std::pair<long, double>>{{230, 300.0}, {220, 512.0}}) {
    const auto p = at_eigenvalue(n, g);
    const auto base = phase_at_zero(p);
    const auto xt = turning_point(p);
    const double c0 = default_window(p).c;
    for (double fc : {0.9, 1.1})
      for (double fs : {0.9, 1.1}) {
        PhaseOracleOptions o;
        o.window_c = xt ? std::min(c0 * fc, 0.95 * *xt) : c0 * fc;
        o.steepness = 12.0 * fs;
        const auto s = phase_at_zero(p, o);
        EXPECT_NEAR(s.dpsi0, base.dpsi0, 1e-10 * base.dpsi0) << n << " " << g;
        EXPECT_NEAR(s.psi0, base.psi0, 1e-9) << n << " " << g;
      }
  }
}

TEST(PhaseAtZero, BeyondGrowthCapUsesTail) {
  // n far below 2 gamma / pi leaves a wide forbidden zone and W grows past the cap
  const auto r = phase_at_zero_detailed(at_eigenvalue(300, 2048.0));
  EXPECT_TRUE(r.forward.truncated);
  EXPECT_NEAR(xi_of_psi0(r.seed.psi0), 300.0, 1e-9);
}

TEST(PhaseAtZero, RejectsNonpositiveGamma) {
  EXPECT_THROW(phase_at_zero(SWEParameters{0.0, 100.0}), domain_error);
}
