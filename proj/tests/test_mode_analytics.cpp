#include <gtest/gtest.h>

#include <random>

#include "metastab.hpp"

using namespace metastab;

TEST(ModeAnalytics, ThresholdRootsOfQuadratic) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 0.25);
  for (int i = 0; i < 1000; ++i) {
    double c = u(rng);
    auto [em, ep] = e_pm(c);
    EXPECT_NEAR(em + ep, 1.0, 1e-14);
    EXPECT_NEAR(em * ep, c, 1e-14);
    EXPECT_LE(em, ep);
  }
}

TEST(ModeAnalytics, ThresholdEndpoints) {
  auto z = e_pm(0.0);
  EXPECT_EQ(z.minus, 0.0);
  EXPECT_EQ(z.plus, 1.0);
  auto q = e_pm(0.25);
  EXPECT_NEAR(q.minus, 0.5, 1e-15);
  EXPECT_NEAR(q.plus, 0.5, 1e-15);
  EXPECT_THROW(e_pm(0.26), DomainError);
  EXPECT_THROW(e_pm(-1e-3), DomainError);
}

TEST(ModeAnalytics, CutoffConstants) {
  // E+ - C = E- + C at the metastable cutoff, E+ - C = E- at the final-regime cutoff
  auto m = e_pm(cutoff::metastable);
  EXPECT_NEAR(m.plus - cutoff::metastable, m.minus + cutoff::metastable, 1e-14);
  auto f = e_pm(cutoff::final_regime);
  EXPECT_NEAR(f.plus - cutoff::final_regime, f.minus, 1e-14);
  EXPECT_NEAR(cutoff::metastable, 0.20710678118654752, 2e-16);
  EXPECT_NEAR(cutoff::final_regime, 0.2360679774997897, 2e-16);
  EXPECT_NEAR(cutoff::relaxation, 0.23254415793482963, 2e-16);
}

TEST(ModeAnalytics, InverseBoundsRoundTrip) {
  auto f = [](double x) { return 2.0 * x - std::expm1(x); };
  auto g = [](double x) { return 1.5 * x - std::expm1(x); };
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    double c1 = std::uniform_real_distribution<double>(0.0, inverse_bound_domain(InverseKind::E1))(rng);
    double c2 = std::uniform_real_distribution<double>(0.0, inverse_bound_domain(InverseKind::E2))(rng);
    double x1 = inverse_bound(InverseKind::E1, c1), x2 = inverse_bound(InverseKind::E2, c2);
    EXPECT_NEAR(f(x1), c1, 1e-10);
    EXPECT_NEAR(g(x2), c2, 1e-10);
    if (c1 > 1e-6) {
      EXPECT_GE(x1 / c1, 1.0 - 1e-9);
      EXPECT_LE(x1 / c1, std::log(2.0) / (2.0 * std::log(2.0) - 1.0) + 1e-9);
    }
    if (c2 > 1e-6) {
      EXPECT_GE(x2 / c2, 1.0 - 1e-9);
      EXPECT_LE(x2 / c2, 2.0 * std::log(1.5) / (3.0 * std::log(1.5) - 1.0) + 1e-9);
    }
  }
}

TEST(ModeAnalytics, InverseBoundEndpoints) {
  EXPECT_EQ(inverse_bound(InverseKind::E1, 0.0), 0.0);
  EXPECT_EQ(inverse_bound(InverseKind::E2, 0.0), 0.0);
  EXPECT_NEAR(inverse_bound(InverseKind::E1, 2.0 * std::log(2.0) - 1.0), std::log(2.0), 1e-10);
  EXPECT_NEAR(inverse_bound(InverseKind::E2, cutoff::e2_domain), std::log(1.5), 1e-10);
  // root of 1.5 x - e^x + 1 = 0.05 from an independent bracketing solver
  EXPECT_NEAR(inverse_bound(InverseKind::E2, 0.05), 0.11334703327547474, 1e-10);
  EXPECT_THROW(inverse_bound(InverseKind::E1, 0.4), DomainError);
  EXPECT_THROW(inverse_bound(InverseKind::E2, -0.1), DomainError);
}

TEST(ModeAnalytics, RealModeRegimes) {
  auto r = mode_regimes({-0.5, 0.0}, 0.05);
  EXPECT_NEAR(r.t_initial, -std::log(0.95) / 0.5, 1e-12);
  EXPECT_NEAR(r.t_final, -std::log(0.05) / 0.5, 1e-12);
  EXPECT_FALSE(r.imag_bound.has_value());
}

TEST(ModeAnalytics, ComplexModeRegimes) {
  const std::complex<double> lam(-0.5025, 5.025);
  auto r = mode_regimes(lam, 0.05);
  EXPECT_NEAR(std::abs(std::exp(r.t_initial * lam) - 1.0), 0.05, 1e-10);
  // nothing crosses earlier
  for (double t = 0; t < r.t_initial; t += r.t_initial / 200) EXPECT_LT(std::abs(std::exp(t * lam) - 1.0), 0.05 + 1e-12);
  EXPECT_NEAR(r.t_final, std::log(20.0) / 0.5025, 1e-12);
  ASSERT_TRUE(r.imag_bound.has_value());
  EXPECT_NEAR(*r.imag_bound, std::asin(0.05 / 0.95) / 5.025, 1e-15);
  // the imaginary-part bound is consistent with the initial regime time
  EXPECT_LE(r.t_initial, *r.imag_bound * (1.0 + 1e-9) + 0.05 / 0.5025);
}

TEST(ModeAnalytics, ModeRegimeDomain) {
  EXPECT_THROW(mode_regimes({0.0, 1.0}, 0.1), DomainError);
  EXPECT_THROW(mode_regimes({-1.0, 0.0}, 1.0), DomainError);
}
