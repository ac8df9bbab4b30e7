#include <gtest/gtest.h>

#include "metastab.hpp"
#include "oracles.hpp"

using namespace metastab;

namespace {
const QuantumBackend& spin() {
  static const QuantumBackend b(spin_half_dephasing(oracle::kGamma, oracle::kKappa, oracle::kOmega));
  return b;
}
}  // namespace

TEST(Regimes, DistancesFollowBlochOracle) {
  oracle::SpinParams p;
  TimeGrid g{1e-3, 1e3, 50, Spacing::log};
  for (double t : g.points()) {
    EXPECT_NEAR(distance_to_stationary(spin(), t), std::exp(-oracle::kKappa * t), 1e-6) << t;
    EXPECT_NEAR(distance_to_identity(spin(), t), oracle::closed_d_identity(p, t), 1e-4) << t;
    EXPECT_NEAR(distance_to_identity(spin(), t), oracle::bloch_d_identity(p, t), 1e-9) << t;
  }
}

TEST(Regimes, DistanceInvariants) {
  QuantumBackend b(random_lindbladian(3, 2, 21));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int rep = 0; rep < 10; ++rep) {
    double t1 = u(rng), t2 = u(rng), s = u(rng);
    EXPECT_EQ(distance(b, t1, t1), 0.0);
    EXPECT_NEAR(distance(b, t1, t2), distance(b, t2, t1), 1e-9);
    EXPECT_LE(distance(b, t1 + s, t2 + s), distance(b, t1, t2) + 1e-8);
    EXPECT_LE(distance(b, t1, t2), 2.0 + 1e-12);
  }
}

TEST(Regimes, ChangeMeasureReferenceWindows) {
  auto c = change_measure(spin(), 20.0, 40.0);
  EXPECT_NEAR(c.value, std::exp(-0.1) - std::exp(-0.2), 1e-9);
  EXPECT_NEAR(c.argmax, 40.0, 1e-9);
  // (6, 24) is dominated by the fast mode early in the window; frozen from a dense scan of the mode formulas
  auto c2 = change_measure(spin(), 6.0, 24.0);
  EXPECT_NEAR(c2.value, 0.0851814917552348, 1e-9);
  EXPECT_NEAR(c2.argmax, 6.590625, 1e-4);
  EXPECT_EQ(change_measure(spin(), 3.0, 3.0).value, 0.0);
  EXPECT_THROW(change_measure(spin(), 3.0, 2.0), DomainError);
}

TEST(Regimes, WindowSupremumRefines) {
  auto f = [](double t) { return std::sin(t); };
  auto s = window_supremum(f, 0.0, 3.0, {}, 0.0);
  EXPECT_NEAR(s.value, 1.0, 1e-12);
  EXPECT_NEAR(s.argmax, std::numbers::pi / 2, 1e-5);
}

TEST(Regimes, FirstCrossingFindsEarliestRoot) {
  // cos dips below 0 first at pi/2 even though the scan step is coarse relative to later roots
  auto c = first_crossing([](double t) { return std::cos(t); }, 0.0, 20.0, 0.0, false, [](double) { return 0.1; });
  ASSERT_TRUE(c.found);
  EXPECT_NEAR(c.t, std::numbers::pi / 2, 1e-10);
  auto none = first_crossing([](double) { return 0.5; }, 0.0, 1.0, 2.0, true, [](double) { return 0.1; });
  EXPECT_FALSE(none.found);
  EXPECT_FALSE(none.diagnostic.empty());
}

TEST(Regimes, ReferenceTimescales) {
  auto ts = timescales(spin());
  ASSERT_TRUE(ts.tau_0 && ts.tau_ss);
  EXPECT_NEAR(*ts.tau_ss, 200.0, 1e-6);
  // independent root of the closed-form d_I
  EXPECT_NEAR(*ts.tau_0, 0.131752630189621, 1e-9);
  EXPECT_LE(*ts.tau_0 * 0.5025, 1.0);
  EXPECT_LE(*ts.tau_0, *ts.tau_ss);
  EXPECT_LE(ts.tau_0_crossing.residual, 1e-6);
  EXPECT_LE(ts.tau_ss_crossing.residual, 1e-6);
  EXPECT_NEAR(ts.generator_norm, 5.050062499613249, 1e-8);
}

TEST(Regimes, ToyRealModeTimescale) {
  // two-state chain at rate 1/2: single mode lambda = -1
  ClassicalBackend b(two_state_chain(0.5));
  auto ts = timescales(b);
  ASSERT_TRUE(ts.tau_0 && ts.tau_ss);
  EXPECT_NEAR(*ts.tau_0, 1.0, 1e-9);
  EXPECT_NEAR(*ts.tau_ss, 1.0, 1e-9);
}

TEST(Regimes, TrivialDynamicsRejected) {
  QuantumBackend b(QuantumModel{Operator::Zero(2, 2), {}});
  EXPECT_THROW(timescales(b), TrivialDynamics);
  EXPECT_THROW(scan_metastable(b, 0.1, 2.0, TimeGrid{}), TrivialDynamics);
}

TEST(Regimes, ClassifyReferenceWindows) {
  auto v = classify_regime(spin(), 20.0, 40.0);
  EXPECT_EQ(v.verdict, Verdict::Metastable);
  EXPECT_NEAR(v.c_delta, 0.0861066649579777, 1e-9);
  EXPECT_NEAR(v.d_stationary_at_end, std::exp(-0.2), 1e-9);
  EXPECT_NEAR(v.thresholds.plus, std::exp(-0.1), 1e-12);
  EXPECT_GE(v.d_initial_at_start, v.thresholds.plus);

  auto i = classify_regime(spin(), 0.001, 0.002);
  EXPECT_EQ(i.verdict, Verdict::Initial);
  auto f = classify_regime(spin(), 1000.0, 2000.0);
  EXPECT_EQ(f.verdict, Verdict::Final);
  EXPECT_NEAR(f.d_stationary_at_start, std::exp(-5.0), 1e-9);
  EXPECT_THROW(classify_regime(spin(), 10.0, 15.0), DomainError);
}

TEST(Regimes, ClassifyIndeterminateRecordsCutoff) {
  // window straddling the fast decay: large change
  auto v = classify_regime(spin(), 0.1, 0.4);
  EXPECT_EQ(v.verdict, Verdict::Indeterminate);
  ASSERT_FALSE(v.validity_flags.empty());
}

TEST(Regimes, ScanFindsMetastableWindowsInsideTimescales) {
  auto ts = timescales(spin());
  auto found = scan_metastable(spin(), 0.1, 2.0, TimeGrid{1e-2, 1e3, 40, Spacing::log});
  ASSERT_FALSE(found.empty());
  for (const auto& v : found) {
    EXPECT_EQ(v.verdict, Verdict::Metastable);
    EXPECT_GT(v.t_start, *ts.tau_0);
    EXPECT_LT(v.t_end, *ts.tau_ss);
    EXPECT_GE(v.t_end, 2.0 * v.t_start);
    EXPECT_LE(v.c_delta, 0.1);
    EXPECT_GE(v.d_initial_at_start, v.thresholds.plus - 1e-8);
    EXPECT_GE(v.d_stationary_at_end, v.thresholds.plus - v.c_delta - 1e-8);
  }
  for (std::size_t k = 1; k < found.size(); ++k) EXPECT_LT(found[k - 1].t_start, found[k].t_start);
}

TEST(Regimes, NoSeparationNoMetastability) {
  QuantumBackend b(spin_half_dephasing(1.0, 1.0, 5.025));
  EXPECT_TRUE(scan_metastable(b, 0.1, 2.0, TimeGrid{1e-2, 1e3, 40, Spacing::log}).empty());
}

TEST(Regimes, RelaxationTimesReferenceWindow) {
  const double c = std::exp(-0.1) - std::exp(-0.2);
  auto r = relaxation_times(spin(), 20.0, 40.0, c);
  ASSERT_TRUE(r.tau_dprime && r.tau_prime);
  EXPECT_NEAR(*r.tau_dprime, 2.58543091295, 1e-7);
  EXPECT_NEAR(*r.tau_prime, 200.0, 1e-6);
  auto ts = timescales(spin());
  EXPECT_LE(*ts.tau_0, *r.tau_dprime);
  EXPECT_LT(*r.tau_dprime, 20.0);
  EXPECT_LT(40.0, *r.tau_prime);
  EXPECT_LE(*r.tau_prime, *ts.tau_ss + 1e-6);
  EXPECT_EQ(r.ratio_lower_bound, 7.0);
  EXPECT_TRUE(r.ratio_bound_holds);
  EXPECT_THROW(relaxation_times(spin(), 20.0, 40.0, 0.3), DomainError);
}

TEST(Regimes, RelaxationTimesWithoutChange) {
  // two-state chain: e^{tQ} - e^{t''Q} only has the relaxing mode; with C = 0 the crossing is at 1/e
  ClassicalBackend b(two_state_chain(0.5));
  auto r = relaxation_times(b, 5.0, 10.0, 0.0);
  ASSERT_TRUE(r.tau_dprime);
  EXPECT_NEAR(std::abs(std::exp(-*r.tau_dprime) - std::exp(-5.0)), 1.0 / std::numbers::e, 1e-9);
}

TEST(Regimes, DistinguishabilityBounds) {
  auto z = distinguishability_bounds(0.0);
  EXPECT_EQ(z.min_error, 0.5);
  EXPECT_EQ(z.fidelity_low, 1.0);
  EXPECT_EQ(z.fidelity_high, 1.0);
  auto t = distinguishability_bounds(2.0);
  EXPECT_EQ(t.min_error, 0.0);
  EXPECT_EQ(t.fidelity_low, 0.0);
  EXPECT_EQ(t.fidelity_high, 0.0);
  auto m = distinguishability_bounds(0.1);
  EXPECT_NEAR(m.min_error, 0.475, 1e-15);
  EXPECT_NEAR(m.fidelity_low, 0.95, 1e-15);
  EXPECT_NEAR(m.fidelity_high, 0.9975, 1e-15);
  EXPECT_THROW(distinguishability_bounds(2.5), DomainError);
}

TEST(Regimes, StationaryProjectorDistanceRange) {
  // amplitude decay has a decay subspace: ||I - P_ss|| reaches 2
  QuantumBackend d(qubit_decay(1.0));
  EXPECT_NEAR(d.norm(d.identity() - d.stationary_projector()), 2.0, 1e-9);
  EXPECT_GE(spin().norm(spin().identity() - spin().stationary_projector()), 1.0 - 1e-8);
}

TEST(Regimes, GridValidation) {
  EXPECT_THROW((TimeGrid{0.0, 1.0, 10, Spacing::log}.points()), InvalidInput);
  EXPECT_THROW((TimeGrid{1.0, 0.5, 10, Spacing::linear}.points()), InvalidInput);
  auto p = TimeGrid{1.0, 100.0, 3, Spacing::log}.points();
  EXPECT_NEAR(p[1], 10.0, 1e-12);
}
