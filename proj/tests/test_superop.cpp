#include <gtest/gtest.h>

#include "metastab.hpp"
#include "oracles.hpp"

using namespace metastab;

namespace {
QuantumModel reference_spin() { return spin_half_dephasing(oracle::kGamma, oracle::kKappa, oracle::kOmega); }

Operator random_operator(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Operator a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(g(rng), g(rng));
  return a;
}
}  // namespace

TEST(Superop, VecIdentity) {
  std::mt19937_64 rng(1);
  auto a = random_operator(3, rng), x = random_operator(3, rng), b = random_operator(3, rng);
  EXPECT_LT((vec(a * x * b) - kron(b.transpose(), a) * vec(x)).norm(), 1e-12);
  EXPECT_LT((unvec(vec(x), 3) - x).norm(), 0.0 + 1e-15);
  EXPECT_LT((dagger_vec(vec(x), 3) - vec(x.adjoint())).norm(), 1e-15);
}

TEST(Superop, LiouvillianMatchesMasterEquationAction) {
  auto m = reference_spin();
  auto l = build_liouvillian(m);
  EXPECT_LT((l.matrix - oracle::liouvillian_by_action(m.hamiltonian, m.jumps)).cwiseAbs().maxCoeff(), 1e-14);
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    QuantumModel r{hermitian_part(random_operator(3, rng)), {random_operator(3, rng), random_operator(3, rng)}};
    auto lr = build_liouvillian(r);
    EXPECT_LT((lr.matrix - oracle::liouvillian_by_action(r.hamiltonian, r.jumps)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(lr.trace_preserving);
    EXPECT_TRUE(lr.hermiticity_preserving);
  }
}

TEST(Superop, InvalidModelsRejected) {
  QuantumModel bad{spin_x() + Operator::Identity(2, 2) * cplx(0, 1), {}};
  EXPECT_THROW(build_liouvillian(bad), InvalidInput);
  QuantumModel mismatch{spin_x(), {Operator::Zero(3, 3)}};
  EXPECT_THROW(build_liouvillian(mismatch), InvalidInput);
}

TEST(Superop, ReferenceSpectrum) {
  auto sd = spectral_decompose(build_liouvillian(reference_spin()));
  const std::vector<cplx> expect{0.0, -0.005, cplx(-0.5025, 5.025), cplx(-0.5025, -5.025)};
  ASSERT_EQ(sd.size(), 4u);
  EXPECT_EQ(sd.m_ss(), 1u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_LE(std::abs(sd.eigenvalues()[k] - expect[k]), 1e-10 * std::max(1.0, std::abs(expect[k])));
  EXPECT_LT(sd.biorthonormality_residual(), 1e-12);
  // unital: stationary state is the maximally mixed state
  Operator rho = sd.right_mode(0) / sd.right_mode(0).trace();
  EXPECT_LT((rho - Operator::Identity(2, 2) / 2.0).norm(), 1e-12);
  EXPECT_LT((sd.left_mode(0) - Operator::Identity(2, 2) * (sd.left_mode(0)(0, 0))).norm(), 1e-12);
}

TEST(Superop, EvolutionAgreesWithMatrixExponential) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 4; ++rep) {
    QuantumModel r{hermitian_part(random_operator(3, rng)), {random_operator(3, rng)}};
    auto l = build_liouvillian(r);
    auto sd = spectral_decompose(l);
    for (double t : {0.0, 0.3, 2.0, 11.0}) {
      auto e = evolution(sd, t);
      EXPECT_LT((e.matrix - oracle::expm(l.matrix, t)).cwiseAbs().maxCoeff(), 1e-9) << "t=" << t;
      EXPECT_TRUE(check_trace_preserving(e));
      EXPECT_TRUE(check_hermiticity_preserving(e));
    }
  }
  auto sd = spectral_decompose(build_liouvillian(reference_spin()));
  EXPECT_EQ(evolution(sd, 0.0).matrix, Eigen::MatrixXcd::Identity(4, 4));
  EXPECT_THROW(evolution(sd, -1.0), DomainError);
}

TEST(Superop, StationaryProjectorIsIdempotentLimit) {
  auto l = build_liouvillian(reference_spin());
  auto sd = spectral_decompose(l);
  auto p = stationary_projector(sd);
  EXPECT_LT((p.matrix * p.matrix - p.matrix).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((p.matrix * l.matrix).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((evolution(sd, 1e4).matrix - p.matrix).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Superop, PureDephasingHasTwoStationaryModes) {
  auto sd = spectral_decompose(build_liouvillian(spin_half_dephasing(1.0, 0.0, 2.0)));
  EXPECT_EQ(sd.m_ss(), 2u);
  auto p = stationary_projector(sd);
  // diagonal states are untouched
  Operator rho = Operator::Zero(2, 2);
  rho(0, 0) = 0.8;
  rho(1, 1) = 0.2;
  EXPECT_LT((apply_to(p, rho) - rho).norm(), 1e-12);
}

TEST(Superop, DepolarizingLimitHasMaximallyMixedFixedPoint) {
  auto sd = spectral_decompose(build_liouvillian(spin_half_dephasing(0.0, 0.3, 0.0)));
  EXPECT_EQ(sd.m_ss(), 1u);
  Operator rho = Operator::Zero(2, 2);
  rho(0, 0) = 1.0;
  EXPECT_LT((apply_to(stationary_projector(sd), rho) - Operator::Identity(2, 2) / 2.0).norm(), 1e-12);
}

TEST(Superop, SlowProjectorCuts) {
  auto sd = spectral_decompose(build_liouvillian(reference_spin()));
  EXPECT_NO_THROW(slow_projector(sd, 2));
  EXPECT_THROW(slow_projector(sd, 3), InvalidCut);  // splits -Gamma +- i omega
  EXPECT_THROW(slow_projector(sd, 0), InvalidCut);
  EXPECT_THROW(slow_projector(sd, 5), InvalidCut);
  auto full = slow_projector(sd, 4);
  EXPECT_LT((full.matrix - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Superop, DefectiveGeneratorDetected) {
  EXPECT_NO_THROW(spectral_decompose(build_liouvillian(qubit_decay(1.0))));
  // Jordan block on the coherences
  Superoperator j{2, Eigen::MatrixXcd::Zero(4, 4), true, true};
  j.matrix(1, 1) = -1.0;
  j.matrix(2, 2) = -1.0;
  j.matrix(1, 2) = 1.0;
  try {
    spectral_decompose(j);
    FAIL() << "expected DefectiveLiouvillian";
  } catch (const DefectiveLiouvillian& e) {
    EXPECT_GT(e.condition, kDefectTol);
  }
}

TEST(Superop, RequiresPreservationFlags) {
  Superoperator l = build_liouvillian(reference_spin());
  l.trace_preserving = false;
  EXPECT_THROW(spectral_decompose(l), ContractViolation);
}
