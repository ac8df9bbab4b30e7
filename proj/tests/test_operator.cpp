#include <gtest/gtest.h>

#include "metastab.hpp"

using namespace metastab;

TEST(Operator, TraceNormOfPauliDifference) {
  // |0><0| - |1><1| has trace norm 2, max norm 1
  Operator z = 2.0 * spin_z();
  EXPECT_NEAR(trace_norm(z), 2.0, 1e-14);
  EXPECT_NEAR(max_norm(z), 1.0, 1e-14);
}

TEST(Operator, NonHermitianNormsUseSingularValues) {
  Operator a(2, 2);
  a << 0, 3, 0, 0;
  EXPECT_NEAR(trace_norm(a), 3.0, 1e-14);
  EXPECT_NEAR(max_norm(a), 3.0, 1e-14);
  Operator b(2, 2);
  b << 1, 1, 0, 1;
  // singular values of [[1,1],[0,1]] are the golden ratio and its inverse
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  EXPECT_NEAR(trace_norm(b), phi + 1.0 / phi, 1e-13);
  EXPECT_NEAR(max_norm(b), phi, 1e-13);
}

TEST(Operator, TraceAndMaxNormAreDual) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int rep = 0; rep < 20; ++rep) {
    Operator a(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = cplx(g(rng), g(rng));
    a = hermitian_part(a);
    auto e = herm_eig(a);
    Operator sign = Operator::Zero(3, 3);
    for (int k = 0; k < 3; ++k) sign += (e.values(k) >= 0 ? 1.0 : -1.0) * e.vectors.col(k) * e.vectors.col(k).adjoint();
    EXPECT_NEAR((sign * a).trace().real(), trace_norm(a), 1e-12);
    EXPECT_NEAR(max_norm(sign), 1.0, 1e-12);
  }
}

TEST(Operator, HermEigRejectsNonHermitian) {
  Operator a(2, 2);
  a << 0, 1, 0, 0;
  EXPECT_THROW(herm_eig(a), ContractViolation);
}

TEST(Operator, HermEigPhaseConvention) {
  Operator x = spin_x();
  auto e = herm_eig(x);
  EXPECT_NEAR(e.values(0), -0.5, 1e-15);
  EXPECT_NEAR(e.values(1), 0.5, 1e-15);
  for (int k = 0; k < 2; ++k) {
    Eigen::Index imax;
    e.vectors.col(k).cwiseAbs().maxCoeff(&imax);
    EXPECT_NEAR(e.vectors(imax, k).imag(), 0.0, 1e-15);
    EXPECT_GT(e.vectors(imax, k).real(), 0.0);
  }
}

TEST(Operator, NonFiniteInputRejected) {
  Operator a = Operator::Zero(2, 2);
  a(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(trace_norm(a), InvalidInput);
}

TEST(Operator, SpinAlgebra) {
  const cplx i(0, 1);
  EXPECT_LT((spin_x() * spin_y() - spin_y() * spin_x() - i * spin_z()).norm(), 1e-15);
  EXPECT_LT((spin_x() * spin_x() + spin_y() * spin_y() + spin_z() * spin_z() - 0.75 * Operator::Identity(2, 2)).norm(),
            1e-15);
}

TEST(Operator, DensityMatrixCheck) {
  EXPECT_TRUE(is_density_matrix(Operator::Identity(2, 2) / 2.0));
  EXPECT_FALSE(is_density_matrix(spin_z()));
  StateVector psi(2);
  psi << 1.0 / std::sqrt(2.0), cplx(0, 1.0 / std::sqrt(2.0));
  EXPECT_TRUE(is_density_matrix(projector(psi)));
}
