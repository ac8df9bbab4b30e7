#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>

#include "errors.hpp"

namespace metastab {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr double kHermitianTol = 1e-12;

inline double max_abs(const Operator& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

inline void require_finite(const Operator& a, const char* what = "operator") {
  if (!a.allFinite()) throw InvalidInput(std::string(what) + " has non-finite entries");
}

inline bool is_square(const Operator& a) { return a.rows() == a.cols(); }

inline bool is_hermitian(const Operator& a, double rel_tol = kHermitianTol) {
  if (!is_square(a)) return false;
  double scale = max_abs(a);
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * std::max(scale, 1e-300) ||
         scale == 0.0;
}

inline Operator hermitian_part(const Operator& a) { return 0.5 * (a + a.adjoint()); }

struct HermEig {
  Eigen::VectorXd values;  // ascending
  Operator vectors;        // orthonormal columns
};

// Phase convention: largest-magnitude component of each eigenvector is real positive.
inline void fix_phases(Operator& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      double m = std::abs(v(i, j));
      if (m > best * (1.0 + 1e-12)) {
        best = m;
        imax = i;
      }
    }
    if (best > 0.0) v.col(j) *= std::conj(v(imax, j)) / best;
  }
}

inline HermEig herm_eig_unchecked(const Operator& a) {
  Eigen::SelfAdjointEigenSolver<Operator> es(hermitian_part(a));
  return {es.eigenvalues(), es.eigenvectors()};
}

inline HermEig herm_eig(const Operator& a) {
  require_finite(a);
  if (!is_hermitian(a)) throw ContractViolation("herm_eig: operator is not Hermitian");
  HermEig r = herm_eig_unchecked(a);
  fix_phases(r.vectors);
  return r;
}

inline Eigen::VectorXd singular_values(const Operator& a) {
  Eigen::JacobiSVD<Operator> svd(a);
  return svd.singularValues();
}

inline double trace_norm(const Operator& a) {
  require_finite(a);
  if (a.size() == 0) return 0.0;
  if (is_hermitian(a)) return herm_eig_unchecked(a).values.cwiseAbs().sum();
  return singular_values(a).sum();
}

inline double max_norm(const Operator& a) {
  require_finite(a);
  if (a.size() == 0) return 0.0;
  if (is_hermitian(a)) return herm_eig_unchecked(a).values.cwiseAbs().maxCoeff();
  return singular_values(a)(0);
}

inline bool is_density_matrix(const Operator& rho, double tol = 1e-10) {
  if (!is_hermitian(rho)) return false;
  if (std::abs(rho.trace() - cplx(1.0)) > tol) return false;
  return herm_eig_unchecked(rho).values.minCoeff() >= -tol;
}

// spin-1/2 operators S_i = sigma_i / 2
inline Operator spin_x() {
  Operator s(2, 2);
  s << 0, 0.5, 0.5, 0;
  return s;
}
inline Operator spin_y() {
  Operator s(2, 2);
  s << 0, cplx(0, -0.5), cplx(0, 0.5), 0;
  return s;
}
inline Operator spin_z() {
  Operator s(2, 2);
  s << 0.5, 0, 0, -0.5;
  return s;
}

inline Operator projector(const StateVector& psi) { return psi * psi.adjoint(); }

}  // namespace metastab
