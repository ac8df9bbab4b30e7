#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "backend.hpp"

namespace metastab {

// Rate matrix acting on probability column vectors: Q(i, j) is the rate j -> i.
struct ClassicalGenerator {
  Eigen::MatrixXd q;

  Eigen::Index dim() const { return q.rows(); }

  void validate() const {
    if (q.rows() == 0 || q.rows() != q.cols()) throw InvalidInput("rate matrix must be non-empty and square");
    if (!q.allFinite()) throw InvalidInput("rate matrix has non-finite entries");
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      if (std::abs(q.col(j).sum()) > 1e-12 * scale) throw InvalidInput("rate matrix columns must sum to zero");
      for (Eigen::Index i = 0; i < q.rows(); ++i)
        if (i != j && q(i, j) < 0.0) throw InvalidInput("off-diagonal rates must be nonnegative");
    }
  }
};

// Fills the diagonal so columns sum to zero.
inline ClassicalGenerator generator_from_rates(Eigen::MatrixXd rates) {
  for (Eigen::Index j = 0; j < rates.cols(); ++j) {
    rates(j, j) = 0.0;
    rates(j, j) = -rates.col(j).sum();
  }
  ClassicalGenerator g{std::move(rates)};
  g.validate();
  return g;
}

inline double l1_induced_norm(const Eigen::MatrixXd& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().colwise().sum().maxCoeff();
}

inline SpectralBasis classical_spectrum(const ClassicalGenerator& g, double zero_tol = -1.0,
                                        double defect_tol = kDefectTol) {
  g.validate();
  auto inv = [](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return v.conjugate(); };
  Eigen::RowVectorXcd ones = Eigen::RowVectorXcd::Ones(g.dim());
  auto sb = detail::decompose(g.q.cast<cplx>(), inv, ones, zero_tol, defect_tol);
  for (std::size_t k = sb.m_ss; k < sb.size(); ++k)
    if (!(sb.values[k].real() < -sb.zero_tol)) throw DomainError("rate matrix has a non-decaying oscillating mode");
  return sb;
}

inline Eigen::MatrixXd classical_evolution(const ClassicalGenerator& g, double t) {
  if (!(t >= 0.0)) throw DomainError("classical_evolution: negative time");
  return classical_spectrum(g).exp(t).real();
}

class ClassicalBackend {
 public:
  using matrix_type = Eigen::MatrixXd;

  explicit ClassicalBackend(ClassicalGenerator g, double zero_tol = -1.0)
      : g_(std::move(g)), sb_(classical_spectrum(g_, zero_tol)) {
    pss_ = sb_.projector(sb_.m_ss).real();
    lnorm_ = l1_induced_norm(g_.q);
  }

  Eigen::Index dim() const { return g_.dim(); }
  const ClassicalGenerator& generator_data() const { return g_; }
  const SpectralBasis& spectral() const { return sb_; }
  const SpectralBasis& basis() const { return sb_; }
  const std::vector<cplx>& eigenvalues() const { return sb_.values; }
  std::size_t stationary_count() const { return sb_.m_ss; }

  Eigen::MatrixXd evolution(double t) const {
    if (!(t >= 0.0)) throw DomainError("evolution: negative time");
    return sb_.exp(t).real();
  }
  Eigen::MatrixXd identity() const { return Eigen::MatrixXd::Identity(dim(), dim()); }
  Eigen::MatrixXd stationary_projector() const { return pss_; }
  Eigen::MatrixXd slow_projector(std::size_t m) const {
    if (m < sb_.m_ss || m > sb_.size()) throw InvalidCut("slow_projector: m outside [m_ss, n]");
    if (!respects_pairs(sb_.values, m)) throw InvalidCut("slow_projector: m splits a conjugate pair");
    return sb_.projector(m).real();
  }
  Eigen::MatrixXd generator() const { return g_.q; }

  // p -> diag(o) p for a random observable with max |o_i| = 1
  Eigen::MatrixXd correlator(std::uint64_t seed) const {
    auto rng = detail::stream(seed, 0x636c6173ULL);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd o(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) o(i) = u(rng);
    o /= o.cwiseAbs().maxCoeff();
    return o.asDiagonal();
  }

  double norm(const Eigen::MatrixXd& x) const { return l1_induced_norm(x); }
  double generator_norm() const { return lnorm_; }

  void override_stationary(Eigen::MatrixXd p) { pss_ = std::move(p); }

 private:
  ClassicalGenerator g_;
  SpectralBasis sb_;
  Eigen::MatrixXd pss_;
  double lnorm_ = 0.0;
};

static_assert(DynamicsBackend<ClassicalBackend>);

inline double l1_induced_distance(const ClassicalGenerator& g, double t1, double t2) {
  if (!(t1 >= 0.0 && t2 >= 0.0)) throw DomainError("l1_induced_distance: negative time");
  if (t1 == t2) return 0.0;
  auto sb = classical_spectrum(g);
  return l1_induced_norm(sb.exp(t1).real() - sb.exp(t2).real());
}

// Lindbladian with H = 0 and jumps sqrt(Q_ij)|i><j|; on diagonal states it reproduces the chain.
inline QuantumModel embed_classical(const ClassicalGenerator& g) {
  g.validate();
  const Eigen::Index n = g.dim();
  QuantumModel m{Operator::Zero(n, n), {}};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && g.q(i, j) > 0.0) {
        Operator jump = Operator::Zero(n, n);
        jump(i, j) = std::sqrt(g.q(i, j));
        m.jumps.push_back(jump);
      }
  return m;
}

// Superoperator keeping only the diagonal of its input.
inline Superoperator dephasing_projector(Eigen::Index d) {
  Superoperator s = zero_superop(d);
  for (Eigen::Index i = 0; i < d; ++i) s.matrix(i + d * i, i + d * i) = 1.0;
  s.trace_preserving = true;
  return s;
}

}  // namespace metastab
