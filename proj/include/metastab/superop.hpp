#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "operator.hpp"

namespace metastab {

struct QuantumModel {
  Operator hamiltonian;
  std::vector<Operator> jumps;

  Eigen::Index dim() const { return hamiltonian.rows(); }

  void validate() const {
    if (hamiltonian.rows() == 0 || !is_square(hamiltonian))
      throw InvalidInput("hamiltonian must be a non-empty square matrix");
    require_finite(hamiltonian, "hamiltonian");
    if (!is_hermitian(hamiltonian, 1e-10)) throw InvalidInput("hamiltonian is not Hermitian");
    for (const auto& j : jumps) {
      if (j.rows() != dim() || j.cols() != dim())
        throw InvalidInput("jump operator dimension does not match the hamiltonian");
      require_finite(j, "jump operator");
    }
  }
};

// Column-stacking convention: vec(X)[i + D*j] = X(i, j), so vec(A X B) = (B^T kron A) vec(X).
struct Superoperator {
  Eigen::Index dim = 0;
  Eigen::MatrixXcd matrix;
  bool hermiticity_preserving = true;
  bool trace_preserving = false;

  Eigen::Index size() const { return dim * dim; }
};

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Eigen::VectorXcd vec(const Operator& x) {
  return Eigen::Map<const Eigen::VectorXcd>(x.data(), x.size());
}

inline Operator unvec(const Eigen::VectorXcd& v, Eigen::Index d) {
  return Eigen::Map<const Operator>(v.data(), d, d);
}

// vec(X^dagger) from vec(X)
inline Eigen::VectorXcd dagger_vec(const Eigen::VectorXcd& v, Eigen::Index d) {
  Eigen::VectorXcd out(v.size());
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(j + d * i) = std::conj(v(i + d * j));
  return out;
}

inline Superoperator identity_superop(Eigen::Index d) {
  return {d, Eigen::MatrixXcd::Identity(d * d, d * d), true, true};
}

inline Superoperator zero_superop(Eigen::Index d) {
  return {d, Eigen::MatrixXcd::Zero(d * d, d * d), true, false};
}

inline Superoperator operator+(const Superoperator& a, const Superoperator& b) {
  return {a.dim, a.matrix + b.matrix, a.hermiticity_preserving && b.hermiticity_preserving, false};
}
inline Superoperator operator-(const Superoperator& a, const Superoperator& b) {
  return {a.dim, a.matrix - b.matrix, a.hermiticity_preserving && b.hermiticity_preserving, false};
}
// composition: (a * b)(X) = a(b(X))
inline Superoperator operator*(const Superoperator& a, const Superoperator& b) {
  return {a.dim, a.matrix * b.matrix, a.hermiticity_preserving && b.hermiticity_preserving,
          a.trace_preserving && b.trace_preserving};
}
inline Superoperator operator*(double s, const Superoperator& a) {
  return {a.dim, s * a.matrix, a.hermiticity_preserving, false};
}

inline Operator apply_to(const Superoperator& x, const Operator& a) {
  return unvec(x.matrix * vec(a), x.dim);
}

// Adjoint with respect to the Hilbert-Schmidt product Tr(A^dagger B).
inline Superoperator adjoint(const Superoperator& x) {
  return {x.dim, x.matrix.adjoint(), x.hermiticity_preserving, false};
}

// Numerical check of X(A^dagger) = X(A)^dagger, i.e. M = S conj(M) S with S the transpose swap.
inline bool check_hermiticity_preserving(const Superoperator& x, double rel_tol = 1e-9) {
  const Eigen::Index d = x.dim, n = d * d;
  double scale = x.matrix.size() ? x.matrix.cwiseAbs().maxCoeff() : 0.0;
  double tol = rel_tol * std::max(scale, 1.0);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l) {
          cplx a = x.matrix(i + d * j, k + d * l);
          cplx b = std::conj(x.matrix(j + d * i, l + d * k));
          if (std::abs(a - b) > tol) return false;
        }
  (void)n;
  return true;
}

inline bool check_trace_preserving(const Superoperator& x, double tol = 1e-10) {
  Eigen::RowVectorXcd tr = vec(Operator::Identity(x.dim, x.dim)).transpose();
  return (tr * x.matrix - tr).cwiseAbs().maxCoeff() <= tol;
}

inline Superoperator build_liouvillian(const QuantumModel& model) {
  model.validate();
  const Eigen::Index d = model.dim();
  const Operator id = Operator::Identity(d, d);
  const Operator& h = model.hamiltonian;
  Eigen::MatrixXcd l = cplx(0, -1) * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& j : model.jumps) {
    Operator jdj = j.adjoint() * j;
    l += kron(j.conjugate(), j) - 0.5 * (kron(id, jdj) + kron(jdj.transpose(), id));
  }
  return {d, std::move(l), true, true};
}

// Biorthonormal eigenbasis of a diagonalizable generator. The decomposition is
// generic: `conj_map` is the antilinear involution the generator commutes with
// (operator adjoint for Liouvillians, complex conjugation for rate matrices).
struct SpectralBasis {
  std::vector<cplx> values;  // sorted
  Eigen::MatrixXcd right;    // columns
  Eigen::MatrixXcd left;     // rows, left * right = 1
  std::vector<std::size_t> raw_index;
  std::size_t m_ss = 0;
  double zero_tol = 0.0;
  double condition = 1.0;

  std::size_t size() const { return values.size(); }

  Eigen::MatrixXcd projector(std::size_t m) const {
    return right.leftCols(m) * left.topRows(m);
  }

  Eigen::MatrixXcd exp(double t) const {
    const auto n = static_cast<Eigen::Index>(values.size());
    if (t == 0.0) return Eigen::MatrixXcd::Identity(n, n);
    Eigen::VectorXcd e(n);
    for (Eigen::Index k = 0; k < n; ++k) e(k) = std::exp(t * values[k]);
    return right * e.asDiagonal() * left;
  }
};

inline constexpr double kDefectTol = 1e8;

namespace detail {

using Involution = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

// Real basis of span{v_j} restricted to fixed points of the involution.
inline Eigen::MatrixXcd fixed_point_basis(const Eigen::MatrixXcd& vs, const Involution& inv) {
  const Eigen::Index n = vs.rows(), g = vs.cols();
  Eigen::MatrixXd cand(2 * n, 2 * g);
  for (Eigen::Index j = 0; j < g; ++j) {
    Eigen::VectorXcd v = vs.col(j), jv = inv(v);
    Eigen::VectorXcd a = 0.5 * (v + jv);
    Eigen::VectorXcd b = cplx(0, -0.5) * (v - jv);
    cand.col(2 * j) << a.real(), a.imag();
    cand.col(2 * j + 1) << b.real(), b.imag();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(cand, Eigen::ComputeThinU);
  Eigen::MatrixXcd out(n, g);
  for (Eigen::Index j = 0; j < g; ++j) {
    Eigen::VectorXd u = svd.matrixU().col(j);
    out.col(j) = u.head(n).cast<cplx>() + cplx(0, 1) * u.tail(n).cast<cplx>();
  }
  return out;
}

inline SpectralBasis decompose(const Eigen::MatrixXcd& gen, const Involution& inv,
                               const Eigen::RowVectorXcd& trace_row, double zero_tol,
                               double defect_tol) {
  if (!gen.allFinite()) throw InvalidInput("generator has non-finite entries");
  const Eigen::Index n = gen.rows();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(gen, true);
  if (es.info() != Eigen::Success) throw Error("eigensolver failed");
  Eigen::VectorXcd raw = es.eigenvalues();
  Eigen::MatrixXcd rv = es.eigenvectors();

  double scale = raw.size() ? raw.cwiseAbs().maxCoeff() : 0.0;
  if (zero_tol < 0) zero_tol = 1e-9 * scale;
  const double ctol = std::max(1e-8 * scale, zero_tol);

  // single-linkage clusters of numerically equal eigenvalues; zero modes form one cluster
  std::vector<int> cluster(n, -1);
  int nclus = 0;
  std::vector<Eigen::Index> zeros;
  for (Eigen::Index k = 0; k < n; ++k)
    if (std::abs(raw(k)) <= zero_tol) zeros.push_back(k);
  if (!zeros.empty()) {
    for (auto k : zeros) cluster[k] = 0;
    nclus = 1;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (cluster[k] >= 0) continue;
    cluster[k] = nclus;
    std::vector<Eigen::Index> stack{k};
    while (!stack.empty()) {
      auto a = stack.back();
      stack.pop_back();
      for (Eigen::Index b = 0; b < n; ++b)
        if (cluster[b] < 0 && std::abs(raw(a) - raw(b)) <= ctol) {
          cluster[b] = nclus;
          stack.push_back(b);
        }
    }
    ++nclus;
  }
  std::vector<std::vector<Eigen::Index>> members(nclus);
  for (Eigen::Index k = 0; k < n; ++k) members[cluster[k]].push_back(k);
  std::vector<cplx> mean(nclus);
  for (int c = 0; c < nclus; ++c) {
    cplx s = 0;
    for (auto k : members[c]) s += raw(k);
    mean[c] = s / double(members[c].size());
  }
  const bool has_zero = !zeros.empty();
  if (has_zero) mean[0] = 0.0;

  struct Mode {
    cplx value;
    Eigen::VectorXcd vec;
    std::size_t raw;
  };
  std::vector<Mode> modes;
  modes.reserve(n);
  std::vector<bool> done(nclus, false);
  for (int c = 0; c < nclus; ++c) {
    if (done[c]) continue;
    const auto& mem = members[c];
    Eigen::MatrixXcd vs(n, mem.size());
    for (std::size_t j = 0; j < mem.size(); ++j) vs.col(j) = rv.col(mem[j]).normalized();
    if (mem.size() > 1) {
      // a Jordan block shows up as (nearly) parallel eigenvectors inside one cluster
      Eigen::JacobiSVD<Eigen::MatrixXcd> cs(vs);
      const auto& sv = cs.singularValues();
      double cc = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
      if (!(cc <= defect_tol)) throw DefectiveLiouvillian(cc);
    }
    if ((has_zero && c == 0) || std::abs(mean[c].imag()) <= ctol) {
      Eigen::MatrixXcd basis = fixed_point_basis(vs, inv);
      double re = mean[c].real();
      for (std::size_t j = 0; j < mem.size(); ++j)
        modes.push_back({cplx(re, 0.0), basis.col(j), static_cast<std::size_t>(mem[j])});
      done[c] = true;
      continue;
    }
    // complex cluster: locate its conjugate partner
    int partner = -1;
    double best = ctol * 10 + 1e-300;
    for (int o = 0; o < nclus; ++o) {
      if (o == c || done[o] || members[o].size() != mem.size()) continue;
      double dist = std::abs(mean[o] - std::conj(mean[c]));
      if (dist <= best) {
        best = dist;
        partner = o;
      }
    }
    if (partner < 0) throw ContractViolation("spectrum is not closed under conjugation");
    const auto& pm = members[partner];
    cplx mu = 0.5 * (mean[c] + std::conj(mean[partner]));
    for (std::size_t j = 0; j < mem.size(); ++j) {
      Eigen::VectorXcd v = vs.col(j);
      modes.push_back({mu, v, static_cast<std::size_t>(mem[j])});
      modes.push_back({std::conj(mu), inv(v), static_cast<std::size_t>(pm[j])});
    }
    done[c] = done[partner] = true;
  }

  std::sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) {
    if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
    double ia = std::abs(a.value.imag()), ib = std::abs(b.value.imag());
    if (ia != ib) return ia < ib;
    return a.raw < b.raw;
  });

  SpectralBasis sb;
  sb.zero_tol = zero_tol;
  sb.right.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXcd v = modes[k].vec;
    double nv = v.norm();
    if (nv > 0) v /= nv;
    sb.right.col(k) = v;
    sb.values.push_back(modes[k].value);
    sb.raw_index.push_back(modes[k].raw);
    if (modes[k].value == cplx(0.0)) ++sb.m_ss;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(sb.right);
  const auto& s = svd.singularValues();
  sb.condition = s(n - 1) > 0 ? s(0) / s(n - 1) : std::numeric_limits<double>::infinity();
  if (!(sb.condition <= defect_tol)) throw DefectiveLiouvillian(sb.condition);
  sb.left = sb.right.fullPivLu().inverse();

  // unique stationary mode: make the left mode the trace functional itself
  if (sb.m_ss == 1) {
    Eigen::Index idx;
    trace_row.cwiseAbs().maxCoeff(&idx);
    cplx c = sb.left(0, idx) / trace_row(idx);
    sb.left.row(0) /= c;
    sb.right.col(0) *= c;
  }
  return sb;
}

}  // namespace detail

struct SpectralData {
  Eigen::Index dim = 0;
  SpectralBasis basis;

  const std::vector<cplx>& eigenvalues() const { return basis.values; }
  std::size_t m_ss() const { return basis.m_ss; }
  double eigvec_condition() const { return basis.condition; }
  double zero_tol() const { return basis.zero_tol; }
  std::size_t size() const { return basis.size(); }

  // 0-based k
  Operator right_mode(std::size_t k) const { return unvec(basis.right.col(k), dim); }
  // Tr(L_k rho) = left row k . vec(rho)
  Operator left_mode(std::size_t k) const {
    Eigen::VectorXcd w = basis.left.row(k).transpose();
    return unvec(w, dim).transpose();
  }

  double biorthonormality_residual() const {
    const auto n = static_cast<Eigen::Index>(size());
    return (basis.left * basis.right - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  }
};

inline SpectralData spectral_decompose(const Superoperator& l, double zero_tol = -1.0,
                                       double defect_tol = kDefectTol) {
  if (!l.hermiticity_preserving || !l.trace_preserving)
    throw ContractViolation("spectral_decompose needs a hermiticity- and trace-preserving generator");
  const Eigen::Index d = l.dim;
  auto inv = [d](const Eigen::VectorXcd& v) { return dagger_vec(v, d); };
  Eigen::RowVectorXcd tr = vec(Operator::Identity(d, d)).transpose();
  SpectralData sd;
  sd.dim = d;
  sd.basis = detail::decompose(l.matrix, inv, tr, zero_tol, defect_tol);
  for (std::size_t k = sd.m_ss(); k < sd.size(); ++k)
    if (!(sd.basis.values[k].real() < -sd.zero_tol()))
      throw DomainError("non-decaying oscillating mode: time-dependent asymptotics unsupported");
  return sd;
}

inline Superoperator evolution(const SpectralData& sd, double t) {
  if (!(t >= 0.0)) throw DomainError("evolution: negative or non-finite time");
  return {sd.dim, sd.basis.exp(t), true, true};
}

inline Superoperator stationary_projector(const SpectralData& sd) {
  return {sd.dim, sd.basis.projector(sd.m_ss()), true, true};
}

// true when the first m eigenvalues form a set closed under conjugation
inline bool respects_pairs(const std::vector<cplx>& vals, std::size_t m) {
  if (m == 0 || m >= vals.size()) return true;
  for (std::size_t k = 0; k < m; ++k) {
    if (vals[k].imag() == 0.0) continue;
    std::ptrdiff_t bal = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (vals[j] == vals[k]) ++bal;
      if (vals[j] == std::conj(vals[k])) --bal;
    }
    if (bal != 0) return false;
  }
  return true;
}

inline Superoperator slow_projector(const SpectralData& sd, std::size_t m) {
  if (m < sd.m_ss() || m > sd.size())
    throw InvalidCut("slow_projector: m outside [m_ss, D^2]");
  if (!respects_pairs(sd.eigenvalues(), m)) throw InvalidCut("slow_projector: m splits a conjugate pair");
  return {sd.dim, sd.basis.projector(m), true, m >= sd.m_ss()};
}

}  // namespace metastab
