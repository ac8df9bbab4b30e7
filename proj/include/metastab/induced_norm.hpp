#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <numeric>
#include <random>
#include <vector>

#include "superop.hpp"

namespace metastab {

struct InducedNormOptions {
  int restarts = 16;
  int max_iter = 200;
  double rel_tol = 1e-10;
  std::uint64_t seed = 0;
};

struct InducedNormResult {
  double value = 0.0;
  StateVector witness_state;
  Operator witness_observable;
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  bool monotone = true;
  double restart_spread = 0.0;  // best minus worst local maximum
};

namespace detail {

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

inline StateVector random_state(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  StateVector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = cplx(g(rng), g(rng));
  return v / v.norm();
}

// quasi-uniform points on the Bloch sphere
inline std::vector<StateVector> bloch_grid(int n) {
  std::vector<StateVector> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - (2.0 * i + 1.0) / n;
    double theta = std::acos(z), phi = golden * i;
    StateVector v(2);
    v << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
    out.push_back(v);
  }
  return out;
}

inline Eigen::VectorXcd vec_pure(const StateVector& psi) {
  const Eigen::Index d = psi.size();
  Eigen::VectorXcd v(d * d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) v(i + d * j) = psi(i) * std::conj(psi(j));
  return v;
}

inline Operator sign_operator(const HermEig& e) {
  const Eigen::Index d = e.values.size();
  Operator o = Operator::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double s = e.values(i) >= 0.0 ? 1.0 : -1.0;  // zero eigenvalues go to the positive part
    o += s * e.vectors.col(i) * e.vectors.col(i).adjoint();
  }
  return o;
}

inline Eigen::Index top_abs_index(const Eigen::VectorXd& vals) {
  Eigen::Index imax = 0;
  for (Eigen::Index i = 1; i < vals.size(); ++i)
    if (std::abs(vals(i)) > std::abs(vals(imax))) imax = i;
  return imax;
}

struct AscentRun {
  double value = 0.0;
  StateVector psi;
  Operator sign;
  int iterations = 0;
  bool converged = false;
  bool monotone = true;
};

// Alternating maximisation of Tr[O X(psi psi^dagger)].
inline AscentRun ascend(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& xdag, Eigen::Index d,
                        StateVector psi, const InducedNormOptions& opt) {
  AscentRun r;
  auto eval = [&](const StateVector& p, HermEig& e) {
    e = herm_eig_unchecked(unvec(x * vec_pure(p), d));
    return e.values.cwiseAbs().sum();
  };
  HermEig em;
  double f = eval(psi, em);
  r.value = f;
  r.psi = psi;
  r.sign = sign_operator(em);
  for (int it = 0; it < opt.max_iter; ++it) {
    r.iterations = it + 1;
    HermEig ea = herm_eig_unchecked(unvec(xdag * vec(r.sign), d));
    StateVector next = ea.vectors.col(top_abs_index(ea.values));
    HermEig en;
    double fn = eval(next, en);
    if (fn < f - 1e-12 * std::max(1.0, f)) r.monotone = false;
    // the plain step converges linearly on flat maxima; push further along it while that pays
    cplx ov = psi.dot(next);
    StateVector dir = next - (std::abs(ov) > 0 ? ov / std::abs(ov) : cplx(1.0)) * psi;
    for (double beta = 1.0; beta < 1e8 && dir.norm() > 1e-15; beta *= 2.0) {
      StateVector cand = (next + beta * dir).normalized();
      HermEig ec;
      double fc = eval(cand, ec);
      if (!(fc > fn)) break;
      fn = fc;
      next = cand;
      en = std::move(ec);
    }
    const bool done = fn - f <= opt.rel_tol * std::max(fn, 1e-300);
    if (fn >= f) {
      f = fn;
      psi = next;
      r.value = f;
      r.psi = psi;
      r.sign = sign_operator(en);
    }
    if (done) {
      r.converged = true;
      break;
    }
  }
  return r;
}

inline std::vector<StateVector> starting_states(Eigen::Index d, const InducedNormOptions& opt,
                                                const StateVector* warm) {
  std::vector<StateVector> starts;
  if (warm && warm->size() == d && warm->norm() > 0) starts.push_back(*warm / warm->norm());
  for (Eigen::Index i = 0; i < d; ++i) starts.push_back(StateVector::Unit(d, i));
  if (d == 2)
    for (auto& s : bloch_grid(24)) starts.push_back(s);
  int nrand = std::max<int>(opt.restarts, static_cast<int>(4 * d));
  for (int k = 0; k < nrand; ++k) {
    auto rng = stream(opt.seed, static_cast<std::uint64_t>(k));
    starts.push_back(random_state(d, rng));
  }
  return starts;
}

}  // namespace detail

// Induced trace norm sup_rho ||X(rho)||_1 over Hermitian inputs. The value is a
// lower bound that is exact whenever some restart reaches the global maximum.
inline InducedNormResult induced_trace_norm(const Superoperator& x, const InducedNormOptions& opt = {},
                                            const StateVector* warm_start = nullptr) {
  if (!x.matrix.allFinite()) throw InvalidInput("induced_trace_norm: non-finite superoperator");
  if (!check_hermiticity_preserving(x))
    throw ContractViolation("induced_trace_norm: superoperator is not hermiticity-preserving");
  const Eigen::Index d = x.dim;
  const Eigen::MatrixXcd xdag = x.matrix.adjoint();
  InducedNormResult res;
  // screen every start with a short ascent, then polish the best few to tolerance
  InducedNormOptions screen = opt;
  screen.max_iter = std::min(opt.max_iter, 30);
  std::vector<detail::AscentRun> runs;
  for (const auto& s : detail::starting_states(d, opt, warm_start)) {
    runs.push_back(detail::ascend(x.matrix, xdag, d, s, screen));
    res.iterations += runs.back().iterations;
    res.monotone = res.monotone && runs.back().monotone;
  }
  res.restarts_used = static_cast<int>(runs.size());
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : runs) worst = std::min(worst, r.value);
  std::vector<std::size_t> order(runs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return runs[a].value > runs[b].value; });
  bool have = false;
  for (std::size_t k = 0; k < std::min<std::size_t>(3, order.size()); ++k) {
    auto run = runs[order[k]];
    if (!run.converged) {
      auto more = detail::ascend(x.matrix, xdag, d, run.psi, opt);
      res.iterations += more.iterations;
      res.monotone = res.monotone && more.monotone;
      if (more.value >= run.value) run = std::move(more);
    }
    if (!have || run.value > res.value) {
      have = true;
      res.value = run.value;
      res.witness_state = run.psi;
      res.witness_observable = run.sign;
      res.converged = run.converged;
    }
  }
  res.restart_spread = res.value - worst;
  return res;
}

inline double induced_norm_value(const Superoperator& x, const InducedNormOptions& opt = {}) {
  return induced_trace_norm(x, opt).value;
}

// Norm induced by the max norm: sup ||Y(O)||_max over Hermitian O with ||O||_max <= 1.
// Starts from sign operators rather than states; extreme points of the unit ball are
// exactly the Hermitian unitaries.
inline InducedNormResult induced_max_norm(const Superoperator& y, const InducedNormOptions& opt = {}) {
  if (!check_hermiticity_preserving(y))
    throw ContractViolation("induced_max_norm: superoperator is not hermiticity-preserving");
  const Eigen::Index d = y.dim;
  const Eigen::MatrixXcd ydag = y.matrix.adjoint();
  std::vector<Operator> starts;
  for (int pattern = 0; pattern < (1 << std::min<Eigen::Index>(d, 6)); ++pattern) {
    Eigen::VectorXcd diag(d);
    for (Eigen::Index i = 0; i < d; ++i) diag(i) = (i < 6 && (pattern >> i) & 1) ? -1.0 : 1.0;
    starts.push_back(diag.asDiagonal());
  }
  int nrand = std::max<int>(opt.restarts, static_cast<int>(4 * d));
  for (int k = 0; k < nrand; ++k) {
    auto rng = detail::stream(opt.seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(k));
    Operator g(d, d);
    std::normal_distribution<double> nd;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) g(i, j) = cplx(nd(rng), nd(rng));
    starts.push_back(detail::sign_operator(herm_eig_unchecked(hermitian_part(g))));
  }
  InducedNormResult res;
  bool have = false;
  double worst = std::numeric_limits<double>::infinity();
  for (auto o : starts) {
    double prev = -1.0, best = 0.0;
    StateVector best_psi;
    Operator best_o = o;
    int it = 0;
    bool conv = false;
    for (; it < opt.max_iter; ++it) {
      HermEig eb = herm_eig_unchecked(unvec(y.matrix * vec(o), d));
      Eigen::Index top = detail::top_abs_index(eb.values);
      double f = std::abs(eb.values(top));
      if (prev >= 0.0 && f < prev - 1e-12 * std::max(1.0, prev)) res.monotone = false;
      if (f >= best || it == 0) {
        best = f;
        best_psi = eb.vectors.col(top);
        best_o = o;
      }
      if (prev >= 0.0 && f - prev <= opt.rel_tol * std::max(f, 1e-300)) {
        conv = true;
        ++it;
        break;
      }
      prev = f;
      StateVector psi = eb.vectors.col(top);
      o = detail::sign_operator(herm_eig_unchecked(unvec(ydag * detail::vec_pure(psi), d)));
    }
    res.iterations += it;
    ++res.restarts_used;
    worst = std::min(worst, best);
    if (!have || best > res.value) {
      have = true;
      res.value = best;
      res.witness_state = best_psi;
      res.witness_observable = best_o;
      res.converged = conv;
    }
  }
  res.restart_spread = res.value - worst;
  return res;
}

// Haar-sampled lower bound on the induced trace norm; an independent cross-check.
inline double induced_norm_sampling_oracle(const Superoperator& x, long n_samples, std::uint64_t seed) {
  if (!check_hermiticity_preserving(x))
    throw ContractViolation("sampling oracle: superoperator is not hermiticity-preserving");
  auto rng = detail::stream(seed, 0xabcdefULL);
  double best = 0.0;
  for (long s = 0; s < n_samples; ++s) {
    StateVector psi = detail::random_state(x.dim, rng);
    Operator m = unvec(x.matrix * detail::vec_pure(psi), x.dim);
    best = std::max(best, herm_eig_unchecked(m).values.cwiseAbs().sum());
  }
  return best;
}

enum class MeasurementKind { von_neumann, povm, correlator };

// von Neumann measurement / symmetrised correlator of a Hermitian X: exactly ||X||_max.
inline double measurement_superop_norm(MeasurementKind kind, const Operator& x) {
  if (kind == MeasurementKind::povm) throw InvalidInput("povm norm needs Kraus operators and weights");
  if (!is_hermitian(x)) throw ContractViolation("measurement observable must be Hermitian");
  return max_norm(x);
}

// POVM with Kraus operators P_n and outcome weights x_n: the bound ||sum |x_n| P_n^dag P_n||_max.
inline double measurement_superop_norm(const std::vector<Operator>& kraus, const std::vector<double>& weights) {
  if (kraus.empty() || kraus.size() != weights.size())
    throw InvalidInput("povm: need one weight per Kraus operator");
  const Eigen::Index d = kraus.front().rows();
  Operator completeness = Operator::Zero(d, d), acc = Operator::Zero(d, d);
  for (std::size_t n = 0; n < kraus.size(); ++n) {
    Operator pp = kraus[n].adjoint() * kraus[n];
    completeness += pp;
    acc += std::abs(weights[n]) * pp;
  }
  if ((completeness - Operator::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-9)
    throw InvalidInput("povm: Kraus operators are not complete");
  return max_norm(acc);
}

}  // namespace metastab
