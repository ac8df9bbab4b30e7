#pragma once

#include <vector>

#include "regimes.hpp"

namespace metastab {

namespace detail {
inline void require_hermitian_observable(const Operator& o, Eigen::Index d) {
  if (o.rows() != d || o.cols() != d) throw InvalidInput("observable dimension mismatch");
  require_finite(o, "observable");
  if (!is_hermitian(o, 1e-10)) throw ContractViolation("observable must be Hermitian");
}
}  // namespace detail

// O_t = e^{tL^dagger}(O), reusing the state-picture eigenbasis
inline Operator evolve_observable(const SpectralData& sd, const Operator& o, double t) {
  detail::require_hermitian_observable(o, sd.dim);
  if (!(t >= 0.0)) throw DomainError("evolve_observable: negative time");
  return hermitian_part(unvec(sd.basis.exp(t).adjoint() * vec(o), sd.dim));
}

inline Operator asymptotic_observable(const SpectralData& sd, const Operator& o) {
  detail::require_hermitian_observable(o, sd.dim);
  return hermitian_part(unvec(sd.basis.projector(sd.m_ss()).adjoint() * vec(o), sd.dim));
}

struct ObservableTrajectory {
  Operator initial;
  std::vector<double> times;
  std::vector<Operator> values;
  Operator asymptotic;
};

inline ObservableTrajectory observable_trajectory(const SpectralData& sd, const Operator& o,
                                                  const std::vector<double>& times) {
  ObservableTrajectory tr{o, times, {}, asymptotic_observable(sd, o)};
  for (double t : times) tr.values.push_back(evolve_observable(sd, o, t));
  return tr;
}

// sup over the window of ||O_{t''} - O_t||_max / ||O||_max
inline Supremum observable_change(const SpectralData& sd, const Operator& o, double t2, double t1,
                                  const WindowOptions& opt = {}) {
  detail::require_hermitian_observable(o, sd.dim);
  const double scale = max_norm(o);
  if (!(scale > 0.0)) throw InvalidInput("observable_change: zero observable");
  if (t1 < t2) throw DomainError("observable_change: window end before start");
  if (t1 == t2) return {0.0, t2};
  const Operator o2 = evolve_observable(sd, o, t2);
  auto f = [&](double t) { return max_norm(o2 - evolve_observable(sd, o, t)) / scale; };
  return window_supremum(f, t2, t1, opt, oscillation_rate(sd.eigenvalues(), t2));
}

// sup over the window of ||rho_{t''} - rho_t||_1 for one initial state
inline Supremum state_change(const SpectralData& sd, const Operator& rho0, double t2, double t1,
                             const WindowOptions& opt = {}) {
  if (t1 < t2) throw DomainError("state_change: window end before start");
  if (t1 == t2) return {0.0, t2};
  const Operator r2 = apply_to(evolution(sd, t2), rho0);
  auto f = [&](double t) { return trace_norm(r2 - apply_to(evolution(sd, t), rho0)); };
  return window_supremum(f, t2, t1, opt, oscillation_rate(sd.eigenvalues(), t2));
}

// sup over the window of |Tr O (rho_{t''} - rho_t)| / ||O||_max for one state and observable
inline Supremum state_observable_change(const SpectralData& sd, const Operator& rho0, const Operator& o,
                                        double t2, double t1, const WindowOptions& opt = {}) {
  detail::require_hermitian_observable(o, sd.dim);
  const double scale = max_norm(o);
  if (!(scale > 0.0)) throw InvalidInput("state_observable_change: zero observable");
  if (t1 < t2) throw DomainError("state_observable_change: window end before start");
  if (t1 == t2) return {0.0, t2};
  const Operator r2 = apply_to(evolution(sd, t2), rho0);
  auto f = [&](double t) { return std::abs((o * (r2 - apply_to(evolution(sd, t), rho0))).trace()) / scale; };
  return window_supremum(f, t2, t1, opt, oscillation_rate(sd.eigenvalues(), t2));
}

struct QuasiConservedWitness {
  Operator observable;       // O_0 = O'_{t0} - O'_ss
  Operator sign_observable;  // O', the induced-norm witness
  double norm_value = 0.0;   // ||e^{t0 L} - P_ss||
  double drift = 0.0;        // sup_{t <= t'} ||O_t - O_0||_max / ||O_0||_max
  double drift_bound = 0.0;  // 3 C / E+(C)
  double c_delta = 0.0;
  bool bound_holds = false;
};

inline QuasiConservedWitness quasi_conserved_witness(const QuantumBackend& b, double t2, double t1, double t0,
                                                     const WindowOptions& opt = {}) {
  if (!(t0 >= t2 && t0 <= 0.5 * t1 * (1.0 + 1e-12)))
    throw DomainError("quasi_conserved_witness: t0 must lie in [t'', t'/2]");
  auto v = classify_regime(b, t2, t1, opt);
  if (v.verdict != Verdict::Metastable) throw NotMetastable("quasi_conserved_witness: window is not metastable");
  const auto& sd = b.spectral();
  Superoperator x = b.evolution(t0) - b.stationary_projector();
  auto res = b.norm_detail(x);
  QuasiConservedWitness w;
  w.sign_observable = res.witness_observable;
  w.norm_value = res.value;
  w.observable = hermitian_part(apply_to(adjoint(x), res.witness_observable));
  const double scale = max_norm(w.observable);
  if (!(scale > 1e-12)) throw NotMetastable("quasi_conserved_witness: witness observable vanishes");
  auto f = [&](double t) { return max_norm(evolve_observable(sd, w.observable, t) - w.observable) / scale; };
  w.drift = window_supremum(f, 0.0, t1, opt, oscillation_rate(sd.eigenvalues(), 0.0)).value;
  w.c_delta = v.c_delta;
  w.drift_bound = 3.0 * v.c_delta / v.thresholds.plus;
  w.bound_holds = w.drift <= w.drift_bound + 1e-6;
  return w;
}

}  // namespace metastab
