#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "backend.hpp"
#include "mode_analytics.hpp"
#include "parallel.hpp"

namespace metastab {

enum class Spacing { log, linear };

struct TimeGrid {
  double t_min = 1e-3;
  double t_max = 1e3;
  int n_points = 50;
  Spacing spacing = Spacing::log;

  void validate() const {
    if (n_points < 1) throw InvalidInput("time grid needs at least one point");
    if (!(std::isfinite(t_min) && std::isfinite(t_max)) || t_min < 0.0 || t_max < t_min ||
        (n_points > 1 && t_max == t_min))
      throw InvalidInput("time grid bounds must satisfy 0 <= t_min < t_max");
    if (spacing == Spacing::log && !(t_min > 0.0)) throw InvalidInput("log grid needs t_min > 0");
  }

  std::vector<double> points() const {
    validate();
    std::vector<double> out(n_points);
    if (n_points == 1) return {t_min};
    for (int i = 0; i < n_points; ++i) {
      double u = double(i) / (n_points - 1);
      out[i] = spacing == Spacing::log ? t_min * std::pow(t_max / t_min, u) : t_min + u * (t_max - t_min);
    }
    out.front() = t_min;
    out.back() = t_max;
    return out;
  }
};

struct WindowOptions {
  int points = 33;
  double rel_tol = 1e-6;
  int max_points = 4000;
  double threshold_tol = 1e-8;  // numerical slack on threshold comparisons
  std::size_t threads = 1;
};

struct Supremum {
  double value = 0.0;
  double argmax = 0.0;
};

// Nodes on [a, b]: geometric when a > 0, linear otherwise; denser when fast modes oscillate.
inline std::vector<double> window_nodes(double a, double b, const WindowOptions& opt, double omega) {
  int n = opt.points;
  if (omega > 0.0) {
    double per = (b - a) * omega / (2.0 * std::numbers::pi);
    n = std::max<int>(n, static_cast<int>(std::ceil(8.0 * per)) + 1);
  }
  n = std::min(std::max(n, 2), opt.max_points);
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) {
    double u = double(i) / (n - 1);
    t[i] = a > 0.0 ? a * std::pow(b / a, u) : a + u * (b - a);
  }
  t.front() = a;
  t.back() = b;
  return t;
}

// sup of f over [a, b]: grid scan, then golden-section refinement around the best node
template <class F>
Supremum window_supremum(F&& f, double a, double b, const WindowOptions& opt, double omega) {
  if (b <= a) return {f(a), a};
  auto t = window_nodes(a, b, opt, omega);
  std::vector<double> v(t.size());
  parallel_for(t.size(), opt.threads, [&](std::size_t i) { v[i] = f(t[i]); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  Supremum s{v[best], t[best]};
  double lo = t[best == 0 ? 0 : best - 1], hi = t[std::min(best + 1, t.size() - 1)];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && (hi - lo) > opt.rel_tol * std::max(std::abs(hi), 1e-300); ++it) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = f(x2);
    }
  }
  if (f1 > s.value) s = {f1, x1};
  if (f2 > s.value) s = {f2, x2};
  return s;
}

template <DynamicsBackend B>
Supremum change_measure(const B& b, double t2, double t1, const WindowOptions& opt = {}) {
  if (!(t2 >= 0.0)) throw DomainError("change_measure: negative start time");
  if (t1 < t2) throw DomainError("change_measure: window end before start");
  if (t1 == t2) return {0.0, t2};
  auto e0 = b.evolution(t2);
  auto f = [&](double t) { return t == t2 ? 0.0 : b.norm(e0 - b.evolution(t)); };
  return window_supremum(f, t2, t1, opt, oscillation_rate(b.eigenvalues(), t2));
}

// sup over [t2, t1/2] of ||e^{tL} - e^{2tL}||, the doubled-time variant of the change measure
template <DynamicsBackend B>
Supremum change_measure_doubling(const B& b, double t2, double t1, const WindowOptions& opt = {}) {
  double end = std::max(t2, 0.5 * t1);
  auto f = [&](double t) { return distance(b, t, 2.0 * t); };
  return window_supremum(f, t2, end, opt, 2.0 * oscillation_rate(b.eigenvalues(), t2));
}

struct Crossing {
  bool found = false;
  double t = 0.0;
  double lo = 0.0, hi = 0.0;  // final bracket
  double residual = 0.0;      // |f(t) - target|
  int evaluations = 0;
  std::string diagnostic;
};

// First t in [t0, t_max] where f reaches target from below (upward) or from above.
// `step(t)` bounds the scan increment so oscillations cannot hide a crossing.
template <class F, class Step>
Crossing first_crossing(F&& f, double t0, double t_max, double target, bool upward, Step&& step) {
  Crossing c;
  auto reached = [&](double v) { return upward ? v >= target : v <= target; };
  double lo = t0, flo = f(t0);
  ++c.evaluations;
  if (reached(flo)) {
    c.found = true;
    c.t = c.lo = c.hi = t0;
    c.residual = std::abs(flo - target);
    return c;
  }
  double hi = lo, fhi = flo;
  for (;;) {
    if (lo >= t_max) {
      c.diagnostic = "no crossing before search limit";
      c.lo = c.hi = lo;
      return c;
    }
    hi = std::min(t_max, lo + std::max(step(lo), 1e-15 * std::max(lo, 1.0)));
    fhi = f(hi);
    ++c.evaluations;
    if (reached(fhi)) break;
    lo = hi;
    flo = fhi;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(hi, 1e-300); ++it) {
    double mid = 0.5 * (lo + hi), fm = f(mid);
    ++c.evaluations;
    if (reached(fm)) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  c.found = true;
  c.lo = lo;
  c.hi = hi;
  // report the bracket end closer to the target
  if (std::abs(flo - target) < std::abs(fhi - target)) {
    c.t = lo;
    c.residual = std::abs(flo - target);
  } else {
    c.t = hi;
    c.residual = std::abs(fhi - target);
  }
  return c;
}

struct TimescaleReport {
  std::optional<double> tau_0, tau_ss;
  std::optional<double> tau_dprime, tau_prime;
  Crossing tau_0_crossing, tau_ss_crossing;
  double generator_norm = 0.0;  // times in units of 1/||L|| are t * generator_norm
};

template <DynamicsBackend B>
TimescaleReport timescales(const B& b) {
  const double ln = b.generator_norm();
  if (!(ln > 0.0)) throw TrivialDynamics();
  const auto& ev = b.eigenvalues();
  TimescaleReport r;
  r.generator_norm = ln;
  const double rate_max = -ev.back().real();
  const double t_lo = std::log(2.0 - 1.0 / std::numbers::e) / ln * (1.0 - 1e-6);
  const double t_top = rate_max > 0.0 ? 1.0 / rate_max : 1e6 / ln;
  auto d_i = [&](double t) { return distance_to_identity(b, t); };
  auto step0 = [&](double t) {
    double w = oscillation_rate(ev, t);
    double h = std::max(t_top - t_lo, t_top * 1e-3) / 64.0;
    return w > 0.0 ? std::min(h, 0.1 / w) : h;
  };
  // nothing crosses before t_lo (exponential bound); fall back to 0 if the
  // optimizer's ||L|| underestimate puts t_lo past the crossing
  double start = d_i(t_lo) < 1.0 - 1.0 / std::numbers::e ? t_lo : 0.0;
  r.tau_0_crossing = first_crossing(d_i, start, 64.0 * t_top, 1.0 - 1.0 / std::numbers::e, true, step0);
  if (r.tau_0_crossing.found)
    r.tau_0 = r.tau_0_crossing.t;
  else
    r.tau_0_crossing.diagnostic = "distance to identity never reaches 1 - 1/e";

  auto d_ss = [&](double t) { return distance_to_stationary(b, t); };
  const std::size_t mss = b.stationary_count();
  if (mss >= ev.size()) {
    r.tau_ss_crossing.diagnostic = "every mode is stationary";
    return r;
  }
  double slowest = -ev[mss].real();
  double s_lo = (1.0 / slowest) * (1.0 - 1e-6);
  double s0 = d_ss(s_lo) > 1.0 / std::numbers::e ? s_lo : 0.0;
  double s_hi = std::max(s_lo, 1e-12);
  while (d_ss(s_hi) > 1.0 / std::numbers::e && s_hi < 1e12 * s_lo) s_hi *= 2.0;
  auto step_ss = [&](double t) { return std::max(s_hi - s0, 1e-300) / 16.0 + 0.0 * t; };
  r.tau_ss_crossing = first_crossing(d_ss, s0, s_hi, 1.0 / std::numbers::e, false, step_ss);
  if (r.tau_ss_crossing.found) r.tau_ss = r.tau_ss_crossing.t;
  return r;
}

enum class Verdict { Initial, Final, Metastable, Indeterminate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Initial: return "Initial";
    case Verdict::Final: return "Final";
    case Verdict::Metastable: return "Metastable";
    default: return "Indeterminate";
  }
}

struct RegimeVerdict {
  double t_start = 0.0, t_end = 0.0;
  double c_delta = 0.0;
  double c_delta_argmax = 0.0;
  double c_delta_doubling = 0.0;  // sup ||e^{tL} - e^{2tL}|| over [t_start, t_end/2]
  double d_initial_at_start = 0.0;
  double d_stationary_at_start = 0.0;
  double d_stationary_at_end = 0.0;
  Thresholds thresholds{0.5, 0.5};
  Thresholds thresholds_doubling{0.5, 0.5};
  Verdict verdict = Verdict::Indeterminate;
  std::vector<std::string> validity_flags;
};

template <DynamicsBackend B>
RegimeVerdict classify_regime(const B& b, double t2, double t1, const WindowOptions& opt = {}) {
  if (!(t2 > 0.0) || !(t1 >= 2.0 * t2 * (1.0 - 1e-12)))
    throw DomainError("classify_regime: window must satisfy t' >= 2 t'' > 0");
  RegimeVerdict v;
  v.t_start = t2;
  v.t_end = t1;
  auto cm = change_measure(b, t2, t1, opt);
  v.c_delta = cm.value;
  v.c_delta_argmax = cm.argmax;
  v.c_delta_doubling = change_measure_doubling(b, t2, t1, opt).value;
  v.d_initial_at_start = distance_to_identity(b, t2);
  v.d_stationary_at_start = distance_to_stationary(b, t2);
  v.d_stationary_at_end = distance_to_stationary(b, t1);
  const double c = v.c_delta, tol = opt.threshold_tol;
  v.thresholds = e_pm(std::min(c, 0.25));
  v.thresholds_doubling = e_pm(std::min(v.c_delta_doubling, 0.25));
  if (c >= cutoff::quarter - cutoff::guard) {
    v.validity_flags.push_back("c_delta >= 1/4: no dichotomy");
    return v;
  }
  const auto [em, ep] = v.thresholds;
  if (v.d_initial_at_start < 0.5) {
    if (v.d_initial_at_start <= em + tol) {
      v.verdict = Verdict::Initial;
      v.validity_flags.push_back("cutoff 1/4: d_I <= E- on [t'', t'/2]");
      if (c < cutoff::metastable - cutoff::guard)
        v.validity_flags.push_back("cutoff (sqrt2-1)/2: d_I <= E- + C on (t'/2, t']");
      else
        v.validity_flags.push_back("c_delta >= (sqrt2-1)/2: second half unresolved");
    } else {
      v.validity_flags.push_back("d_I(t'') inside the forbidden band (E-, E+)");
    }
    return v;
  }
  if (v.d_stationary_at_start < 0.5) {
    if (v.d_stationary_at_start <= em + tol) {
      v.verdict = Verdict::Final;
      v.validity_flags.push_back("cutoff 1/4: d_ss <= E- for t >= t''");
      if (c >= cutoff::final_regime - cutoff::guard)
        v.validity_flags.push_back("c_delta >= sqrt5-2: final branch not separated from E+ - C");
    } else {
      v.validity_flags.push_back("d_ss(t'') inside the forbidden band (E-, E+)");
    }
    return v;
  }
  if (v.d_initial_at_start >= ep - tol && v.d_stationary_at_end >= ep - c - tol) {
    if (c < cutoff::metastable - cutoff::guard) {
      v.verdict = Verdict::Metastable;
      v.validity_flags.push_back("cutoff (sqrt2-1)/2: d_I, d_ss >= E+ on [t'', t'/2] and >= E+ - C after");
    } else {
      v.validity_flags.push_back("c_delta >= (sqrt2-1)/2: upper branches not separated");
    }
  } else {
    v.validity_flags.push_back("upper-branch distances below E+ thresholds");
  }
  return v;
}

template <DynamicsBackend B>
std::vector<RegimeVerdict> classify_windows(const B& b, const std::vector<double>& starts, double ratio,
                                            const WindowOptions& opt = {}) {
  std::vector<RegimeVerdict> out(starts.size());
  WindowOptions inner = opt;
  inner.threads = 1;
  parallel_for(starts.size(), opt.threads,
               [&](std::size_t i) { out[i] = classify_regime(b, starts[i], ratio * starts[i], inner); });
  return out;
}

template <DynamicsBackend B>
std::vector<RegimeVerdict> scan_metastable(const B& b, double c_delta_max, double ratio, const TimeGrid& grid,
                                           const WindowOptions& opt = {}) {
  if (!(ratio >= 2.0)) throw DomainError("scan_metastable: ratio must be >= 2");
  if (!(b.generator_norm() > 0.0)) throw TrivialDynamics();
  auto starts = grid.points();
  if (!starts.empty() && starts.front() <= 0.0) throw InvalidInput("scan grid must be positive");
  auto all = classify_windows(b, starts, ratio, opt);
  auto good = [&](const RegimeVerdict& v) { return v.verdict == Verdict::Metastable && v.c_delta <= c_delta_max; };
  std::vector<RegimeVerdict> out;
  for (std::size_t i = 0; i < all.size();) {
    if (!good(all[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < all.size() && good(all[j + 1])) ++j;
    if (j > i) {
      auto merged = classify_regime(b, all[i].t_start, all[j].t_end, opt);
      if (good(merged)) {
        out.push_back(merged);
        i = j + 1;
        continue;
      }
    }
    for (std::size_t k = i; k <= j; ++k) out.push_back(all[k]);
    i = j + 1;
  }
  return out;
}

struct RelaxationTimes {
  std::optional<double> tau_dprime, tau_prime;
  Crossing dprime_crossing, prime_crossing;
  double ratio_lower_bound = 0.0;  // floor((1 - 1/e - E-)/C) + 1
  bool ratio_bound_holds = true;
};

template <DynamicsBackend B>
RelaxationTimes relaxation_times(const B& b, double t2, double t1, double c) {
  if (!(c >= 0.0 && c <= cutoff::relaxation)) throw DomainError("relaxation_times: c_delta above (1-1/e)/e");
  if (!(t2 > 0.0 && t1 > t2)) throw DomainError("relaxation_times: invalid window");
  const auto& ev = b.eigenvalues();
  const double em = e_pm(c).minus;
  const double inv_e = 1.0 / std::numbers::e;
  auto e2 = b.evolution(t2);
  auto f = [&](double t) { return t == t2 ? 0.0 : b.norm(b.evolution(t) - e2); };
  RelaxationTimes r;
  auto step_in = [&](double t) {
    double w = oscillation_rate(ev, t);
    double h = t2 / 128.0;
    return w > 0.0 ? std::min(h, 0.1 / w) : h;
  };
  r.dprime_crossing = first_crossing(f, 0.0, t2, inv_e - em, false, step_in);
  if (r.dprime_crossing.found) r.tau_dprime = r.dprime_crossing.t;
  const double len = t1 - t2;
  auto step_out = [&](double t) {
    double w = oscillation_rate(ev, t2);
    double h = std::max(0.05 * (t - t2), len / 32.0);
    return w > 0.0 ? std::min(h, 0.1 / w) : h;
  };
  r.prime_crossing = first_crossing(f, t2, t2 + 1e6 * len, 1.0 - inv_e - em, true, step_out);
  if (r.prime_crossing.found) r.tau_prime = r.prime_crossing.t;
  if (c > 0.0) {
    r.ratio_lower_bound = std::floor((1.0 - inv_e - em) / c) + 1.0;
    if (r.tau_prime) r.ratio_bound_holds = *r.tau_prime / t2 >= r.ratio_lower_bound - 1e-8;
  }
  return r;
}

struct Distinguishability {
  double min_error;
  double fidelity_low;
  double fidelity_high;
};

inline Distinguishability distinguishability_bounds(double c) {
  if (!(c >= 0.0 && c <= 2.0)) throw DomainError("distinguishability_bounds: c outside [0, 2]");
  return {0.5 - c / 4.0, 1.0 - c / 2.0, 1.0 - (c / 2.0) * (c / 2.0)};
}

}  // namespace metastab
