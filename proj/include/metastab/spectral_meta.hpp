#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "regimes.hpp"

namespace metastab {

// margin_k = ||e^{t1 L} - e^{t2 L}|| - |e^{t1 lambda_k} - e^{t2 lambda_k}|
template <DynamicsBackend B>
std::vector<double> spectrum_change_bound_check(const B& b, double t1, double t2) {
  if (!(t1 >= 0.0 && t2 >= 0.0)) throw DomainError("spectrum_change_bound_check: negative time");
  double d = distance(b, t1, t2);
  std::vector<double> out;
  for (const auto& l : b.eigenvalues()) out.push_back(d - std::abs(std::exp(t1 * l) - std::exp(t2 * l)));
  return out;
}

struct SeparationReport {
  std::size_t m = 0;
  std::vector<int> branch;  // +1 initial (slow), -1 final (fast), per sorted eigenvalue
  Thresholds thresholds{0.5, 0.5};
  std::optional<double> ratio_real;  // lambda_m^R / lambda_{m+1}^R
  std::optional<double> ratio_imag;  // max_{k<=m} |lambda_k^I| / (-lambda_{m+1}^R)
  double imag_bound = 0.0;           // arcsin(C/E+) / (t' - t'')
  double slack_initial = std::numeric_limits<double>::infinity();
  double slack_final = std::numeric_limits<double>::infinity();
  double slack_imag = std::numeric_limits<double>::infinity();
};

inline SeparationReport detect_separation(const std::vector<cplx>& ev, std::size_t m_ss, double t2, double t1,
                                          double c, double tol = 1e-8) {
  if (!(c >= 0.0 && c < 0.25)) throw DomainError("detect_separation: c_delta must be below 1/4");
  if (!(t2 > 0.0 && t1 >= 2.0 * t2 * (1.0 - 1e-12))) throw DomainError("detect_separation: need t' >= 2 t'' > 0");
  SeparationReport r;
  r.thresholds = e_pm(c);
  const auto [em, ep] = r.thresholds;
  bool in_final = false;
  for (std::size_t k = 0; k < ev.size(); ++k) {
    double re = ev[k].real();
    bool slow = std::exp(t1 * re) >= ep * ep - tol;
    bool fast = std::exp(t2 * re) <= em + tol;
    if (slow && !in_final) {
      r.branch.push_back(+1);
      ++r.m;
    } else if (fast) {
      r.branch.push_back(-1);
      in_final = true;
    } else {
      throw SeparationInconsistency(k + 1);
    }
  }
  if (r.m < m_ss || !respects_pairs(ev, r.m)) throw InvalidCut("detect_separation: cut is not admissible");
  const double ln_ep2 = -std::log(ep * ep), ln_em = em > 0.0 ? -std::log(em) : std::numeric_limits<double>::infinity();
  r.imag_bound = std::asin(std::min(1.0, c / ep)) / (t1 - t2);
  double wmax = 0.0;
  for (std::size_t k = 0; k < ev.size(); ++k) {
    double rate = -ev[k].real();
    if (k < r.m) {
      r.slack_initial = std::min(r.slack_initial, ln_ep2 - t1 * rate);
      r.slack_imag = std::min(r.slack_imag, std::asin(std::min(1.0, c / ep)) - (t1 - t2) * std::abs(ev[k].imag()));
      wmax = std::max(wmax, std::abs(ev[k].imag()));
    } else {
      r.slack_final = std::min(r.slack_final, t2 * rate - ln_em);
    }
  }
  if (r.m < ev.size() && r.m >= 1) {
    r.ratio_real = ev[r.m - 1].real() / ev[r.m].real();
    r.ratio_imag = wmax / (-ev[r.m].real());
  }
  return r;
}

// Cut with the largest relative gap in decay rates; used when no metastable window
// fixes m. Falls back to m_ss when every cut would split a conjugate pair.
inline std::size_t widest_gap_cut(const std::vector<cplx>& ev, std::size_t m_ss) {
  std::size_t best = m_ss;
  double best_ratio = 0.0;
  for (std::size_t m = m_ss + 1; m < ev.size(); ++m) {
    if (!respects_pairs(ev, m)) continue;
    double ratio = ev[m].real() / std::min(ev[m - 1].real(), -1e-300);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = m;
    }
  }
  return best;
}

struct ConditionCheck {
  double lhs = 0.0, rhs = 0.0;
  bool holds = false;
  bool applicable = false;
};

struct ProjectionNode {
  double t;
  double c_p;          // ||e^{tL} - P||
  double slow_drift;   // ||P(e^{tL} - I)||
  double fast_residual;  // ||(I - P) e^{tL}||
};

struct SlackRow {
  std::string id;
  double t;  // NaN when not tied to a time
  double lhs, rhs;
  double slack() const { return rhs - lhs; }
};

struct SpectralProjectionReport {
  std::size_t m = 0;
  double t_start = 0.0, t_end = 0.0;
  double c_delta = 0.0;       // on the reported window
  double t_end_ext = 0.0;     // window end used for the t' >= 4t'' claims
  double c_delta_ext = 0.0;   // measured on the extended window
  double c_p = 0.0;
  double p_norm = 0.0;
  double ip_norm = 0.0;  // ||I - P||
  double pl_norm = 0.0;  // ||P L||
  double slow_drift = 0.0;
  double fast_residual = 0.0;
  ConditionCheck meta_cond3, meta_cond4;
  std::vector<ProjectionNode> nodes;
  std::vector<SlackRow> slacks;        // claims that always hold
  std::vector<SlackRow> conditional;   // claims gated by cutoffs and the two conditions
  std::vector<std::string> notes;
};

template <DynamicsBackend B>
SpectralProjectionReport spectral_projection_report(const B& b, std::size_t m, double t2, double t1,
                                                    const WindowOptions& opt = {}) {
  if (!(t2 > 0.0 && t1 > t2)) throw DomainError("spectral_projection_report: invalid window");
  const auto& ev = b.eigenvalues();
  const auto p = b.slow_projector(m);  // throws InvalidCut
  const auto id = b.identity();
  const typename B::matrix_type ip = id - p;
  SpectralProjectionReport r;
  r.m = m;
  r.t_start = t2;
  r.t_end = t1;
  auto cm = change_measure(b, t2, t1, opt);
  r.c_delta = cm.value;
  r.t_end_ext = std::max(t1, 4.0 * t2);
  r.c_delta_ext = r.t_end_ext > t1 ? change_measure(b, t2, r.t_end_ext, opt).value : r.c_delta;

  WindowOptions nopt = opt;
  nopt.points = std::max(9, opt.points / 2);
  auto ts = window_nodes(t2, t1, nopt, oscillation_rate(ev, t2));
  if (cm.argmax > t2 && cm.argmax < t1) {
    ts.push_back(cm.argmax);
    std::sort(ts.begin(), ts.end());
  }
  r.nodes.resize(ts.size());
  parallel_for(ts.size(), opt.threads, [&](std::size_t i) {
    auto e = b.evolution(ts[i]);
    r.nodes[i] = {ts[i], b.norm(e - p), b.norm(p * (e - id)), b.norm(ip * e)};
  });
  for (const auto& n : r.nodes) {
    r.c_p = std::max(r.c_p, n.c_p);
    r.slow_drift = std::max(r.slow_drift, n.slow_drift);
    r.fast_residual = std::max(r.fast_residual, n.fast_residual);
  }
  r.p_norm = b.norm(p);
  r.ip_norm = b.norm(ip);
  r.pl_norm = b.norm(p * b.generator());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double c = r.c_delta, cp = r.c_p;
  const std::size_t n_all = ev.size(), mss = b.stationary_count();

  auto& s = r.slacks;
  s.push_back({"C_P3", nan, c, 2.0 * cp});
  for (const auto& n : r.nodes) {
    s.push_back({"C_P_P", n.t, n.slow_drift, (1.0 + cp) * cp});
    s.push_back({"C_P_IP", n.t, n.fast_residual, (2.0 + cp) * cp});
    s.push_back({"C_P_triangle", n.t, n.c_p, n.slow_drift + n.fast_residual});
  }
  if (m < n_all) {
    for (const auto& n : r.nodes) s.push_back({"dist_0_P", n.t, 1.0 - cp, distance_to_identity(b, n.t)});
    if (cp > 0.0) s.push_back({"spectral_P_fast", nan, -std::log(cp), t2 * -ev[m].real()});
  }
  if (m > mss) {
    for (const auto& n : r.nodes) s.push_back({"dist_ss_P", n.t, 1.0 - cp, distance_to_stationary(b, n.t)});
  }
  if (m >= 1 && cp < 1.0) s.push_back({"spectral_P_slow", nan, t1 * -ev[m - 1].real(), -std::log1p(-cp)});

  // Conditions gating the lower-branch claims, on a window with t' >= 4t''.
  const double ce = r.c_delta_ext, te = r.t_end_ext;
  if (2.0 * ce <= 0.25) {
    r.meta_cond3.applicable = true;
    r.meta_cond3.lhs = b.norm(p * (b.evolution(2.0 * t2) - id));
    r.meta_cond3.rhs = e_pm(2.0 * ce).plus;
    r.meta_cond3.holds = r.meta_cond3.lhs <= r.meta_cond3.rhs;
  }
  if (ce <= 0.25) {
    r.meta_cond4.applicable = true;
    r.meta_cond4.lhs = b.norm(ip * b.evolution(t2));
    r.meta_cond4.rhs = e_pm(ce).plus;
    r.meta_cond4.holds = r.meta_cond4.lhs <= r.meta_cond4.rhs;
  }
  auto v = classify_regime(b, t2, t1, opt);
  if (v.verdict == Verdict::Metastable && m == n_all)
    r.notes.push_back("contradiction: m = n gives P = I, so C_P = sup d_I >= E+ on a metastable window");
  if (v.verdict == Verdict::Metastable && m == mss)
    r.notes.push_back("contradiction: m = m_ss gives P = P_ss, so C_P >= d_ss >= E+ - C on a metastable window");
  const bool gated = v.verdict == Verdict::Metastable && r.meta_cond3.holds && r.meta_cond4.holds;
  if (!gated) {
    r.notes.push_back("lower-branch projection bounds not applicable: window not metastable or conditions fail");
    return r;
  }
  auto& g = r.conditional;
  const double pn = r.p_norm, ipn = r.ip_norm;
  const double sq = std::sqrt(e_pm(ce).plus);
  if (ce <= cutoff::ip_lower_branch && ce * sq <= 0.25)
    g.push_back({"IP1", 2.0 * t2, b.norm(ip * b.evolution(2.0 * t2)), e_pm(ce * sq).minus});
  if (ce <= cutoff::p_lower_branch && ce * (1.0 + sq) <= 0.25)
    g.push_back({"P1", 2.0 * t2, r.meta_cond3.lhs, e_pm(ce * (1.0 + sq)).minus});
  if (ce <= cutoff::p_norm) {
    g.push_back({"Pnorm2", nan, pn, 1.0 + e_pm(ce).minus + e_pm(2.0 * ce).minus});
    if (pn * ce <= 0.25)
      for (const auto& n : r.nodes) {
        double rhs = e_pm(pn * ce).minus + (n.t > 0.5 * te ? pn * ce : 0.0);
        g.push_back({"P_better", n.t, n.slow_drift, rhs});
      }
    if (ipn * ce <= 0.25)
      for (const auto& n : r.nodes) g.push_back({"IP_better", n.t, n.fast_residual, e_pm(ipn * ce).minus});
    if (pn * ce <= 0.25 && ipn * ce <= 0.25)
      g.push_back({"C_P_better", nan, cp, e_pm(pn * ce).minus + e_pm(ipn * ce).minus + ce});
  }
  if (ce <= cutoff::p_linear && pn * ce <= cutoff::e2_domain)
    g.push_back({"P_lin3", nan, (t1 - t2) * r.pl_norm, inverse_bound(InverseKind::E2, pn * ce)});
  return r;
}

struct BoundRow {
  std::string id;
  double t;
  double lhs, rhs, slack;
  bool pass;
};

struct BoundBatteryReport {
  std::vector<BoundRow> rows;
  double tol = 1e-8;
  bool pass = true;
  std::vector<std::string> notes;

  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += !r.pass;
    return n;
  }
};

struct Window {
  double t_start, t_end;
};

struct BatteryOptions {
  TimeGrid grid{1e-2, 1e2, 16, Spacing::log};
  std::vector<Window> windows;  // empty: one window (tau_0, 4 tau_0)
  double tol = 1e-8;
  WindowOptions window{};
  std::size_t threads = 1;
  std::uint64_t seed = 0;
};

template <DynamicsBackend B>
BoundBatteryReport bound_battery(const B& b, const BatteryOptions& opt = {}) {
  BoundBatteryReport rep;
  rep.tol = opt.tol;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto add = [&](std::string id, double t, double lhs, double rhs) {
    double slack = rhs - lhs;
    bool ok = std::isfinite(slack) ? slack >= -opt.tol : (lhs == -std::numeric_limits<double>::infinity() || rhs == std::numeric_limits<double>::infinity());
    rep.rows.push_back({std::move(id), t, lhs, rhs, slack, ok});
  };
  const auto& ev = b.eigenvalues();
  const std::size_t n_all = ev.size(), mss = b.stationary_count();
  const double ln = b.generator_norm();
  if (!(ln > 0.0)) throw TrivialDynamics();
  WindowOptions wopt = opt.window;
  wopt.threads = opt.threads;

  // grid quantities, one independent norm per task
  const auto ts = opt.grid.points();
  const std::size_t nt = ts.size();
  enum { DI1, DI2, DI3, DI4, DS1, DS2, DS3, D2, NF };
  std::vector<double> val(nt * NF);
  parallel_for(nt * NF, opt.threads, [&](std::size_t k) {
    double t = ts[k / NF];
    switch (k % NF) {
      case DI1: val[k] = distance_to_identity(b, t); break;
      case DI2: val[k] = distance_to_identity(b, 2 * t); break;
      case DI3: val[k] = distance_to_identity(b, 3 * t); break;
      case DI4: val[k] = distance_to_identity(b, 4 * t); break;
      case DS1: val[k] = distance_to_stationary(b, t); break;
      case DS2: val[k] = distance_to_stationary(b, 2 * t); break;
      case DS3: val[k] = distance_to_stationary(b, 3 * t); break;
      default: val[k] = distance(b, t, 2 * t); break;
    }
  });
  auto at = [&](std::size_t i, int f) { return val[i * NF + f]; };
  for (std::size_t i = 0; i < nt; ++i) {
    const double t = ts[i], di = at(i, DI1), ds = at(i, DS1), d2 = at(i, D2);
    add("change2_all", t, di * (1 - di), d2);
    add("change2_ss", t, ds * (1 - ds), d2);
    add("0_lin_n2", t, at(i, DI2), 2 * di);
    add("0_lin_n3", t, at(i, DI3), 3 * di);
    add("0_lin_n4", t, at(i, DI4), 4 * di);
    add("0_exp", t, di, std::expm1(t * ln));
    add("0_exp2", t, 2 * t * ln - std::expm1(t * ln), di);
    add("ss_exp_n2", t, at(i, DS2), ds * ds);
    add("ss_exp_n3", t, at(i, DS3), ds * ds * ds);
    add("all_lin", t, (2 - di) * t * ln - std::expm1(t * ln), d2);
    add("meta_Delta3", t, d2, 2.0);
    double s0 = 0, sss = 0, s2 = 0;
    for (std::size_t k = 0; k < n_all; ++k) {
      cplx e = std::exp(t * ev[k]);
      s0 = std::max(s0, std::abs(e - 1.0));
      s2 = std::max(s2, std::abs(e - std::exp(2 * t * ev[k])));
      if (k >= mss) sss = std::max(sss, std::abs(e));
    }
    add("change_spectral_0", t, s0, di);
    add("change_spectral_pair", t, s2, d2);
    if (mss < n_all) add("change_spectral_ss", t, sss, ds);
  }
  const double ipss = b.norm(b.identity() - b.stationary_projector());
  if (mss < n_all) {
    add("IPss_lower", nan, 1.0, ipss);
    add("IPss_upper", nan, ipss, 2.0);
  }
  add("generator_rate", nan, -ev.back().real(), ln);

  auto ts_rep = timescales(b);
  if (ts_rep.tau_0) add("spectral_tau_0", nan, *ts_rep.tau_0 * -ev.back().real(), 1.0);
  if (ts_rep.tau_ss && mss < n_all) add("spectral_tau_ss", nan, 1.0, *ts_rep.tau_ss * -ev[mss].real());

  std::vector<Window> windows = opt.windows;
  if (windows.empty()) {
    double ta = ts_rep.tau_0 ? *ts_rep.tau_0 : 1.0 / ln;
    windows.push_back({ta, 4 * ta});
  }

  for (const auto& w : windows) {
    const double t2 = w.t_start, t1 = w.t_end, len = t1 - t2;
    if (!(t2 > 0.0 && t1 >= 2.0 * t2)) {
      rep.notes.push_back("skipped window violating t' >= 2t''");
      continue;
    }
    const double c = change_measure(b, t2, t1, wopt).value;
    const auto e2 = b.evolution(t2);
    auto f = [&](double t) { return b.norm(b.evolution(t) - e2); };

    // relaxation toward and drift away from the window start, sampled at fractions of t''
    std::vector<double> ss;
    for (double u : {0.1, 0.25, 0.5, 0.75, 1.0}) ss.push_back(u * t2);
    for (double u : {1.5, 2.0, 3.0}) ss.push_back(u * t2);
    std::vector<double> fs(ss.size()), f2(ss.size()), f3(ss.size());
    parallel_for(ss.size() * 3, opt.threads, [&](std::size_t k) {
      std::size_t i = k / 3;
      double s = ss[i];
      if (k % 3 == 0) fs[i] = f(s);
      if (k % 3 == 1) f2[i] = f(2 * s);
      if (k % 3 == 2) f3[i] = f(3 * s);
    });
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const double s = ss[i], x = fs[i];
      add("'_lin_n2", s, f2[i] + c, 2 * (x + c));
      add("'_lin_n3", s, f3[i] + c, 3 * (x + c));
      if (x < 1.0 && s <= len) add("''_exp_n2", s, f2[i], x * x + 2 * c / (1 - x));
      if (x < 1.0 && 2 * s <= len) add("''_exp_n3", s, f3[i], x * x * x + 2 * c / (1 - x));
    }
    add("change_all_window", nan, distance_to_identity(b, len) * (1 - distance_to_identity(b, t2)), c);

    // two-point correlator chains
    const auto o1 = b.correlator(opt.seed + 1), o2 = b.correlator(opt.seed + 2);
    for (int n1 = 1; n1 <= 2; ++n1)
      for (int n2 = 1; n2 <= 2; ++n2) {
        auto lhs = b.norm(o2 * e2 * o1 * e2 - o2 * b.evolution(t2 + n2 * len) * o1 * b.evolution(t2 + n1 * len));
        add("meta_corr_" + std::to_string(n1) + std::to_string(n2), t2, lhs, (n1 + n2) * c);
      }

    if (c <= cutoff::relaxation) {
      auto rt = relaxation_times(b, t2, t1, c);
      if (rt.tau_prime) add("tau'2", t2, rt.ratio_lower_bound, *rt.tau_prime / t2);
    }

    // slow-mode projection
    std::size_t m = widest_gap_cut(ev, mss);
    if (c < 0.25) {
      try {
        m = detect_separation(ev, mss, t2, t1, c).m;
      } catch (const SeparationInconsistency& e) {
        add("separation_consistency", t2, 1.0, 0.0);
        rep.notes.push_back(e.what());
      }
    }
    auto pr = spectral_projection_report(b, m, t2, t1, wopt);
    for (const auto& s : pr.slacks) add(s.id, s.t, s.lhs, s.rhs);
    for (const auto& s : pr.conditional) add(s.id, s.t, s.lhs, s.rhs);
    const auto p = b.slow_projector(m);
    const typename B::matrix_type ip = b.identity() - p;
    const typename B::matrix_type pl = p * b.generator();
    const double pln = b.norm(pl);
    std::vector<double> pd(nt), q1(nt), q2(nt);
    parallel_for(nt * 3, opt.threads, [&](std::size_t k) {
      double t = ts[k / 3];
      if (k % 3 == 0) pd[k / 3] = b.norm(p * (b.evolution(t) - b.identity()));
      if (k % 3 == 1) q1[k / 3] = b.norm(ip * b.evolution(t));
      if (k % 3 == 2) q2[k / 3] = b.norm(ip * b.evolution(2 * t));
    });
    for (std::size_t i = 0; i < nt; ++i) {
      const double t = ts[i];
      add("0_exp_P", t, pd[i], std::expm1(t * pln));
      add("0_exp2_P", t, 2 * t * pln - std::expm1(t * pln), pd[i]);
      add("ss_exp_P", t, q2[i], q1[i] * q1[i]);
    }
  }
  for (const auto& r : rep.rows) rep.pass = rep.pass && r.pass;
  return rep;
}

}  // namespace metastab
