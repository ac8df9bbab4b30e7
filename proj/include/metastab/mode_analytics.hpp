#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>

#include "errors.hpp"

namespace metastab {

// Threshold constants on the change measure. Each gates one family of claims.
namespace cutoff {
inline constexpr double quarter = 0.25;                            // dichotomy exists
inline const double metastable = (std::numbers::sqrt2 - 1.0) / 2;  // E+ - C > E- + C
inline const double final_regime = std::sqrt(5.0) - 2.0;           // E+ - C > E-
inline const double relaxation = (1.0 - 1.0 / std::numbers::e) / std::numbers::e;
inline const double e2_domain = (3.0 * std::log(1.5) - 1.0) / 2.0;  // about 0.1082
inline constexpr double p_norm = 0.0997;
inline constexpr double p_linear = 0.0837;
inline constexpr double p_lower_branch = 0.130;
inline constexpr double ip_lower_branch = 0.129;
inline constexpr double guard = 1e-4;
}  // namespace cutoff

struct Thresholds {
  double minus;
  double plus;
};

inline Thresholds e_pm(double c) {
  if (!(c >= 0.0 && c <= 0.25)) throw DomainError("e_pm: c outside [0, 1/4]");
  double s = std::sqrt(1.0 - 4.0 * c);
  double plus = 0.5 * (1.0 + s);
  // c / plus avoids cancellation in (1 - s) / 2 for small c
  double minus = plus > 0.0 ? c / plus : 0.5;
  return {minus, plus};
}

enum class InverseKind { E1, E2 };

namespace detail {
template <class F>
double bisect_increasing(F f, double lo, double hi, double target, double tol = 1e-12) {
  for (int i = 0; i < 200 && hi - lo > tol; ++i) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}
}  // namespace detail

inline double inverse_bound_domain(InverseKind k) {
  return k == InverseKind::E1 ? 2.0 * std::log(2.0) - 1.0 : cutoff::e2_domain;
}

inline double inverse_bound(InverseKind k, double c) {
  const double top = inverse_bound_domain(k);
  if (!(c >= 0.0 && c <= top * (1.0 + 1e-14))) throw DomainError("inverse_bound: argument outside domain");
  if (c == 0.0) return 0.0;
  // the defining functions are flat at the domain end; bisection cannot resolve x there
  if (c >= top * (1.0 - 1e-14)) return k == InverseKind::E1 ? std::log(2.0) : std::log(1.5);
  if (k == InverseKind::E1) {
    auto f = [](double x) { return 2.0 * x - std::expm1(x); };
    return detail::bisect_increasing(f, 0.0, std::log(2.0), c);
  }
  auto g = [](double x) { return 1.5 * x - std::expm1(x); };
  return detail::bisect_increasing(g, 0.0, std::log(1.5), c);
}

struct ModeRegimes {
  std::complex<double> lambda;
  double c = 0.0;
  double t_initial = 0.0;
  double t_final = 0.0;
  std::optional<double> imag_bound;
};

inline ModeRegimes mode_regimes(std::complex<double> lambda, double c) {
  if (!(lambda.real() < 0.0)) throw DomainError("mode_regimes: not a decaying mode");
  if (!(c > 0.0 && c < 1.0)) throw DomainError("mode_regimes: accuracy outside (0, 1)");
  ModeRegimes r{lambda, c};
  const double rate = -lambda.real(), w = std::abs(lambda.imag());
  r.t_final = -std::log(c) / rate;
  if (w == 0.0) {
    r.t_initial = -std::log1p(-c) / rate;
    return r;
  }
  auto f = [&](double t) { return std::abs(std::exp(t * lambda) - 1.0); };
  const double step = std::min(0.01 / std::abs(lambda), 0.1 / w);
  double lo = 0.0, hi = step;
  // |e^{t lambda} - 1| tends to 1 > c, so a crossing exists when c < 1
  while (f(hi) < c) {
    lo = hi;
    hi += step;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (f(mid) < c ? lo : hi) = mid;
  }
  r.t_initial = 0.5 * (lo + hi);
  if (c <= 0.5) r.imag_bound = std::asin(c / (1.0 - c)) / w;
  return r;
}

}  // namespace metastab
