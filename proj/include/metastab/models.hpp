#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include "classical.hpp"
#include "induced_norm.hpp"

namespace metastab {

// H = -omega S_z, jumps sqrt(gamma) S_z and sqrt(kappa/2)(S_x +- S_y)
inline QuantumModel spin_half_dephasing(double gamma, double kappa, double omega) {
  if (!(gamma >= 0.0 && kappa >= 0.0)) throw InvalidInput("spin_half: rates must be nonnegative");
  if (gamma == 0.0 && kappa == 0.0) throw InvalidInput("spin_half: gamma and kappa cannot both vanish");
  if (!std::isfinite(omega)) throw InvalidInput("spin_half: omega must be finite");
  QuantumModel m{-omega * spin_z(), {}};
  m.jumps.push_back(std::sqrt(gamma) * spin_z());
  m.jumps.push_back(std::sqrt(kappa / 2) * (spin_x() + spin_y()));
  m.jumps.push_back(std::sqrt(kappa / 2) * (spin_x() - spin_y()));
  return m;
}

// single decay channel sqrt(a)|0><1| on a qubit
inline QuantumModel qubit_decay(double a) {
  if (!(a > 0.0)) throw InvalidInput("qubit_decay: rate must be positive");
  Operator lower = Operator::Zero(2, 2);
  lower(0, 1) = std::sqrt(a);
  return {Operator::Zero(2, 2), {lower}};
}

inline QuantumModel random_lindbladian(Eigen::Index d, int n_jumps, std::uint64_t seed) {
  if (d < 2) throw InvalidInput("random_lindbladian: D must be >= 2");
  if (n_jumps < 1) throw InvalidInput("random_lindbladian: need at least one jump");
  auto rng = detail::stream(seed, 0x6d6f64656cULL);
  std::normal_distribution<double> g;
  auto gauss = [&] {
    Operator a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(g(rng), g(rng));
    return a;
  };
  QuantumModel m{hermitian_part(gauss()), {}};
  for (int k = 0; k < n_jumps; ++k) m.jumps.push_back(gauss() / std::sqrt(double(d)));
  // rescale so that ||L|| = 1 as measured by the optimizer
  double ln = induced_trace_norm(build_liouvillian(m), {.seed = seed}).value;
  if (ln > 0.0) {
    m.hamiltonian /= ln;
    for (auto& j : m.jumps) j /= std::sqrt(ln);
  }
  return m;
}

inline ClassicalGenerator three_state_double_well(double fast, double slow) {
  if (!(slow > 0.0 && fast >= slow && std::isfinite(fast)))
    throw InvalidInput("double_well: need fast >= slow > 0");
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(3, 3);
  r(1, 0) = r(0, 1) = fast;
  r(2, 1) = r(1, 2) = slow;
  return generator_from_rates(r);
}

inline ClassicalGenerator two_state_chain(double a) {
  if (!(a > 0.0)) throw InvalidInput("two_state: rate must be positive");
  Eigen::MatrixXd r(2, 2);
  r << 0, a, a, 0;
  return generator_from_rates(r);
}

// every pair of states exchanges at the same rate
inline ClassicalGenerator uniform_chain(int n, double rate) {
  if (n < 2 || !(rate > 0.0)) throw InvalidInput("uniform_chain: need n >= 2 and rate > 0");
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(n, n, rate);
  return generator_from_rates(r);
}

struct ModelSpecifier {
  std::string name;
  std::map<std::string, double> params;
  std::optional<std::uint64_t> seed;
};

using AnyModel = std::variant<QuantumModel, ClassicalGenerator>;

namespace detail {
inline double param(const ModelSpecifier& s, const std::string& key, double fallback) {
  auto it = s.params.find(key);
  return it == s.params.end() ? fallback : it->second;
}
inline void allow_params(const ModelSpecifier& s, std::initializer_list<const char*> keys) {
  for (const auto& [k, v] : s.params) {
    bool ok = false;
    for (auto a : keys) ok = ok || k == a;
    if (!ok) throw InvalidInput("model '" + s.name + "' has no parameter '" + k + "'");
  }
}
inline int integer_param(const ModelSpecifier& s, const std::string& key, int fallback) {
  double v = param(s, key, fallback);
  if (v != std::floor(v)) throw InvalidInput("parameter '" + key + "' must be an integer");
  return static_cast<int>(v);
}
}  // namespace detail

// Defaults reproduce the reference parameter set gamma = 1, kappa = 0.005, omega = 5.025.
inline AnyModel make_model(const ModelSpecifier& s) {
  using detail::param;
  if (s.name == "spin_half") {
    detail::allow_params(s, {"gamma", "kappa", "omega"});
    return spin_half_dephasing(param(s, "gamma", 1.0), param(s, "kappa", 0.005), param(s, "omega", 5.025));
  }
  if (s.name == "qubit_decay") {
    detail::allow_params(s, {"rate"});
    return qubit_decay(param(s, "rate", 1.0));
  }
  if (s.name == "random") {
    detail::allow_params(s, {"dim", "jumps"});
    return random_lindbladian(detail::integer_param(s, "dim", 2), detail::integer_param(s, "jumps", 2),
                              s.seed.value_or(1));
  }
  if (s.name == "double_well") {
    detail::allow_params(s, {"fast", "slow"});
    return three_state_double_well(param(s, "fast", 1.0), param(s, "slow", 1e-3));
  }
  if (s.name == "two_state") {
    detail::allow_params(s, {"rate"});
    return two_state_chain(param(s, "rate", 1.0));
  }
  if (s.name == "uniform_chain") {
    detail::allow_params(s, {"n", "rate"});
    return uniform_chain(detail::integer_param(s, "n", 3), param(s, "rate", 1.0));
  }
  throw InvalidInput("unknown model '" + s.name + "'");
}

}  // namespace metastab
