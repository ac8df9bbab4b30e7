#pragma once

#include <concepts>
#include <optional>
#include <random>
#include <vector>

#include "induced_norm.hpp"
#include "superop.hpp"

namespace metastab {

// What the regime machinery needs from a dynamics: evolution maps that can be
// added and composed, the induced norm on them, and the spectrum.
template <class B>
concept DynamicsBackend = requires(const B& b, const typename B::matrix_type& x, double t, std::size_t m,
                                   std::uint64_t seed) {
  typename B::matrix_type;
  { b.evolution(t) } -> std::convertible_to<typename B::matrix_type>;
  { b.identity() } -> std::convertible_to<typename B::matrix_type>;
  { b.stationary_projector() } -> std::convertible_to<typename B::matrix_type>;
  { b.slow_projector(m) } -> std::convertible_to<typename B::matrix_type>;
  { b.generator() } -> std::convertible_to<typename B::matrix_type>;
  { b.correlator(seed) } -> std::convertible_to<typename B::matrix_type>;
  { b.norm(x) } -> std::convertible_to<double>;
  { b.generator_norm() } -> std::convertible_to<double>;
  { b.eigenvalues() } -> std::convertible_to<const std::vector<cplx>&>;
  { b.stationary_count() } -> std::convertible_to<std::size_t>;
  { b.dim() } -> std::convertible_to<Eigen::Index>;
  { x - x } -> std::convertible_to<typename B::matrix_type>;
  { x * x } -> std::convertible_to<typename B::matrix_type>;
};

template <DynamicsBackend B>
double distance(const B& b, double t1, double t2) {
  if (t1 == t2) return 0.0;
  return b.norm(b.evolution(t1) - b.evolution(t2));
}

template <DynamicsBackend B>
double distance_to_identity(const B& b, double t) {
  return b.norm(b.evolution(t) - b.identity());
}

template <DynamicsBackend B>
double distance_to_stationary(const B& b, double t) {
  return b.norm(b.evolution(t) - b.stationary_projector());
}

// Largest oscillation frequency among modes that still carry weight at time t.
inline double oscillation_rate(const std::vector<cplx>& vals, double t, double alive = 1e-10) {
  double w = 0.0;
  for (const auto& l : vals)
    if (std::exp(t * l.real()) > alive) w = std::max(w, std::abs(l.imag()));
  return w;
}

class QuantumBackend {
 public:
  using matrix_type = Superoperator;

  explicit QuantumBackend(const QuantumModel& model, InducedNormOptions opt = {}, double zero_tol = -1.0)
      : QuantumBackend(build_liouvillian(model), opt, zero_tol) {}

  QuantumBackend(Superoperator liouvillian, InducedNormOptions opt = {}, double zero_tol = -1.0)
      : l_(std::move(liouvillian)), opt_(opt), spec_(spectral_decompose(l_, zero_tol)) {
    pss_ = metastab::stationary_projector(spec_);
    lnorm_ = induced_trace_norm(l_, opt_).value;
  }

  Eigen::Index dim() const { return l_.dim; }
  const SpectralData& spectral() const { return spec_; }
  const SpectralBasis& basis() const { return spec_.basis; }
  const std::vector<cplx>& eigenvalues() const { return spec_.eigenvalues(); }
  std::size_t stationary_count() const { return spec_.m_ss(); }
  const InducedNormOptions& options() const { return opt_; }

  Superoperator evolution(double t) const { return metastab::evolution(spec_, t); }
  Superoperator identity() const { return identity_superop(l_.dim); }
  Superoperator stationary_projector() const { return pss_; }
  Superoperator slow_projector(std::size_t m) const { return metastab::slow_projector(spec_, m); }
  Superoperator generator() const { return l_; }

  // symmetrised correlator rho -> (O rho + rho O)/2 of a random observable with ||O||_max = 1
  Superoperator correlator(std::uint64_t seed) const {
    const Eigen::Index d = l_.dim;
    auto rng = detail::stream(seed, 0x636f7272ULL);
    std::normal_distribution<double> g;
    Operator a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) a(i, j) = cplx(g(rng), g(rng));
    Operator o = hermitian_part(a);
    o /= max_norm(o);
    Operator id = Operator::Identity(d, d);
    return {d, 0.5 * (kron(id, o) + kron(o.transpose(), id)), true, false};
  }

  double norm(const Superoperator& x) const { return induced_trace_norm(x, opt_).value; }
  InducedNormResult norm_detail(const Superoperator& x, const StateVector* warm = nullptr) const {
    return induced_trace_norm(x, opt_, warm);
  }
  double generator_norm() const { return lnorm_; }

  // test hook: replace the stationary projector (negative controls)
  void override_stationary(Superoperator p) { pss_ = std::move(p); }

 private:
  Superoperator l_;
  InducedNormOptions opt_;
  SpectralData spec_;
  Superoperator pss_;
  double lnorm_ = 0.0;
};

static_assert(DynamicsBackend<QuantumBackend>);

}  // namespace metastab
