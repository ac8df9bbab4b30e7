#pragma once

#include <stdexcept>
#include <string>

namespace metastab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// bad user data: non-finite entries, malformed files, bad parameters
struct InvalidInput : Error {
  using Error::Error;
};

// caller broke a documented precondition (non-Hermitian where Hermitian is required, ...)
struct ContractViolation : Error {
  using Error::Error;
};

// argument outside the domain where a formula is defined
struct DomainError : Error {
  using Error::Error;
};

struct DefectiveLiouvillian : Error {
  double condition;
  explicit DefectiveLiouvillian(double cond)
      : Error("eigenvector matrix too ill-conditioned (cond=" + std::to_string(cond) +
              "), generator treated as defective"),
        condition(cond) {}
};

struct InvalidCut : Error {
  using Error::Error;
};

struct SeparationInconsistency : Error {
  std::size_t index;  // 1-based eigenvalue index
  explicit SeparationInconsistency(std::size_t k)
      : Error("eigenvalue " + std::to_string(k) + " belongs to neither branch"), index(k) {}
};

struct TrivialDynamics : Error {
  TrivialDynamics() : Error("generator is zero, nothing to analyse") {}
};

struct NotMetastable : Error {
  using Error::Error;
};

}  // namespace metastab
