#pragma once

#include <stdexcept>
#include <string>

namespace esq {

// Raised when a renewal dependence rule emits a hazard outside its sandwich.
class ScenarioViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when an intensity model leaves its declared bounds at a visited state.
class SandwichViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The coupling success probability is zero, so the tau series diverges.
class NoCouplingError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class DivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace esq
