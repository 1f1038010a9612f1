#pragma once

#include <stdexcept>
#include <string>

namespace gci {

// Bad shapes, out-of-range indices, malformed input files, non-SPD matrices.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Arguments outside the mathematical domain of a function (x <= 0, alpha <= 1, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// A result that should hold by construction did not (e.g. C(tau) lost definiteness).
class ConsistencyError : public std::runtime_error {
 public:
  explicit ConsistencyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gci
