#pragma once

#include <stdexcept>
#include <string>

namespace fint {

// Raised when an expression is evaluated inside its singular set
// (division by zero, ln of a nonpositive value, |.|^h at 0 with h < 1, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Raised by the parser; carries the byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Numerical routine failed to converge (quadrature depth exhausted,
// step-size collapse in the integrator, ...).
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what)
      : std::runtime_error(what) {}
};

// Spectral analysis could not commit to a Jordan structure
// (float eigenvalues too close to separate but chains inconsistent).
class ClusterAmbiguityError : public std::runtime_error {
 public:
  explicit ClusterAmbiguityError(const std::string& what)
      : std::runtime_error(what) {}
};

// A constructor's hypotheses do not hold for the given system.
class ConstructionError : public std::runtime_error {
 public:
  explicit ConstructionError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace fint
