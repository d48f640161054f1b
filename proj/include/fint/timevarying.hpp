#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fint/autonomous.hpp"
#include "fint/spectral.hpp"
#include "fint/system_spec.hpp"

namespace fint {

// Best matching class with the evidence that drove the decision.
// class_hint wins when present (its preconditions are still verified).
SystemClass classify_system(const SystemSpec& spec, double tol = 1e-8,
                            std::string* evidence = nullptr);

// Theorems 2.1-2.3 / Corollary 2.1: constant eigenvectors with
// time-dependent eigenfunctions.
BasisResult algebraic_reducible_integrals(const SystemSpec& spec,
                                          double tol = 1e-8);

// Theorem 2.4 / Corollary 2.2: upper-triangular coefficient matrix.
BasisResult triangular_integrals(const SystemSpec& spec);

// Theorems 2.5-2.7, 2.12-2.14: nonautonomous integrals of a commuting
// (Lappo-Danilevskii) family.
BasisResult ld_nonautonomous_integrals(const SystemSpec& spec,
                                       double tol = 1e-8);

// Theorems 2.8-2.11: autonomous integrals of a commuting family.
BasisResult ld_autonomous_integrals(const SystemSpec& spec, double tol = 1e-8);

// Chain data over one common eigenvector: the designated matrix index,
// the chain of B_zeta, and the mu constants of Lemma 2.7. Returns nullopt
// when the chain does not extend or condition (iii) fails numerically.
struct LDChainData {
  std::size_t zeta = 0;  // 0-based index of the designated matrix
  EigenChain chain;
  // mu[theta-1][j] = a_j Psi_theta, theta = 1..s-1, j over the family.
  std::vector<std::vector<Complex>> mu;
};
std::optional<LDChainData> ld_chain_data(const SystemSpec& spec,
                                         const CommonEigenvector& ev,
                                         double tol = 1e-8);

// Dispatches to the constructor family matching the class.
BasisResult build_basis_for_class(const SystemSpec& spec, SystemClass cls,
                                  BasisMode mode);

}  // namespace fint
