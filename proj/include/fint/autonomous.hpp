#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fint/integral_expr.hpp"
#include "fint/spectral.hpp"
#include "fint/system_spec.hpp"

namespace fint {

// Linear partial integral p(x) = nu . x with its eigenvalue; complex
// eigenvectors are carried as the (Re, Im) pair of real forms.
struct PartialIntegral {
  IntegralExpr::Ptr form_re;
  IntegralExpr::Ptr form_im;  // null for a real eigenvector
  Complex lambda;
};

enum class BasisMode { Autonomous, Full, Forced };

struct BasisEntry {
  IntegralExpr::Ptr integral;
  std::string provenance;
  std::vector<std::string> singular_set;
};

struct BasisResult {
  std::vector<BasisEntry> entries;
  BasisMode mode = BasisMode::Autonomous;
  std::vector<std::string> warnings;
  std::vector<IntegralExpr::Ptr> integrals() const;
};

// Shared knobs that let the same constructions serve plain constant
// systems and systems reduced by y = g(t) x (the transform rides on every
// linear form, and Euler-type reductions swap t for ln t in the time
// factors).
struct CtorOptions {
  TransformPtr transform;
  bool log_time = false;
  double t0 = 0.0;
  bool section3_names = false;  // report section-3 theorem tags
};

BasisEntry make_entry(IntegralExpr::Ptr f, std::string provenance);

PartialIntegral linear_partial_integral(const EigenChain& chain,
                                        const CtorOptions& opts = {});

// Theorem 1.1 / Corollaries 1.1-1.2 for two real chains.
BasisEntry weighted_product_integral(const EigenChain& c1,
                                     const EigenChain& c2,
                                     const CtorOptions& opts = {});

// Theorems 1.2-1.4 for one or two chains with a complex participant.
std::vector<BasisEntry> complex_autonomous_integrals(
    const std::vector<EigenChain>& chains, const CtorOptions& opts = {});

// Theorems 1.5-1.7 and Corollaries 1.3-1.4 for chains of length >= 2.
std::vector<BasisEntry> chain_autonomous_integrals(
    const EigenChain& primary, const EigenChain* other = nullptr,
    const CtorOptions& opts = {});

// Theorem 1.8: Psi_2 .. Psi_{m-1} (Re/Im split for complex chains).
std::vector<BasisEntry> psi_evaluators(const EigenChain& chain,
                                       const CtorOptions& opts = {});

// Theorems 1.9-1.10 and Corollary 1.5.
std::vector<BasisEntry> time_anchored_integral(const EigenChain& chain,
                                               const CtorOptions& opts = {});

// Theorem 1.11 / Corollary 1.6 (simple chain, forcing present).
std::vector<BasisEntry> forced_integral(const EigenChain& chain,
                                        const SystemSpec& spec,
                                        const CtorOptions& opts = {});

// Theorem 1.12 / Corollary 1.7 (chain of length >= 2, forcing present).
std::vector<BasisEntry> forced_chain_integrals(const EigenChain& chain,
                                               const SystemSpec& spec,
                                               const CtorOptions& opts = {});

// Deterministic greedy basis assembly over the spectral data of A^T.
BasisResult autonomous_basis(const SystemSpec& spec, BasisMode mode);

// Internal reuse: candidate generation + greedy independence selection
// starting from precomputed spectral data.
BasisResult assemble_basis(const SystemSpec& spec, const SpectralData& sd,
                           BasisMode mode, const CtorOptions& opts);

}  // namespace fint
