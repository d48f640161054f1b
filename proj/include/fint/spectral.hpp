#pragma once

#include <string>
#include <vector>

#include "fint/linalg.hpp"
#include "fint/numbers.hpp"

namespace fint {

using RealMat = std::vector<std::vector<double>>;

// One Jordan chain of B: vectors[0] is the eigenvector, vectors[k] the
// k-th order generalized eigenvector in the k-scaled convention
//   (B - lambda E) v^k = k v^(k-1).
struct EigenChain {
  Complex lambda;
  std::vector<CVec> vectors;
  bool exact = false;
  GaussianRational lambda_exact;
  std::vector<QVec> vectors_exact;  // parallel to `vectors` when exact

  std::size_t multiplicity() const { return vectors.size(); }
  bool is_real() const;
  std::vector<double> re(std::size_t k) const;
  std::vector<double> im(std::size_t k) const;
};

struct SpectralData {
  std::vector<EigenChain> chains;  // sorted by (Re l, Im l, m)
  std::vector<Complex> char_poly;  // c1..cn of l^n + c1 l^(n-1) + ... + cn
  bool exact = false;
  std::size_t dimension = 0;
};

// Full Jordan decomposition of B = A^T. Takes the exact path when every
// root of the characteristic polynomial is recognizably rational or
// Gaussian-rational (certified in exact arithmetic); floats otherwise.
SpectralData spectrum_of_transpose(const RealMat& a, double tol = 1e-8);

// Chain of requested length for a known eigenvalue of B.
EigenChain build_chain(const RealMat& b, Complex lambda, std::size_t m,
                       double tol = 1e-8);

// Extends a known eigenvector of B upward as far as the Jordan structure
// allows (at most max_len vectors in total).
EigenChain extend_chain_over(const RealMat& b, const CVec& nu0, Complex lambda,
                             std::size_t max_len, double tol = 1e-8);

struct CommonEigenvector {
  CVec nu;
  std::vector<Complex> lambdas;  // one eigenvalue per input matrix
  bool exact = false;
  QVec nu_exact;
  std::vector<GaussianRational> lambdas_exact;
  bool is_real() const;
};

struct CommonSpectrum {
  std::vector<CommonEigenvector> eigenvectors;
  bool exact = false;
};

// Simultaneous eigenvectors of the family {B_j} with their per-matrix
// eigenvalues. With require_commuting the pairwise commutators are
// checked first and a violation throws ConstructionError; without it the
// intersection search still finds every constant common eigenvector
// (used by the algebraic-reducible classifier).
CommonSpectrum common_spectrum(const std::vector<RealMat>& b_mats,
                               double tol = 1e-8,
                               bool require_commuting = true);

// Residual of the chain identities (1.14)-style, maximum over the chain.
double chain_residual(const RealMat& b, const EigenChain& chain);

std::string format_eigenvalue(const Complex& l);

}  // namespace fint
