#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fint/linalg.hpp"
#include "fint/numbers.hpp"
#include "fint/scalar_expr.hpp"

namespace fint {

struct EvalPoint {
  double t = 0.0;
  std::vector<double> x;
};

// Time-dependent linear change of variables y = g(t) x shared by the
// forms built for reducible systems. Entries are scalar expressions in t.
struct Transform {
  std::vector<std::vector<ScalarExpr::Ptr>> g;  // n x n
  std::vector<double> apply(double t, const std::vector<double>& x) const;
};
using TransformPtr = std::shared_ptr<const Transform>;

// A Jordan chain rendered as evaluable linear forms: vectors[k] is the
// k-th generalized eigenvector (complex entries allowed). Psi nodes solve
// the chain's triangular functional system pointwise.
struct PsiChainData {
  std::vector<CVec> vectors;
  TransformPtr transform;  // may be null
};
using PsiChainPtr = std::shared_ptr<const PsiChainData>;

// Fixed real exponent that remembers an exact rational origin when it has
// one (exponents coming from rational eigenvalues stay exact).
struct Exponent {
  double value = 1.0;
  std::optional<std::pair<long long, long long>> rat;  // num/den, den > 0

  static Exponent integer(long long k) { return {double(k), {{k, 1}}}; }
  static Exponent rational(long long num, long long den);
  static Exponent real(double v) { return {v, std::nullopt}; }
  std::string str() const;
};

// Immutable DAG of evaluable nodes over (t, x1..xn).
class IntegralExpr {
 public:
  enum class Kind {
    ScalarLift,  // scalar expression in t
    LinForm,     // nu . (g(t) x)   or   nu . x
    Add,         // n-ary sum
    Mul,         // n-ary product
    Pow,         // base ^ h, h a fixed real exponent
    Exp,
    Ln,
    Abs,
    Cos,
    Sin,
    Arctan,      // atan(numerator / denominator), principal branch
    Quadrature,  // integral of a t-only integrand from t0 to t (memoized)
    Psi,         // component of the chain functional system solution
  };

  using Ptr = std::shared_ptr<const IntegralExpr>;

  static Ptr lift(ScalarExpr::Ptr s);
  static Ptr constant(double v) { return lift(ScalarExpr::constant(v)); }
  static Ptr lin_form(std::vector<double> coeffs, TransformPtr g = nullptr);
  static Ptr add(std::vector<Ptr> terms);
  static Ptr add2(Ptr a, Ptr b) { return add({std::move(a), std::move(b)}); }
  static Ptr sub(Ptr a, Ptr b);
  static Ptr mul(std::vector<Ptr> factors);
  static Ptr mul2(Ptr a, Ptr b) { return mul({std::move(a), std::move(b)}); }
  static Ptr scale(double c, Ptr a);
  static Ptr pow(Ptr base, Exponent h);
  static Ptr exp(Ptr a);
  static Ptr ln(Ptr a);
  static Ptr abs(Ptr a);
  static Ptr cos(Ptr a);
  static Ptr sin(Ptr a);
  static Ptr arctan(Ptr num, Ptr den);
  // Integrand must not depend on x (checked; throws ConstructionError).
  static Ptr quadrature(Ptr integrand, double t0);
  static Ptr psi(PsiChainPtr chain, std::size_t index, bool imaginary_part);

  Kind kind() const { return kind_; }
  const ScalarExpr::Ptr& scalar() const { return scalar_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const TransformPtr& transform() const { return transform_; }
  const std::vector<Ptr>& children() const { return children_; }
  const Exponent& exponent() const { return exponent_; }
  double quad_t0() const { return t0_; }
  const PsiChainPtr& psi_chain() const { return psi_chain_; }
  std::size_t psi_index() const { return psi_index_; }
  bool psi_imag() const { return psi_imag_; }

  bool depends_on_x() const;

  double eval(const EvalPoint& p, double quad_tol) const;
  std::string format() const;

  // Sub-expressions whose zero set is singular for this expression
  // (ratio and arctan denominators, ln and fractional-power arguments,
  // Psi chain leading forms). Used for band exclusion and sign tracking.
  void collect_denominators(std::vector<Ptr>& out) const;

 private:
  explicit IntegralExpr(Kind k) : kind_(k) {}
  double eval_rec(const EvalPoint& p, double quad_tol) const;
  double eval_quadrature(double t, double quad_tol) const;

  Kind kind_;
  ScalarExpr::Ptr scalar_;
  std::vector<double> coeffs_;
  TransformPtr transform_;
  std::vector<Ptr> children_;
  Exponent exponent_;
  double t0_ = 0.0;
  PsiChainPtr psi_chain_;
  std::size_t psi_index_ = 0;
  bool psi_imag_ = false;

  struct QuadMemo;
  std::shared_ptr<QuadMemo> quad_memo_;  // only on Quadrature nodes
};

double eval_integral(const IntegralExpr::Ptr& f, const EvalPoint& p,
                     double quad_tol = 1e-10);

// Central-difference partial derivative. var == 0 differentiates in t,
// var == i (1-based) differentiates in x_i.
double numeric_partial(const IntegralExpr::Ptr& f, const EvalPoint& p,
                       std::size_t var, double quad_tol = 1e-10);

std::string format_integral(const IntegralExpr::Ptr& f);

}  // namespace fint
