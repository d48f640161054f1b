#pragma once

#include <memory>
#include <string>
#include <vector>

namespace fint {

// Immutable expression tree in the single variable t.
// Trees are shared freely; nodes are never mutated after construction.
class ScalarExpr {
 public:
  enum class Kind { Constant, TimeVar, Add, Sub, Mul, Div, Pow, Call };
  enum class Func { Sin, Cos, Tan, Exp, Ln, Sinh, Cosh, Tanh, Atan, Sqrt, Abs };

  using Ptr = std::shared_ptr<const ScalarExpr>;

  static Ptr constant(double v);
  static Ptr time_var();
  static Ptr add(Ptr a, Ptr b);
  static Ptr sub(Ptr a, Ptr b);
  static Ptr mul(Ptr a, Ptr b);
  static Ptr div(Ptr a, Ptr b);
  static Ptr pow(Ptr base, Ptr exponent);
  static Ptr call(Func f, Ptr arg);
  static Ptr negate(Ptr a);  // 0 - a

  Kind kind() const { return kind_; }
  double constant_value() const { return value_; }
  Func func() const { return func_; }
  const Ptr& left() const { return left_; }
  const Ptr& right() const { return right_; }

  // Throws DomainError at singular points; never returns a non-finite value.
  double eval(double t) const;

  std::string format() const;

 private:
  ScalarExpr(Kind k) : kind_(k) {}

  Kind kind_;
  double value_ = 0.0;
  Func func_ = Func::Sin;
  Ptr left_, right_;
};

// Parses the published grammar:
//   expr  := term (("+"|"-") term)*
//   term  := unary (("*"|"/") unary)*
//   unary := "-" unary | power
//   power := atom ("^" unary)?
//   atom  := NUMBER | "t" | "(" expr ")" | IDENT "(" expr ")"
// Throws ParseError with the byte offset of the failure.
ScalarExpr::Ptr parse_scalar(const std::string& text);

double eval_scalar(const ScalarExpr::Ptr& e, double t);
std::string format_scalar(const ScalarExpr::Ptr& e);

// Convenience builders used throughout the constructors.
ScalarExpr::Ptr scalar_linear_combo(const std::vector<double>& coeffs,
                                    const std::vector<ScalarExpr::Ptr>& exprs);

}  // namespace fint
