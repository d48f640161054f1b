#include "fint/scalar_expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>

#include "fint/errors.hpp"
#include "fint/numbers.hpp"

namespace fint {

namespace {

const std::map<std::string, ScalarExpr::Func>& func_names() {
  static const std::map<std::string, ScalarExpr::Func> names = {
      {"sin", ScalarExpr::Func::Sin},   {"cos", ScalarExpr::Func::Cos},
      {"tan", ScalarExpr::Func::Tan},   {"exp", ScalarExpr::Func::Exp},
      {"ln", ScalarExpr::Func::Ln},     {"sinh", ScalarExpr::Func::Sinh},
      {"cosh", ScalarExpr::Func::Cosh}, {"tanh", ScalarExpr::Func::Tanh},
      {"atan", ScalarExpr::Func::Atan}, {"sqrt", ScalarExpr::Func::Sqrt},
      {"abs", ScalarExpr::Func::Abs}};
  return names;
}

const char* func_name(ScalarExpr::Func f) {
  switch (f) {
    case ScalarExpr::Func::Sin: return "sin";
    case ScalarExpr::Func::Cos: return "cos";
    case ScalarExpr::Func::Tan: return "tan";
    case ScalarExpr::Func::Exp: return "exp";
    case ScalarExpr::Func::Ln: return "ln";
    case ScalarExpr::Func::Sinh: return "sinh";
    case ScalarExpr::Func::Cosh: return "cosh";
    case ScalarExpr::Func::Tanh: return "tanh";
    case ScalarExpr::Func::Atan: return "atan";
    case ScalarExpr::Func::Sqrt: return "sqrt";
    case ScalarExpr::Func::Abs: return "abs";
  }
  return "?";
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " overflowed");
}

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  ScalarExpr::Ptr run() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("empty expression", 0);
    auto e = expr();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  ScalarExpr::Ptr expr() {
    auto e = term();
    for (;;) {
      skip_ws();
      if (accept('+')) {
        e = ScalarExpr::add(e, term());
      } else if (accept('-')) {
        e = ScalarExpr::sub(e, term());
      } else {
        return e;
      }
    }
  }

  ScalarExpr::Ptr term() {
    auto e = unary();
    for (;;) {
      skip_ws();
      if (accept('*')) {
        e = ScalarExpr::mul(e, unary());
      } else if (accept('/')) {
        e = ScalarExpr::div(e, unary());
      } else {
        return e;
      }
    }
  }

  ScalarExpr::Ptr unary() {
    skip_ws();
    if (accept('-')) return ScalarExpr::negate(unary());
    return power();
  }

  ScalarExpr::Ptr power() {
    auto base = atom();
    skip_ws();
    if (accept('^')) return ScalarExpr::pow(base, unary());
    return base;
  }

  ScalarExpr::Ptr atom() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("expected operand", pos_);
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             std::isalpha(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      if (name == "t") return ScalarExpr::time_var();
      auto it = func_names().find(name);
      if (it == func_names().end())
        throw ParseError("unknown function '" + name + "'", start);
      skip_ws();
      expect('(');
      auto arg = expr();
      expect(')');
      return ScalarExpr::call(it->second, arg);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  ScalarExpr::Ptr number() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) ||
            s_[pos_] == '.'))
      ++pos_;
    // Exponent suffix (1e-3); 'e' must be followed by digits or sign+digits.
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t mark = pos_ + 1;
      if (mark < s_.size() && (s_[mark] == '+' || s_[mark] == '-')) ++mark;
      if (mark < s_.size() && std::isdigit(static_cast<unsigned char>(s_[mark]))) {
        pos_ = mark;
        while (pos_ < s_.size() &&
               std::isdigit(static_cast<unsigned char>(s_[pos_])))
          ++pos_;
      }
    }
    std::string tok = s_.substr(start, pos_ - start);
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size())
      throw ParseError("malformed number '" + tok + "'", start);
    return ScalarExpr::constant(v);
  }

  void skip_ws() {
    while (pos_ < s_.size() &&
           std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  bool accept(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    skip_ws();
    if (!accept(c))
      throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

int precedence(ScalarExpr::Kind k) {
  switch (k) {
    case ScalarExpr::Kind::Add:
    case ScalarExpr::Kind::Sub: return 1;
    case ScalarExpr::Kind::Mul:
    case ScalarExpr::Kind::Div: return 2;
    case ScalarExpr::Kind::Pow: return 4;
    default: return 5;
  }
}

void format_rec(const ScalarExpr& e, std::string& out, int parent_prec,
                bool right_side) {
  int prec = precedence(e.kind());
  bool need_paren = prec < parent_prec ||
                    (prec == parent_prec && right_side &&
                     prec <= 2);  // -, / are left associative
  if (e.kind() == ScalarExpr::Kind::Constant && e.constant_value() < 0)
    need_paren = parent_prec > 1;
  if (need_paren) out += '(';
  switch (e.kind()) {
    case ScalarExpr::Kind::Constant:
      out += format_double(e.constant_value());
      break;
    case ScalarExpr::Kind::TimeVar:
      out += 't';
      break;
    case ScalarExpr::Kind::Add:
      format_rec(*e.left(), out, prec, false);
      out += '+';
      format_rec(*e.right(), out, prec, true);
      break;
    case ScalarExpr::Kind::Sub:
      // 0 - x is unary minus in disguise.
      if (e.left()->kind() == ScalarExpr::Kind::Constant &&
          e.left()->constant_value() == 0.0) {
        out += '-';
        format_rec(*e.right(), out, 3, true);
        break;
      }
      format_rec(*e.left(), out, prec, false);
      out += '-';
      format_rec(*e.right(), out, prec, true);
      break;
    case ScalarExpr::Kind::Mul:
      format_rec(*e.left(), out, prec, false);
      out += '*';
      format_rec(*e.right(), out, prec, true);
      break;
    case ScalarExpr::Kind::Div:
      format_rec(*e.left(), out, prec, false);
      out += '/';
      format_rec(*e.right(), out, prec, true);
      break;
    case ScalarExpr::Kind::Pow:
      // ^ binds tighter than unary minus; parenthesize non-atomic children.
      format_rec(*e.left(), out, 5, false);
      out += '^';
      format_rec(*e.right(), out, 5, true);
      break;
    case ScalarExpr::Kind::Call:
      out += func_name(e.func());
      out += '(';
      format_rec(*e.left(), out, 0, false);
      out += ')';
      break;
  }
  if (need_paren) out += ')';
}

}  // namespace

ScalarExpr::Ptr ScalarExpr::constant(double v) {
  auto e = std::shared_ptr<ScalarExpr>(new ScalarExpr(Kind::Constant));
  e->value_ = v;
  return e;
}

ScalarExpr::Ptr ScalarExpr::time_var() {
  static const Ptr t = std::shared_ptr<ScalarExpr>(new ScalarExpr(Kind::TimeVar));
  return t;
}

ScalarExpr::Ptr ScalarExpr::add(Ptr a, Ptr b) {
  auto e = std::shared_ptr<ScalarExpr>(new ScalarExpr(Kind::Add));
  e->left_ = std::move(a);
  e->right_ = std::move(b);
  return e;
}

ScalarExpr::Ptr ScalarExpr::sub(Ptr a, Ptr b) {
  auto e = std::shared_ptr<ScalarExpr>(new ScalarExpr(Kind::Sub));
  e->left_ = std::move(a);
  e->right_ = std::move(b);
  return e;
}

ScalarExpr::Ptr ScalarExpr::mul(Ptr a, Ptr b) {
  auto e = std::shared_ptr<ScalarExpr>(new ScalarExpr(Kind::Mul));
  e->left_ = std::move(a);
  e->right_ = std::move(b);
  return e;
}

ScalarExpr::Ptr ScalarExpr::div(Ptr a, Ptr b) {
  auto e = std::shared_ptr<ScalarExpr>(new ScalarExpr(Kind::Div));
  e->left_ = std::move(a);
  e->right_ = std::move(b);
  return e;
}

ScalarExpr::Ptr ScalarExpr::pow(Ptr base, Ptr exponent) {
  auto e = std::shared_ptr<ScalarExpr>(new ScalarExpr(Kind::Pow));
  e->left_ = std::move(base);
  e->right_ = std::move(exponent);
  return e;
}

ScalarExpr::Ptr ScalarExpr::call(Func f, Ptr arg) {
  auto e = std::shared_ptr<ScalarExpr>(new ScalarExpr(Kind::Call));
  e->func_ = f;
  e->left_ = std::move(arg);
  return e;
}

ScalarExpr::Ptr ScalarExpr::negate(Ptr a) {
  if (a->kind() == Kind::Constant) return constant(-a->constant_value());
  return sub(constant(0.0), std::move(a));
}

double ScalarExpr::eval(double t) const {
  switch (kind_) {
    case Kind::Constant:
      return value_;
    case Kind::TimeVar:
      return t;
    case Kind::Add:
      return left_->eval(t) + right_->eval(t);
    case Kind::Sub:
      return left_->eval(t) - right_->eval(t);
    case Kind::Mul: {
      double v = left_->eval(t) * right_->eval(t);
      check_finite(v, "product");
      return v;
    }
    case Kind::Div: {
      double den = right_->eval(t);
      if (den == 0.0) throw DomainError("division by zero at t=" +
                                        format_double(t));
      double v = left_->eval(t) / den;
      check_finite(v, "quotient");
      return v;
    }
    case Kind::Pow: {
      double b = left_->eval(t);
      double p = right_->eval(t);
      double v = std::pow(b, p);
      if (!std::isfinite(v))
        throw DomainError("pow(" + format_double(b) + "," + format_double(p) +
                          ") undefined");
      return v;
    }
    case Kind::Call: {
      double a = left_->eval(t);
      double v = 0.0;
      switch (func_) {
        case Func::Sin: v = std::sin(a); break;
        case Func::Cos: v = std::cos(a); break;
        case Func::Tan:
          v = std::tan(a);
          check_finite(v, "tan");
          return v;
        case Func::Exp:
          v = std::exp(a);
          check_finite(v, "exp");
          return v;
        case Func::Ln:
          if (a <= 0.0)
            throw DomainError("ln of nonpositive value " + format_double(a));
          return std::log(a);
        case Func::Sinh:
          v = std::sinh(a);
          check_finite(v, "sinh");
          return v;
        case Func::Cosh:
          v = std::cosh(a);
          check_finite(v, "cosh");
          return v;
        case Func::Tanh: v = std::tanh(a); break;
        case Func::Atan: v = std::atan(a); break;
        case Func::Sqrt:
          if (a < 0.0)
            throw DomainError("sqrt of negative value " + format_double(a));
          return std::sqrt(a);
        case Func::Abs: v = std::fabs(a); break;
      }
      return v;
    }
  }
  throw DomainError("corrupt expression node");
}

std::string ScalarExpr::format() const {
  std::string out;
  format_rec(*this, out, 0, false);
  return out;
}

ScalarExpr::Ptr parse_scalar(const std::string& text) {
  if (text.empty()) throw ParseError("empty expression", 0);
  return Parser(text).run();
}

double eval_scalar(const ScalarExpr::Ptr& e, double t) { return e->eval(t); }

std::string format_scalar(const ScalarExpr::Ptr& e) { return e->format(); }

ScalarExpr::Ptr scalar_linear_combo(const std::vector<double>& coeffs,
                                    const std::vector<ScalarExpr::Ptr>& exprs) {
  ScalarExpr::Ptr acc;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0.0) continue;
    ScalarExpr::Ptr piece = exprs[i];
    if (piece->kind() == ScalarExpr::Kind::Constant) {
      if (piece->constant_value() == 0.0) continue;
      piece = ScalarExpr::constant(coeffs[i] * piece->constant_value());
    } else if (coeffs[i] != 1.0) {
      piece = ScalarExpr::mul(ScalarExpr::constant(coeffs[i]), piece);
    }
    acc = acc ? ScalarExpr::add(acc, piece) : piece;
  }
  return acc ? acc : ScalarExpr::constant(0.0);
}

}  // namespace fint
