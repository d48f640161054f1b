#include "fint/integral_expr.hpp"

#include <cctype>
#include <cfloat>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "fint/errors.hpp"
#include "fint/quad.hpp"

namespace fint {

namespace {

constexpr double kPanelWidth = 0.25;

double binom(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i)
    r = r * double(n - k + i) / double(i);
  return std::round(r);
}

bool is_integer_exponent(const Exponent& h) {
  return (h.rat && h.rat->second == 1) ||
         (!h.rat && std::nearbyint(h.value) == h.value);
}

}  // namespace

std::vector<double> Transform::apply(double t,
                                     const std::vector<double>& x) const {
  std::vector<double> y(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g[i].size(); ++j) {
      double gij = g[i][j] ? g[i][j]->eval(t) : 0.0;
      y[i] += gij * x[j];
    }
  return y;
}

Exponent Exponent::rational(long long num, long long den) {
  if (den == 0) throw std::domain_error("exponent with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  long long g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {double(num) / double(den), {{num, den}}};
}

std::string Exponent::str() const {
  if (rat) {
    std::string s = std::to_string(rat->first);
    if (rat->second != 1) s += "/" + std::to_string(rat->second);
    return s;
  }
  return format_double(value);
}

struct IntegralExpr::QuadMemo {
  std::mutex mu;
  // panel index -> (tolerance it was computed at, value)
  std::map<long long, std::pair<double, double>> panels;
};

IntegralExpr::Ptr IntegralExpr::lift(ScalarExpr::Ptr s) {
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::ScalarLift));
  e->scalar_ = std::move(s);
  return e;
}

IntegralExpr::Ptr IntegralExpr::lin_form(std::vector<double> coeffs,
                                         TransformPtr g) {
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::LinForm));
  e->coeffs_ = std::move(coeffs);
  e->transform_ = std::move(g);
  return e;
}

IntegralExpr::Ptr IntegralExpr::add(std::vector<Ptr> terms) {
  if (terms.size() == 1) return terms[0];
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Add));
  e->children_ = std::move(terms);
  return e;
}

IntegralExpr::Ptr IntegralExpr::sub(Ptr a, Ptr b) {
  return add2(std::move(a), scale(-1.0, std::move(b)));
}

IntegralExpr::Ptr IntegralExpr::mul(std::vector<Ptr> factors) {
  if (factors.size() == 1) return factors[0];
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Mul));
  e->children_ = std::move(factors);
  return e;
}

IntegralExpr::Ptr IntegralExpr::scale(double c, Ptr a) {
  if (c == 1.0) return a;
  return mul2(constant(c), std::move(a));
}

IntegralExpr::Ptr IntegralExpr::pow(Ptr base, Exponent h) {
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Pow));
  e->children_ = {std::move(base)};
  e->exponent_ = h;
  return e;
}

IntegralExpr::Ptr IntegralExpr::exp(Ptr a) {
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Exp));
  e->children_ = {std::move(a)};
  return e;
}

IntegralExpr::Ptr IntegralExpr::ln(Ptr a) {
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Ln));
  e->children_ = {std::move(a)};
  return e;
}

IntegralExpr::Ptr IntegralExpr::abs(Ptr a) {
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Abs));
  e->children_ = {std::move(a)};
  return e;
}

IntegralExpr::Ptr IntegralExpr::cos(Ptr a) {
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Cos));
  e->children_ = {std::move(a)};
  return e;
}

IntegralExpr::Ptr IntegralExpr::sin(Ptr a) {
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Sin));
  e->children_ = {std::move(a)};
  return e;
}

IntegralExpr::Ptr IntegralExpr::arctan(Ptr num, Ptr den) {
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Arctan));
  e->children_ = {std::move(num), std::move(den)};
  return e;
}

IntegralExpr::Ptr IntegralExpr::quadrature(Ptr integrand, double t0) {
  if (integrand->depends_on_x())
    throw ConstructionError("quadrature integrand depends on x");
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Quadrature));
  e->children_ = {std::move(integrand)};
  e->t0_ = t0;
  e->quad_memo_ = std::make_shared<QuadMemo>();
  return e;
}

IntegralExpr::Ptr IntegralExpr::psi(PsiChainPtr chain, std::size_t index,
                                    bool imaginary_part) {
  if (!chain || chain->vectors.size() < 2 || index == 0 ||
      index >= chain->vectors.size())
    throw ConstructionError("psi node needs a chain of length > index >= 1");
  auto e = std::shared_ptr<IntegralExpr>(new IntegralExpr(Kind::Psi));
  e->psi_chain_ = std::move(chain);
  e->psi_index_ = index;
  e->psi_imag_ = imaginary_part;
  return e;
}

bool IntegralExpr::depends_on_x() const {
  switch (kind_) {
    case Kind::ScalarLift:
    case Kind::Quadrature:
      return false;
    case Kind::LinForm:
    case Kind::Psi:
      return true;
    default:
      for (const auto& c : children_)
        if (c->depends_on_x()) return true;
      return false;
  }
}

double IntegralExpr::eval_quadrature(double t, double quad_tol) const {
  const auto& f = children_[0];
  double panel_tol = quad_tol / 8.0;
  auto integrand = [&](double tau) {
    EvalPoint q{tau, {}};
    return f->eval_rec(q, quad_tol);
  };
  double s = t - t0_;
  if (s == 0.0) return 0.0;
  double dir = s > 0 ? 1.0 : -1.0;
  double span = std::fabs(s);
  long long full = static_cast<long long>(std::floor(span / kPanelWidth));
  double total = 0.0;
  for (long long k = 0; k < full; ++k) {
    long long key = dir > 0 ? k : -(k + 1);
    double cached = 0.0;
    bool have = false;
    {
      std::lock_guard<std::mutex> lock(quad_memo_->mu);
      auto it = quad_memo_->panels.find(key);
      if (it != quad_memo_->panels.end() && it->second.first <= panel_tol) {
        cached = it->second.second;
        have = true;
      }
    }
    if (!have) {
      double a = t0_ + dir * double(k) * kPanelWidth;
      double b = a + dir * kPanelWidth;
      cached = adaptive_simpson(integrand, a, b, panel_tol);
      std::lock_guard<std::mutex> lock(quad_memo_->mu);
      auto it = quad_memo_->panels.find(key);
      if (it == quad_memo_->panels.end() || it->second.first > panel_tol)
        quad_memo_->panels[key] = {panel_tol, cached};
      else
        cached = it->second.second;
    }
    total += cached;
  }
  double last_knot = t0_ + dir * double(full) * kPanelWidth;
  if (last_knot != t)
    total += adaptive_simpson(integrand, last_knot, t, panel_tol);
  return total;
}

double IntegralExpr::eval_rec(const EvalPoint& p, double quad_tol) const {
  switch (kind_) {
    case Kind::ScalarLift:
      return scalar_->eval(p.t);
    case Kind::LinForm: {
      if (transform_) {
        std::vector<double> y = transform_->apply(p.t, p.x);
        double v = 0.0;
        for (std::size_t i = 0; i < coeffs_.size(); ++i) v += coeffs_[i] * y[i];
        return v;
      }
      if (p.x.size() < coeffs_.size())
        throw DomainError("evaluation point has too few coordinates");
      double v = 0.0;
      for (std::size_t i = 0; i < coeffs_.size(); ++i) v += coeffs_[i] * p.x[i];
      return v;
    }
    case Kind::Add: {
      double v = 0.0;
      for (const auto& c : children_) v += c->eval_rec(p, quad_tol);
      return v;
    }
    case Kind::Mul: {
      double v = 1.0;
      for (const auto& c : children_) v *= c->eval_rec(p, quad_tol);
      if (!std::isfinite(v)) throw DomainError("product overflowed");
      return v;
    }
    case Kind::Pow: {
      double b = children_[0]->eval_rec(p, quad_tol);
      double h = exponent_.value;
      if (b == 0.0) {
        if (h >= 1.0) return 0.0;
        throw DomainError("zero base with exponent " + exponent_.str());
      }
      if (b < 0.0 && !is_integer_exponent(exponent_))
        throw DomainError("negative base with fractional exponent " +
                          exponent_.str());
      double v = std::pow(b, h);
      if (!std::isfinite(v))
        throw DomainError("power overflowed: base " + format_double(b) +
                          ", exponent " + exponent_.str());
      return v;
    }
    case Kind::Exp: {
      double v = std::exp(children_[0]->eval_rec(p, quad_tol));
      if (!std::isfinite(v)) throw DomainError("exp overflowed");
      return v;
    }
    case Kind::Ln: {
      double a = children_[0]->eval_rec(p, quad_tol);
      if (a <= 0.0)
        throw DomainError("ln of nonpositive value " + format_double(a));
      return std::log(a);
    }
    case Kind::Abs:
      return std::fabs(children_[0]->eval_rec(p, quad_tol));
    case Kind::Cos:
      return std::cos(children_[0]->eval_rec(p, quad_tol));
    case Kind::Sin:
      return std::sin(children_[0]->eval_rec(p, quad_tol));
    case Kind::Arctan: {
      double num = children_[0]->eval_rec(p, quad_tol);
      double den = children_[1]->eval_rec(p, quad_tol);
      if (std::fabs(den) <= 1e-9 * (1.0 + std::fabs(num)))
        throw DomainError("arctan denominator inside singular band");
      return std::atan(num / den);
    }
    case Kind::Quadrature:
      return eval_quadrature(p.t, quad_tol);
    case Kind::Psi: {
      const auto& chain = *psi_chain_;
      std::vector<double> y =
          chain.transform ? chain.transform->apply(p.t, p.x) : p.x;
      std::size_t m = chain.vectors.size();
      std::vector<Complex> v(m, Complex(0.0));
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t j = 0; j < chain.vectors[k].size(); ++j)
          v[k] += chain.vectors[k][j] * y[j];
      double scale = 1.0;
      for (const auto& vk : v) scale = std::fmax(scale, std::abs(vk));
      if (std::abs(v[0]) <= 1e-9 * scale)
        throw DomainError("chain leading form inside singular band");
      std::vector<Complex> psi(m, Complex(0.0));
      for (std::size_t k = 1; k < m; ++k) {
        Complex acc = v[k];
        for (std::size_t tau = 1; tau < k; ++tau)
          acc -= binom(k - 1, tau - 1) * psi[tau] * v[k - tau];
        psi[k] = acc / v[0];
      }
      return psi_imag_ ? psi[psi_index_].imag() : psi[psi_index_].real();
    }
  }
  throw DomainError("corrupt integral expression node");
}

double IntegralExpr::eval(const EvalPoint& p, double quad_tol) const {
  double v = eval_rec(p, quad_tol);
  if (!std::isfinite(v)) throw DomainError("expression evaluated non-finite");
  return v;
}

namespace {

std::string format_complex_coeff(const Complex& c) {
  if (c.imag() == 0.0) return format_double(c.real());
  std::string s = "(" + format_double(c.real());
  if (c.imag() >= 0.0) s += "+";
  s += format_double(c.imag()) + "i)";
  return s;
}

std::string format_lin_terms(const std::vector<double>& coeffs) {
  std::string out;
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    double c = coeffs[j];
    if (c == 0.0) continue;
    std::string var = "x" + std::to_string(j + 1);
    if (out.empty()) {
      if (c == 1.0)
        out = var;
      else if (c == -1.0)
        out = "-" + var;
      else
        out = format_double(c) + "*" + var;
    } else {
      if (c == 1.0)
        out += "+" + var;
      else if (c == -1.0)
        out += "-" + var;
      else if (c > 0.0)
        out += "+" + format_double(c) + "*" + var;
      else
        out += "-" + format_double(-c) + "*" + var;
    }
  }
  return out.empty() ? "0" : out;
}

// Renders the integration dummy variable: standalone 't' tokens become tau.
std::string replace_time_var(const std::string& s) {
  auto word_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    bool standalone = s[i] == 't' && (i == 0 || !word_char(s[i - 1])) &&
                      (i + 1 == s.size() || !word_char(s[i + 1]));
    if (standalone)
      out += "τ";
    else
      out += s[i];
  }
  return out;
}

std::string format_lin_complex(const CVec& v) {
  std::string out;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j] == Complex(0.0)) continue;
    if (!out.empty()) out += "+";
    out += format_complex_coeff(v[j]) + "*x" + std::to_string(j + 1);
  }
  return out.empty() ? "0" : out;
}

}  // namespace

std::string IntegralExpr::format() const {
  switch (kind_) {
    case Kind::ScalarLift:
      return scalar_->format();
    case Kind::LinForm: {
      if (!transform_) return format_lin_terms(coeffs_);
      // Combine nu^T g(t) into per-coordinate scalar coefficients.
      std::string out;
      std::size_t n = transform_->g.size();
      for (std::size_t j = 0; j < n; ++j) {
        std::vector<ScalarExpr::Ptr> col;
        std::vector<double> w;
        for (std::size_t i = 0; i < coeffs_.size() && i < n; ++i) {
          if (coeffs_[i] == 0.0 || !transform_->g[i][j]) continue;
          col.push_back(transform_->g[i][j]);
          w.push_back(coeffs_[i]);
        }
        if (col.empty()) continue;
        auto coeff = scalar_linear_combo(w, col);
        if (!out.empty()) out += "+";
        out += "(" + coeff->format() + ")*x" + std::to_string(j + 1);
      }
      return out.empty() ? "0" : out;
    }
    case Kind::Add: {
      std::string out;
      for (const auto& c : children_) {
        std::string piece = c->format();
        if (out.empty())
          out = piece;
        else if (!piece.empty() && piece[0] == '-')
          out += piece;
        else
          out += "+" + piece;
      }
      return out;
    }
    case Kind::Mul: {
      std::size_t start = 0;
      std::string out;
      // A leading -1 coefficient prints as a simple sign.
      if (children_[0]->kind() == Kind::ScalarLift &&
          children_[0]->scalar()->kind() == ScalarExpr::Kind::Constant &&
          children_[0]->scalar()->constant_value() == -1.0 &&
          children_.size() > 1) {
        out = "-";
        start = 1;
      }
      for (std::size_t i = start; i < children_.size(); ++i) {
        const auto& c = children_[i];
        bool paren = c->kind() == Kind::Add || c->kind() == Kind::LinForm ||
                     (c->kind() == Kind::ScalarLift &&
                      c->scalar()->kind() != ScalarExpr::Kind::Constant &&
                      c->scalar()->kind() != ScalarExpr::Kind::TimeVar);
        if (i > start) out += "*";
        out += paren ? "(" + c->format() + ")" : c->format();
      }
      return out;
    }
    case Kind::Pow: {
      std::string base = "(" + children_[0]->format() + ")";
      std::string h = exponent_.str();
      bool wrap = h.find('/') != std::string::npos || h[0] == '-';
      return base + "^" + (wrap ? "(" + h + ")" : h);
    }
    case Kind::Exp:
      return "exp(" + children_[0]->format() + ")";
    case Kind::Ln:
      return "ln(" + children_[0]->format() + ")";
    case Kind::Abs:
      return "abs(" + children_[0]->format() + ")";
    case Kind::Cos:
      return "cos(" + children_[0]->format() + ")";
    case Kind::Sin:
      return "sin(" + children_[0]->format() + ")";
    case Kind::Arctan:
      return "atan((" + children_[0]->format() + ")/(" +
             children_[1]->format() + "))";
    case Kind::Quadrature:
      return "∫[" + format_double(t0_) + ",t] " +
             replace_time_var(children_[0]->format()) + " dτ";
    case Kind::Psi: {
      std::string out = psi_imag_ ? "Im " : "";
      bool complex_chain = false;
      for (const auto& vec : psi_chain_->vectors)
        for (const auto& c : vec)
          if (c.imag() != 0.0) complex_chain = true;
      if (complex_chain && !psi_imag_) out = "Re ";
      out += "Psi" + std::to_string(psi_index_) + "[";
      for (std::size_t k = 0; k < psi_chain_->vectors.size(); ++k) {
        if (k) out += "; ";
        out += format_lin_complex(psi_chain_->vectors[k]);
      }
      out += "]";
      if (psi_chain_->transform) out += "@g";
      return out;
    }
  }
  return "?";
}

void IntegralExpr::collect_denominators(std::vector<Ptr>& out) const {
  switch (kind_) {
    case Kind::Pow:
      if (exponent_.value < 0.0 || !is_integer_exponent(exponent_)) {
        // Track the signed form inside an abs so crossings are visible.
        if (children_[0]->kind() == Kind::Abs)
          out.push_back(children_[0]->children()[0]);
        else
          out.push_back(children_[0]);
      }
      children_[0]->collect_denominators(out);
      return;
    case Kind::Ln:
      out.push_back(children_[0]);
      children_[0]->collect_denominators(out);
      return;
    case Kind::Arctan:
      out.push_back(children_[1]);
      children_[0]->collect_denominators(out);
      children_[1]->collect_denominators(out);
      return;
    case Kind::Psi: {
      const auto& v0 = psi_chain_->vectors[0];
      std::vector<double> re(v0.size()), im(v0.size());
      bool complex_chain = false;
      for (std::size_t j = 0; j < v0.size(); ++j) {
        re[j] = v0[j].real();
        im[j] = v0[j].imag();
        if (im[j] != 0.0) complex_chain = true;
      }
      if (!complex_chain) {
        out.push_back(lin_form(re, psi_chain_->transform));
      } else {
        out.push_back(
            add2(pow(lin_form(re, psi_chain_->transform), Exponent::integer(2)),
                 pow(lin_form(im, psi_chain_->transform),
                     Exponent::integer(2))));
      }
      return;
    }
    case Kind::Quadrature:
      return;  // time-only; integrand poles surface at evaluation
    default:
      for (const auto& c : children_) c->collect_denominators(out);
      return;
  }
}

double eval_integral(const IntegralExpr::Ptr& f, const EvalPoint& p,
                     double quad_tol) {
  return f->eval(p, quad_tol);
}

double numeric_partial(const IntegralExpr::Ptr& f, const EvalPoint& p,
                       std::size_t var, double quad_tol) {
  static const double eps_cbrt = std::cbrt(DBL_EPSILON);
  double coord = var == 0 ? p.t : p.x.at(var - 1);
  double h = eps_cbrt * (1.0 + std::fabs(coord));
  volatile double hi = coord + h;
  volatile double lo = coord - h;
  double actual = (hi - lo) / 2.0;
  EvalPoint plus = p, minus = p;
  if (var == 0) {
    plus.t = hi;
    minus.t = lo;
  } else {
    plus.x[var - 1] = hi;
    minus.x[var - 1] = lo;
  }
  double fp = f->eval(plus, quad_tol);
  double fm = f->eval(minus, quad_tol);
  return (fp - fm) / (2.0 * actual);
}

std::string format_integral(const IntegralExpr::Ptr& f) { return f->format(); }

}  // namespace fint
