#include "fint/numbers.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace fint {

namespace {

BigInt big_gcd(BigInt a, BigInt b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    BigInt r = a % b;
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

}  // namespace

Rational::Rational(BigInt n, BigInt d) : num_(std::move(n)), den_(std::move(d)) {
  if (den_ == 0) throw std::domain_error("rational with zero denominator");
  normalize();
}

void Rational::normalize() {
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  if (num_ == 0) {
    den_ = 1;
    return;
  }
  BigInt g = big_gcd(num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

Rational Rational::operator-() const {
  Rational r;
  r.num_ = -num_;
  r.den_ = den_;
  return r;
}

Rational& Rational::operator+=(const Rational& o) {
  num_ = num_ * o.den_ + o.num_ * den_;
  den_ *= o.den_;
  normalize();
  return *this;
}

Rational& Rational::operator-=(const Rational& o) {
  num_ = num_ * o.den_ - o.num_ * den_;
  den_ *= o.den_;
  normalize();
  return *this;
}

Rational& Rational::operator*=(const Rational& o) {
  num_ *= o.num_;
  den_ *= o.den_;
  normalize();
  return *this;
}

Rational& Rational::operator/=(const Rational& o) {
  if (o.num_ == 0) throw std::domain_error("rational division by zero");
  num_ *= o.den_;
  den_ *= o.num_;
  normalize();
  return *this;
}

double Rational::to_double() const {
  return static_cast<double>(num_) / static_cast<double>(den_);
}

std::string Rational::str() const {
  std::string s = num_.str();
  if (den_ != 1) s += "/" + den_.str();
  return s;
}

Rational Rational::from_double_exact(double x) {
  if (!std::isfinite(x)) throw std::domain_error("non-finite to rational");
  if (x == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(x, &exp);  // x = mant * 2^exp, |mant| in [0.5,1)
  // 53 bits of mantissa make mant * 2^53 integral.
  BigInt m(static_cast<long long>(std::ldexp(mant, 53)));
  exp -= 53;
  if (exp >= 0) return Rational(m << exp);
  return Rational(m, BigInt(1) << (-exp));
}

std::optional<Rational> Rational::recognize(double x, long long max_den,
                                            double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  // Continued fraction convergents with a denominator cap; the first
  // (smallest-denominator) convergent inside the tolerance wins, so simple
  // candidates like 2 are preferred over tight large-denominator fits.
  double v = x;
  long long p_prev = 1, q_prev = 0;
  long long p = std::llround(std::floor(v)), q = 1;
  v -= std::floor(v);
  for (int iter = 0; iter < 64; ++iter) {
    double approx = static_cast<double>(p) / static_cast<double>(q);
    if (std::abs(approx - x) <= tol) return Rational(BigInt(p), BigInt(q));
    if (v <= 1e-15) break;
    v = 1.0 / v;
    double a_f = std::floor(v);
    if (a_f > 9e17) break;
    long long a = static_cast<long long>(a_f);
    v -= a_f;
    long long p_next = a * p + p_prev;
    long long q_next = a * q + q_prev;
    if (q_next > max_den || q_next <= 0) break;
    p_prev = p;
    q_prev = q;
    p = p_next;
    q = q_next;
  }
  return std::nullopt;
}

GaussianRational& GaussianRational::operator/=(const GaussianRational& o) {
  Rational n2 = o.norm2();
  if (n2.is_zero()) throw std::domain_error("gaussian division by zero");
  GaussianRational c = o.conj();
  *this *= c;
  re /= n2;
  im /= n2;
  return *this;
}

std::string GaussianRational::str() const {
  if (im.is_zero()) return re.str();
  std::string s = re.is_zero() ? "" : re.str();
  if (im.sign() >= 0 && !s.empty()) s += "+";
  s += im.str() + "*i";
  return s;
}

std::string format_double(double x) {
  // Shortest representation that parses back to the same double.
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

}  // namespace fint
