#include "fint/autonomous.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fint/errors.hpp"
#include "fint/numerics.hpp"

namespace fint {

namespace {

using IE = IntegralExpr;

bool lambda_equal(const EigenChain& a, const EigenChain& b) {
  if (a.exact && b.exact) return a.lambda_exact == b.lambda_exact;
  return std::abs(a.lambda - b.lambda) <=
         1e-9 * (1.0 + std::abs(a.lambda));
}

bool lambda_is_zero(const EigenChain& c) {
  if (c.exact) return c.lambda_exact.is_zero();
  return std::abs(c.lambda) <= 1e-12;
}

// Time factor s(t): plain t, or ln t for Euler-type reductions.
ScalarExpr::Ptr time_factor(const CtorOptions& opts) {
  if (opts.log_time)
    return ScalarExpr::call(ScalarExpr::Func::Ln, ScalarExpr::time_var());
  return ScalarExpr::time_var();
}

// exp(c * s(t)) as a scalar expression; t^c in the log-time case.
ScalarExpr::Ptr exp_time(double c, const CtorOptions& opts) {
  if (c == 0.0) return ScalarExpr::constant(1.0);
  if (opts.log_time)
    return ScalarExpr::pow(ScalarExpr::time_var(), ScalarExpr::constant(c));
  return ScalarExpr::call(ScalarExpr::Func::Exp,
                          ScalarExpr::mul(ScalarExpr::constant(c),
                                          ScalarExpr::time_var()));
}

ScalarExpr::Ptr trig_time(ScalarExpr::Func f, double c,
                          const CtorOptions& opts) {
  return ScalarExpr::call(
      f, ScalarExpr::mul(ScalarExpr::constant(c), time_factor(opts)));
}

IE::Ptr lf(const std::vector<double>& coeffs, const CtorOptions& opts) {
  return IE::lin_form(coeffs, opts.transform);
}

IE::Ptr ratio(IE::Ptr num, IE::Ptr den) {
  return IE::mul2(std::move(num), IE::pow(std::move(den), Exponent::integer(-1)));
}

IE::Ptr square_sum(IE::Ptr a, IE::Ptr b) {
  return IE::add2(IE::pow(std::move(a), Exponent::integer(2)),
                  IE::pow(std::move(b), Exponent::integer(2)));
}

// Exponent pair (h1, h2) = (l2, -l1), reduced to smallest integers when
// both eigenvalues are exact rationals.
std::pair<Exponent, Exponent> product_exponents(const EigenChain& c1,
                                                const EigenChain& c2) {
  if (c1.exact && c2.exact && c1.lambda_exact.is_real() &&
      c2.lambda_exact.is_real()) {
    const Rational& l1 = c1.lambda_exact.re;
    const Rational& l2 = c2.lambda_exact.re;
    BigInt a = l2.num() * l1.den();
    BigInt b = -l1.num() * l2.den();
    BigInt g = boost::multiprecision::gcd(a < 0 ? BigInt(-a) : a,
                                          b < 0 ? BigInt(-b) : b);
    if (g > 0) {
      a /= g;
      b /= g;
    }
    if (a >= std::numeric_limits<long long>::min() &&
        a <= std::numeric_limits<long long>::max() &&
        b >= std::numeric_limits<long long>::min() &&
        b <= std::numeric_limits<long long>::max())
      return {Exponent::integer(a.convert_to<long long>()),
              Exponent::integer(b.convert_to<long long>())};
  }
  return {Exponent::real(c2.lambda.real()), Exponent::real(-c1.lambda.real())};
}

std::string tag(const char* base, const CtorOptions& opts) {
  if (!opts.section3_names) return base;
  static const std::pair<const char*, const char*> table[] = {
      {"Theorem 1.9", "Theorem 3.1"},   {"Corollary 1.5", "Theorem 3.2"},
      {"Theorem 1.10", "Theorem 3.3"},  {"Theorem 1.8", "Theorem 3.4"},
      {"Theorem 1.11", "Theorem 3.5"},  {"Corollary 1.6", "Corollary 3.1"},
      {"Theorem 1.12", "Theorem 3.6"},  {"Corollary 1.7", "Corollary 3.2"},
      {"Lemma 1.1", "Lemma 3.1"}};
  for (const auto& [from, to] : table)
    if (std::string(base) == from) return to;
  return base;
}

// Scalar integrand nu . (g(z)) f(z) for forced quadratures; with no
// transform this is just nu . f(z).
ScalarExpr::Ptr forcing_dot(const std::vector<double>& nu,
                            const SystemSpec& spec, const CtorOptions& opts) {
  std::size_t n = spec.n;
  if (!opts.transform) {
    std::vector<ScalarExpr::Ptr> fs(spec.forcing);
    std::vector<double> w(nu);
    fs.resize(n, ScalarExpr::constant(0.0));
    w.resize(n, 0.0);
    return scalar_linear_combo(w, fs);
  }
  ScalarExpr::Ptr acc;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      auto gij = opts.transform->g[i][j];
      if (!gij || j >= spec.forcing.size()) continue;
      auto piece = ScalarExpr::mul(gij, spec.forcing[j]);
      if (nu[i] != 1.0)
        piece = ScalarExpr::mul(ScalarExpr::constant(nu[i]), piece);
      acc = acc ? ScalarExpr::add(acc, piece) : piece;
    }
  }
  return acc ? acc : ScalarExpr::constant(0.0);
}

PsiChainPtr psi_chain_of(const EigenChain& chain, const CtorOptions& opts,
                         std::size_t limit = 0) {
  auto data = std::make_shared<PsiChainData>();
  data->vectors = chain.vectors;
  if (limit && data->vectors.size() > limit) data->vectors.resize(limit);
  data->transform = opts.transform;
  return data;
}

}  // namespace

std::vector<IntegralExpr::Ptr> BasisResult::integrals() const {
  std::vector<IntegralExpr::Ptr> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.integral);
  return out;
}

BasisEntry make_entry(IntegralExpr::Ptr f, std::string provenance) {
  BasisEntry entry;
  entry.integral = std::move(f);
  entry.provenance = std::move(provenance);
  std::vector<IntegralExpr::Ptr> dens;
  entry.integral->collect_denominators(dens);
  std::set<std::string> seen;
  for (const auto& d : dens) {
    std::string s = d->format() + " = 0";
    if (seen.insert(s).second) entry.singular_set.push_back(s);
  }
  return entry;
}

PartialIntegral linear_partial_integral(const EigenChain& chain,
                                        const CtorOptions& opts) {
  PartialIntegral p;
  p.lambda = chain.lambda;
  p.form_re = lf(chain.re(0), opts);
  if (!chain.is_real()) p.form_im = lf(chain.im(0), opts);
  return p;
}

BasisEntry weighted_product_integral(const EigenChain& c1,
                                     const EigenChain& c2,
                                     const CtorOptions& opts) {
  if (!c1.is_real() || !c2.is_real())
    throw ConstructionError("weighted product needs real chains");
  if (lambda_is_zero(c1))
    return make_entry(lf(c1.re(0), opts), tag("Corollary 1.1", opts));
  if (lambda_is_zero(c2))
    return make_entry(lf(c2.re(0), opts), tag("Corollary 1.1", opts));
  if (lambda_equal(c1, c2))
    return make_entry(ratio(lf(c1.re(0), opts), lf(c2.re(0), opts)),
                      tag("Corollary 1.2", opts));
  auto [h1, h2] = product_exponents(c1, c2);
  auto f = IE::mul2(IE::pow(IE::abs(lf(c1.re(0), opts)), h1),
                    IE::pow(IE::abs(lf(c2.re(0), opts)), h2));
  return make_entry(std::move(f), tag("Theorem 1.1", opts));
}

std::vector<BasisEntry> complex_autonomous_integrals(
    const std::vector<EigenChain>& chains, const CtorOptions& opts) {
  if (chains.empty() || chains.size() > 2)
    throw ConstructionError("expected one or two chains");
  const EigenChain& a = chains[0];
  if (chains.size() == 1) {
    if (a.lambda.imag() == 0.0)
      throw ConstructionError("Theorem 1.2 needs an imaginary eigenvalue");
    auto p = square_sum(lf(a.re(0), opts), lf(a.im(0), opts));
    double ls = a.lambda.real(), lt = a.lambda.imag();
    IE::Ptr f = p;
    if (ls != 0.0) {
      auto phi = IE::arctan(lf(a.im(0), opts), lf(a.re(0), opts));
      f = IE::mul2(p, IE::exp(IE::scale(-2.0 * ls / lt, phi)));
    }
    return {make_entry(std::move(f), tag("Theorem 1.2", opts))};
  }
  const EigenChain& b = chains[1];
  if (a.lambda.imag() != 0.0 && b.is_real()) {
    double l2 = b.lambda.real();
    if (l2 == 0.0)
      throw ConstructionError("Theorem 1.3 needs a nonzero real eigenvalue");
    auto phi = IE::arctan(lf(a.im(0), opts), lf(a.re(0), opts));
    auto f = IE::mul2(lf(b.re(0), opts),
                      IE::exp(IE::scale(-l2 / a.lambda.imag(), phi)));
    return {make_entry(std::move(f), tag("Theorem 1.3", opts))};
  }
  if (a.lambda.imag() == 0.0 || b.lambda.imag() == 0.0)
    throw ConstructionError("Theorem 1.4 needs two imaginary eigenvalues");
  if (std::abs(a.lambda - std::conj(b.lambda)) <=
      1e-9 * (1.0 + std::abs(a.lambda)))
    throw ConstructionError(
        "conjugate eigenvalue pair carries no second integral (Theorem 1.4)");
  auto f = IE::sub(
      IE::scale(a.lambda.imag(), IE::arctan(lf(b.im(0), opts), lf(b.re(0), opts))),
      IE::scale(b.lambda.imag(), IE::arctan(lf(a.im(0), opts), lf(a.re(0), opts))));
  return {make_entry(std::move(f), tag("Theorem 1.4", opts))};
}

std::vector<BasisEntry> chain_autonomous_integrals(const EigenChain& primary,
                                                   const EigenChain* other,
                                                   const CtorOptions& opts) {
  if (primary.multiplicity() < 2)
    throw ConstructionError("chain constructions need multiplicity >= 2");
  std::vector<BasisEntry> out;
  bool primary_real = primary.is_real();

  if (primary_real && other && other->multiplicity() >= 2 &&
      other->is_real()) {
    // Theorem 1.7: difference of the two chain ratios.
    auto f = IE::sub(ratio(lf(primary.re(1), opts), lf(primary.re(0), opts)),
                     ratio(lf(other->re(1), opts), lf(other->re(0), opts)));
    out.push_back(make_entry(std::move(f), tag("Theorem 1.7", opts)));
    return out;
  }

  if (primary_real) {
    double l = primary.lambda.real();
    if (l != 0.0) {
      // Theorem 1.5.
      auto r = ratio(lf(primary.re(1), opts), lf(primary.re(0), opts));
      auto f = IE::mul2(lf(primary.re(0), opts), IE::exp(IE::scale(-l, r)));
      out.push_back(make_entry(std::move(f), tag("Theorem 1.5", opts)));
      return out;
    }
    if (!other)
      throw ConstructionError(
          "a zero-eigenvalue chain needs a second eigenvector (Theorem 1.6)");
    auto r = ratio(lf(primary.re(1), opts), lf(primary.re(0), opts));
    if (other->is_real()) {
      // Theorem 1.6.
      double l2 = other->lambda.real();
      auto f = IE::mul2(lf(other->re(0), opts), IE::exp(IE::scale(-l2, r)));
      out.push_back(make_entry(std::move(f), tag("Theorem 1.6", opts)));
      return out;
    }
    // Corollary 1.4: complex companion eigenvector.
    double ls = other->lambda.real(), lt = other->lambda.imag();
    auto p2 = square_sum(lf(other->re(0), opts), lf(other->im(0), opts));
    out.push_back(make_entry(
        IE::mul2(p2, IE::exp(IE::scale(-2.0 * ls, r))),
        tag("Corollary 1.4", opts)));
    out.push_back(make_entry(
        IE::sub(IE::arctan(lf(other->im(0), opts), lf(other->re(0), opts)),
                IE::scale(lt, r)),
        tag("Corollary 1.4", opts)));
    return out;
  }

  // Corollary 1.3: complex chain of multiplicity >= 2.
  double ls = primary.lambda.real(), lt = primary.lambda.imag();
  auto re0 = lf(primary.re(0), opts);
  auto im0 = lf(primary.im(0), opts);
  auto re1 = lf(primary.re(1), opts);
  auto im1 = lf(primary.im(1), opts);
  auto p0 = square_sum(re0, im0);
  auto alpha = IE::add2(IE::mul2(re0, re1), IE::mul2(im0, im1));
  auto beta = IE::sub(IE::mul2(re0, im1), IE::mul2(im0, re1));
  auto inv_p0 = IE::pow(p0, Exponent::integer(-1));
  out.push_back(make_entry(
      IE::mul2(p0, IE::exp(IE::scale(
                       -2.0, IE::mul2(IE::add2(IE::scale(ls, alpha),
                                               IE::scale(-lt, beta)),
                                      inv_p0)))),
      tag("Corollary 1.3", opts)));
  out.push_back(make_entry(
      IE::sub(IE::arctan(im0, re0),
              IE::mul2(IE::add2(IE::scale(lt, alpha), IE::scale(ls, beta)),
                       inv_p0)),
      tag("Corollary 1.3", opts)));
  return out;
}

std::vector<BasisEntry> psi_evaluators(const EigenChain& chain,
                                       const CtorOptions& opts) {
  std::size_t m = chain.multiplicity();
  if (m < 3)
    throw ConstructionError(
        "Theorem 1.8 yields new integrals only for multiplicity >= 3");
  auto data = psi_chain_of(chain, opts);
  bool complex_chain = !chain.is_real();
  std::vector<BasisEntry> out;
  for (std::size_t zeta = 2; zeta <= m - 1; ++zeta) {
    out.push_back(make_entry(IE::psi(data, zeta, false),
                             tag("Theorem 1.8", opts)));
    if (complex_chain)
      out.push_back(make_entry(IE::psi(data, zeta, true),
                               tag("Theorem 1.8", opts)));
  }
  return out;
}

std::vector<BasisEntry> time_anchored_integral(const EigenChain& chain,
                                               const CtorOptions& opts) {
  std::vector<BasisEntry> out;
  if (chain.multiplicity() == 1) {
    if (chain.is_real()) {
      auto f = IE::mul2(lf(chain.re(0), opts),
                        IE::lift(exp_time(-chain.lambda.real(), opts)));
      out.push_back(make_entry(std::move(f), tag("Theorem 1.9", opts)));
      return out;
    }
    double ls = chain.lambda.real(), lt = chain.lambda.imag();
    auto p = square_sum(lf(chain.re(0), opts), lf(chain.im(0), opts));
    out.push_back(make_entry(
        IE::mul2(p, IE::lift(exp_time(-2.0 * ls, opts))),
        tag("Corollary 1.5", opts)));
    out.push_back(make_entry(
        IE::sub(IE::arctan(lf(chain.im(0), opts), lf(chain.re(0), opts)),
                IE::scale(lt, IE::lift(time_factor(opts)))),
        tag("Corollary 1.5", opts)));
    return out;
  }
  if (chain.is_real()) {
    auto f = IE::sub(ratio(lf(chain.re(1), opts), lf(chain.re(0), opts)),
                     IE::lift(time_factor(opts)));
    out.push_back(make_entry(std::move(f), tag("Theorem 1.10", opts)));
    return out;
  }
  // Complex chain: the real/imag split of nu^1 g x / nu^0 g x - t.
  auto re0 = lf(chain.re(0), opts);
  auto im0 = lf(chain.im(0), opts);
  auto re1 = lf(chain.re(1), opts);
  auto im1 = lf(chain.im(1), opts);
  auto p0 = square_sum(re0, im0);
  auto inv_p0 = IE::pow(p0, Exponent::integer(-1));
  auto alpha = IE::add2(IE::mul2(re0, re1), IE::mul2(im0, im1));
  auto beta = IE::sub(IE::mul2(re0, im1), IE::mul2(im0, re1));
  out.push_back(make_entry(
      IE::sub(IE::mul2(alpha, inv_p0), IE::lift(time_factor(opts))),
      tag("Theorem 1.10", opts)));
  out.push_back(make_entry(IE::mul2(beta, inv_p0), tag("Theorem 1.10", opts)));
  return out;
}

std::vector<BasisEntry> forced_integral(const EigenChain& chain,
                                        const SystemSpec& spec,
                                        const CtorOptions& opts) {
  if (chain.multiplicity() != 1)
    throw ConstructionError("Theorem 1.11 applies to simple chains");
  std::vector<BasisEntry> out;
  if (chain.is_real()) {
    double l = chain.lambda.real();
    auto integrand = ScalarExpr::mul(forcing_dot(chain.re(0), spec, opts),
                                     exp_time(-l, opts));
    auto f = IE::sub(
        IE::mul2(lf(chain.re(0), opts), IE::lift(exp_time(-l, opts))),
        IE::quadrature(IE::lift(integrand), opts.t0));
    out.push_back(make_entry(std::move(f), tag("Theorem 1.11", opts)));
    return out;
  }
  // Corollary 1.6: the two real integrals built from alpha_1, alpha_2.
  double ls = chain.lambda.real(), lt = chain.lambda.imag();
  auto cos_l = trig_time(ScalarExpr::Func::Cos, lt, opts);
  auto sin_l = trig_time(ScalarExpr::Func::Sin, lt, opts);
  auto decay = exp_time(-ls, opts);
  auto re_dot = forcing_dot(chain.re(0), spec, opts);
  auto im_dot = forcing_dot(chain.im(0), spec, opts);
  for (int theta = 1; theta <= 2; ++theta) {
    // theta=1: (re x cos + im x sin) e^{-ls t};  theta=2: (im x cos - re x sin).
    auto a = theta == 1 ? chain.re(0) : chain.im(0);
    auto b = theta == 1 ? chain.im(0) : chain.re(0);
    double sgn = theta == 1 ? 1.0 : -1.0;
    auto alpha_x = IE::mul2(
        IE::add2(IE::mul2(lf(a, opts), IE::lift(cos_l)),
                 IE::scale(sgn, IE::mul2(lf(b, opts), IE::lift(sin_l)))),
        IE::lift(decay));
    auto a_dot = theta == 1 ? re_dot : im_dot;
    auto b_dot = theta == 1 ? im_dot : re_dot;
    auto alpha_f = ScalarExpr::mul(
        ScalarExpr::add(ScalarExpr::mul(a_dot, cos_l),
                        ScalarExpr::mul(ScalarExpr::constant(sgn),
                                        ScalarExpr::mul(b_dot, sin_l))),
        decay);
    out.push_back(make_entry(
        IE::sub(alpha_x, IE::quadrature(IE::lift(alpha_f), opts.t0)),
        tag("Corollary 1.6", opts)));
  }
  return out;
}

std::vector<BasisEntry> forced_chain_integrals(const EigenChain& chain,
                                               const SystemSpec& spec,
                                               const CtorOptions& opts) {
  std::size_t m = chain.multiplicity();
  if (m < 2)
    throw ConstructionError("Theorem 1.12 applies to chains of length >= 2");
  // ds/dt for the inner C_k recursion terms (1 in plain time, 1/t in log).
  ScalarExpr::Ptr sprime =
      opts.log_time
          ? ScalarExpr::div(ScalarExpr::constant(1.0), ScalarExpr::time_var())
          : nullptr;
  auto wrap_rate = [&](IE::Ptr inner) {
    return sprime ? IE::mul2(std::move(inner), IE::lift(sprime))
                  : std::move(inner);
  };
  auto time_pow = [&](std::size_t k) {
    return IE::pow(IE::lift(time_factor(opts)),
                   Exponent::integer(static_cast<long long>(k)));
  };
  auto binom_d = [](std::size_t nn, std::size_t kk) {
    double r = 1.0;
    for (std::size_t i = 1; i <= kk; ++i) r = r * double(nn - kk + i) / double(i);
    return std::round(r);
  };

  std::vector<BasisEntry> out;
  if (chain.is_real()) {
    double l = chain.lambda.real();
    auto decay = exp_time(-l, opts);
    std::vector<IE::Ptr> c_funcs;  // C_0 .. C_{m-1}
    std::vector<IE::Ptr> integrals;
    for (std::size_t k = 0; k < m; ++k) {
      auto fk = ScalarExpr::mul(forcing_dot(chain.re(k), spec, opts), decay);
      IE::Ptr inner = IE::lift(fk);
      if (k > 0)
        inner = IE::add2(inner,
                         IE::scale(double(k), wrap_rate(c_funcs[k - 1])));
      c_funcs.push_back(IE::quadrature(inner, opts.t0));
      IE::Ptr f = IE::mul2(lf(chain.re(k), opts), IE::lift(decay));
      std::vector<IE::Ptr> terms{f};
      for (std::size_t tau = 0; tau < k; ++tau)
        terms.push_back(IE::scale(-binom_d(k, tau),
                                  IE::mul2(time_pow(k - tau), integrals[tau])));
      terms.push_back(IE::scale(-1.0, c_funcs[k]));
      integrals.push_back(IE::add(std::move(terms)));
      out.push_back(make_entry(integrals.back(),
                               k == 0 ? tag("Theorem 1.11", opts)
                                      : tag("Theorem 1.12", opts)));
    }
    return out;
  }

  // Corollary 1.7: real/imaginary split with the alpha_{theta k} forms.
  double ls = chain.lambda.real(), lt = chain.lambda.imag();
  auto cos_l = trig_time(ScalarExpr::Func::Cos, lt, opts);
  auto sin_l = trig_time(ScalarExpr::Func::Sin, lt, opts);
  auto decay = exp_time(-ls, opts);
  for (int theta = 1; theta <= 2; ++theta) {
    double sgn = theta == 1 ? 1.0 : -1.0;
    std::vector<IE::Ptr> c_funcs, integrals;
    for (std::size_t k = 0; k < m; ++k) {
      auto a = theta == 1 ? chain.re(k) : chain.im(k);
      auto b = theta == 1 ? chain.im(k) : chain.re(k);
      auto alpha_x = IE::mul2(
          IE::add2(IE::mul2(lf(a, opts), IE::lift(cos_l)),
                   IE::scale(sgn, IE::mul2(lf(b, opts), IE::lift(sin_l)))),
          IE::lift(decay));
      auto alpha_f = ScalarExpr::mul(
          ScalarExpr::add(
              ScalarExpr::mul(forcing_dot(a, spec, opts), cos_l),
              ScalarExpr::mul(ScalarExpr::constant(sgn),
                              ScalarExpr::mul(forcing_dot(b, spec, opts),
                                              sin_l))),
          decay);
      IE::Ptr inner = IE::lift(alpha_f);
      if (k > 0)
        inner = IE::add2(inner,
                         IE::scale(double(k), wrap_rate(c_funcs[k - 1])));
      c_funcs.push_back(IE::quadrature(inner, opts.t0));
      std::vector<IE::Ptr> terms{alpha_x};
      for (std::size_t tau = 0; tau < k; ++tau)
        terms.push_back(IE::scale(-binom_d(k, tau),
                                  IE::mul2(time_pow(k - tau), integrals[tau])));
      terms.push_back(IE::scale(-1.0, c_funcs[k]));
      integrals.push_back(IE::add(std::move(terms)));
      out.push_back(make_entry(integrals.back(),
                               k == 0 ? tag("Corollary 1.6", opts)
                                      : tag("Corollary 1.7", opts)));
    }
  }
  return out;
}

namespace {

// Greedy rank-growing selection at sampled generic points.
class GreedySelector {
 public:
  GreedySelector(const SystemSpec& spec, std::size_t target)
      : spec_(spec), target_(target) {}

  bool try_add(const BasisEntry& candidate) {
    if (selected_.size() >= target_) return false;
    std::vector<IntegralExpr::Ptr> fs;
    for (const auto& e : selected_) fs.push_back(e.integral);
    fs.push_back(candidate.integral);
    std::size_t best = 0;
    for (std::uint64_t probe = 0; probe < 4; ++probe) {
      try {
        EvalPoint p{spec_.anchor(),
                    sample_initial_state(spec_, fs, 1000 + probe)};
        best = std::max(best, independence_rank(fs, p));
      } catch (const DomainError&) {
        continue;
      } catch (const ConstructionError&) {
        continue;
      } catch (const ConvergenceError&) {
        continue;
      }
      if (best == fs.size()) break;
    }
    if (best == fs.size()) {
      selected_.push_back(candidate);
      return true;
    }
    return false;
  }

  // Pre-populates already-vetted entries without re-checking them.
  void seed(std::vector<BasisEntry> base) { selected_ = std::move(base); }

  bool done() const { return selected_.size() >= target_; }
  std::vector<BasisEntry> take() { return std::move(selected_); }

 private:
  const SystemSpec& spec_;
  std::size_t target_;
  std::vector<BasisEntry> selected_;
};

std::vector<BasisEntry> autonomous_candidates(const SpectralData& sd,
                                              const CtorOptions& opts) {
  std::vector<BasisEntry> cands;
  std::vector<const EigenChain*> real_chains, complex_chains;
  for (const auto& c : sd.chains) {
    if (c.is_real())
      real_chains.push_back(&c);
    else if (c.lambda.imag() > 0.0)
      complex_chains.push_back(&c);
  }
  auto guarded = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConstructionError&) {
    }
  };

  // 1. Kernel integrals (Corollary 1.1).
  for (const auto* c : real_chains)
    if (lambda_is_zero(*c))
      cands.push_back(make_entry(lf(c->re(0), opts), tag("Corollary 1.1", opts)));

  // 2. Ratios inside one eigenvalue (Corollary 1.2).
  for (std::size_t i = 0; i < real_chains.size(); ++i)
    for (std::size_t j = i + 1; j < real_chains.size(); ++j) {
      if (!lambda_equal(*real_chains[i], *real_chains[j]) ||
          lambda_is_zero(*real_chains[i]))
        continue;
      cands.push_back(make_entry(
          ratio(lf(real_chains[i]->re(0), opts), lf(real_chains[j]->re(0), opts)),
          tag("Corollary 1.2", opts)));
    }

  // 3. Chain constructions (Theorems 1.5-1.8, Corollaries 1.3-1.4).
  for (const auto* c : real_chains) {
    if (c->multiplicity() < 2) continue;
    if (!lambda_is_zero(*c)) {
      guarded([&] {
        for (auto& e : chain_autonomous_integrals(*c, nullptr, opts))
          cands.push_back(std::move(e));
      });
    } else {
      const EigenChain* other = nullptr;
      for (const auto* r : real_chains)
        if (!lambda_is_zero(*r)) {
          other = r;
          break;
        }
      if (other) {
        guarded([&] {
          for (auto& e : chain_autonomous_integrals(*c, other, opts))
            cands.push_back(std::move(e));
        });
      } else if (!complex_chains.empty()) {
        guarded([&] {
          for (auto& e : chain_autonomous_integrals(*c, complex_chains[0], opts))
            cands.push_back(std::move(e));
        });
      }
    }
  }
  for (const auto* c : complex_chains)
    if (c->multiplicity() >= 2)
      guarded([&] {
        for (auto& e : chain_autonomous_integrals(*c, nullptr, opts))
          cands.push_back(std::move(e));
      });
  for (const auto* c : real_chains)
    if (c->multiplicity() >= 3)
      guarded([&] {
        for (auto& e : psi_evaluators(*c, opts)) cands.push_back(std::move(e));
      });
  for (const auto* c : complex_chains)
    if (c->multiplicity() >= 3)
      guarded([&] {
        for (auto& e : psi_evaluators(*c, opts)) cands.push_back(std::move(e));
      });
  for (std::size_t i = 0; i < real_chains.size(); ++i)
    for (std::size_t j = i + 1; j < real_chains.size(); ++j)
      if (real_chains[i]->multiplicity() >= 2 &&
          real_chains[j]->multiplicity() >= 2)
        guarded([&] {
          for (auto& e :
               chain_autonomous_integrals(*real_chains[i], real_chains[j], opts))
            cands.push_back(std::move(e));
        });

  // 4. Cross-eigenvalue weighted products (Theorem 1.1).
  for (std::size_t i = 0; i < real_chains.size(); ++i)
    for (std::size_t j = i + 1; j < real_chains.size(); ++j) {
      if (lambda_is_zero(*real_chains[i]) || lambda_is_zero(*real_chains[j]) ||
          lambda_equal(*real_chains[i], *real_chains[j]))
        continue;
      guarded([&] {
        cands.push_back(
            weighted_product_integral(*real_chains[i], *real_chains[j], opts));
      });
    }

  // 5. Complex forms (Theorems 1.2-1.4).
  for (const auto* c : complex_chains)
    guarded([&] {
      for (auto& e : complex_autonomous_integrals({*c}, opts))
        cands.push_back(std::move(e));
    });
  for (const auto* c : complex_chains)
    for (const auto* r : real_chains) {
      if (lambda_is_zero(*r)) continue;
      guarded([&] {
        for (auto& e : complex_autonomous_integrals({*c, *r}, opts))
          cands.push_back(std::move(e));
      });
    }
  for (std::size_t i = 0; i < complex_chains.size(); ++i)
    for (std::size_t j = i + 1; j < complex_chains.size(); ++j)
      guarded([&] {
        for (auto& e : complex_autonomous_integrals(
                 {*complex_chains[i], *complex_chains[j]}, opts))
          cands.push_back(std::move(e));
      });
  return cands;
}

}  // namespace

BasisResult assemble_basis(const SystemSpec& spec, const SpectralData& sd,
                           BasisMode mode, const CtorOptions& opts) {
  std::size_t n = sd.dimension;
  BasisResult result;
  result.mode = mode;

  if (mode == BasisMode::Forced) {
    std::vector<BasisEntry> entries;
    for (const auto& chain : sd.chains) {
      if (chain.lambda.imag() < 0.0) continue;  // mirror of a conjugate chain
      auto built = chain.multiplicity() == 1
                       ? forced_integral(chain, spec, opts)
                       : forced_chain_integrals(chain, spec, opts);
      for (auto& e : built) entries.push_back(std::move(e));
    }
    if (entries.size() != n)
      throw ConstructionError("forced basis has " +
                              std::to_string(entries.size()) +
                              " integrals, expected " + std::to_string(n));
    std::vector<IntegralExpr::Ptr> fs;
    for (const auto& e : entries) fs.push_back(e.integral);
    std::size_t rank = 0;
    for (std::uint64_t probe = 0; probe < 4 && rank < n; ++probe) {
      try {
        EvalPoint p{spec.anchor(), sample_initial_state(spec, fs, 1000 + probe)};
        rank = std::max(rank, independence_rank(fs, p));
      } catch (const std::runtime_error&) {
      }
    }
    if (rank != n)
      throw ConstructionError("forced basis rank " + std::to_string(rank) +
                              " below dimension " + std::to_string(n));
    result.entries = std::move(entries);
    return result;
  }

  std::size_t autonomous_target = n > 0 ? n - 1 : 0;
  GreedySelector selector(spec, autonomous_target);
  for (const auto& cand : autonomous_candidates(sd, opts)) {
    if (selector.done()) break;
    selector.try_add(cand);
  }
  std::vector<BasisEntry> selected = selector.take();
  if (selected.size() < autonomous_target)
    throw ConstructionError(
        "only " + std::to_string(selected.size()) +
        " independent autonomous integrals found, expected " +
        std::to_string(autonomous_target));

  if (mode == BasisMode::Full) {
    GreedySelector full(spec, n);
    full.seed(std::move(selected));
    for (const auto& chain : sd.chains) {
      if (full.done()) break;
      if (chain.lambda.imag() < 0.0) continue;
      try {
        for (auto& e : time_anchored_integral(chain, opts))
          if (full.try_add(e)) break;
      } catch (const ConstructionError&) {
      }
    }
    selected = full.take();
    if (selected.size() != n)
      throw ConstructionError("full basis has " +
                              std::to_string(selected.size()) +
                              " integrals, expected " + std::to_string(n));
  }
  result.entries = std::move(selected);
  return result;
}

BasisResult autonomous_basis(const SystemSpec& spec, BasisMode mode) {
  if (!spec.is_constant())
    throw ConstructionError("constant-coefficient constructors need a "
                            "constant system");
  if (mode == BasisMode::Forced && !spec.has_forcing())
    throw ConstructionError("forced mode needs a forcing term");
  SpectralData sd = spectrum_of_transpose(spec.constant_a());
  CtorOptions opts;
  opts.t0 = spec.anchor();
  return assemble_basis(spec, sd, mode, opts);
}

}  // namespace fint
