#include "fint/timevarying.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fint/errors.hpp"
#include "fint/numerics.hpp"
#include "fint/reducible.hpp"

namespace fint {

namespace {

using IE = IntegralExpr;

std::vector<RealMat> term_transposes(const SystemSpec& spec) {
  std::vector<RealMat> bs;
  for (const auto& term : spec.terms) {
    RealMat b(spec.n, std::vector<double>(spec.n, 0.0));
    for (std::size_t i = 0; i < spec.n; ++i)
      for (std::size_t j = 0; j < spec.n; ++j) b[j][i] = term.a[i][j];
    bs.push_back(std::move(b));
  }
  return bs;
}

bool terms_commute(const SystemSpec& spec, double tol) {
  for (std::size_t p = 0; p < spec.terms.size(); ++p)
    for (std::size_t q = p + 1; q < spec.terms.size(); ++q) {
      const auto& a = spec.terms[p].a;
      const auto& b = spec.terms[q].a;
      double err = 0.0, scale = 1.0;
      for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t j = 0; j < spec.n; ++j) {
          double ab = 0.0, ba = 0.0;
          for (std::size_t k = 0; k < spec.n; ++k) {
            ab += a[i][k] * b[k][j];
            ba += b[i][k] * a[k][j];
          }
          err = std::fmax(err, std::fabs(ab - ba));
          scale = std::fmax(scale, std::fabs(ab));
        }
      if (err > tol * scale) return false;
    }
  return true;
}

bool terms_upper_triangular(const SystemSpec& spec) {
  for (const auto& term : spec.terms)
    for (std::size_t i = 0; i < spec.n; ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (term.a[i][j] != 0.0) return false;
  return true;
}

// Gram matrix of the alpha samples; a near-singular Gram means the
// alpha_j are (numerically) linearly dependent on the window.
std::optional<std::string> alpha_dependence_warning(const SystemSpec& spec) {
  std::size_t m = spec.terms.size();
  if (m < 2) return std::nullopt;
  constexpr int kSamples = 64;
  std::vector<std::vector<double>> gram(m, std::vector<double>(m, 0.0));
  for (int s = 0; s <= kSamples; ++s) {
    double t = spec.t_lo + (spec.t_hi - spec.t_lo) * s / kSamples;
    std::vector<double> vals(m);
    for (std::size_t j = 0; j < m; ++j) vals[j] = spec.terms[j].alpha->eval(t);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) gram[j][k] += vals[j] * vals[k];
  }
  CMat g = complex_from_real(gram);
  if (float_rank(g, 1e-10) < m)
    return "coefficient functions look linearly dependent on the window "
           "(near-singular Gram matrix)";
  return std::nullopt;
}

// Conjugate-pair dedupe: keeps real eigenvectors and one representative
// of every complex conjugate pair.
std::vector<CommonEigenvector> canonical_eigenvectors(
    const CommonSpectrum& cs) {
  std::vector<CommonEigenvector> out;
  for (const auto& ev : cs.eigenvectors) {
    bool mirrored = false;
    for (const auto& kept : out) {
      if (kept.nu.size() != ev.nu.size()) continue;
      double err = 0.0;
      for (std::size_t i = 0; i < ev.nu.size(); ++i)
        err = std::fmax(err, std::abs(std::conj(kept.nu[i]) - ev.nu[i]));
      double lam_err = 0.0;
      for (std::size_t j = 0; j < ev.lambdas.size(); ++j)
        lam_err = std::fmax(
            lam_err, std::abs(std::conj(kept.lambdas[j]) - ev.lambdas[j]));
      if (err < 1e-7 && lam_err < 1e-7) {
        mirrored = true;
        break;
      }
    }
    if (!mirrored) out.push_back(ev);
  }
  return out;
}

std::vector<double> vec_re(const CVec& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

std::vector<double> vec_im(const CVec& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].imag();
  return out;
}

bool ev_is_real(const CommonEigenvector& ev) {
  for (const auto& z : ev.nu)
    if (std::fabs(z.imag()) > 1e-12) return false;
  for (const auto& l : ev.lambdas)
    if (std::fabs(l.imag()) > 1e-12) return false;
  return true;
}

// lambda(t) = sum_j lambda^j alpha_j(t), split into real and imag parts.
struct EigenFunction {
  ScalarExpr::Ptr re, im;
};

EigenFunction eigenfunction_expr(const std::vector<Complex>& lambdas,
                                 const SystemSpec& spec) {
  std::vector<double> wr, wi;
  std::vector<ScalarExpr::Ptr> ar, ai;
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    if (lambdas[j].real() != 0.0) {
      wr.push_back(lambdas[j].real());
      ar.push_back(spec.terms[j].alpha);
    }
    if (lambdas[j].imag() != 0.0) {
      wi.push_back(lambdas[j].imag());
      ai.push_back(spec.terms[j].alpha);
    }
  }
  return {scalar_linear_combo(wr, ar), scalar_linear_combo(wi, ai)};
}

ScalarExpr::Ptr forcing_dot_plain(const std::vector<double>& nu,
                                  const SystemSpec& spec) {
  std::vector<double> w(nu);
  std::vector<ScalarExpr::Ptr> fs(spec.forcing);
  w.resize(spec.n, 0.0);
  fs.resize(spec.n, ScalarExpr::constant(0.0));
  return scalar_linear_combo(w, fs);
}

bool scalar_is_zero(const ScalarExpr::Ptr& e) {
  return e->kind() == ScalarExpr::Kind::Constant && e->constant_value() == 0.0;
}

// Theorems 2.1-2.3 / 2.5-2.6 / 2.12-2.13 share one shape: an eigenvector
// whose eigenfunction is an explicit scalar expression in t.
std::vector<BasisEntry> eigenfunction_integrals(
    const CommonEigenvector& ev, const EigenFunction& lambda,
    const SystemSpec& spec, double t0, const char* homog_tag,
    const char* complex_homog_tag, const char* forced_tag,
    const char* complex_forced_tag) {
  std::vector<BasisEntry> out;
  bool forced = spec.has_forcing();
  if (ev_is_real(ev)) {
    IE::Ptr q = IE::quadrature(IE::lift(lambda.re), t0);
    IE::Ptr phi = IE::exp(IE::scale(-1.0, q));
    IE::Ptr f = IE::mul2(IE::lin_form(vec_re(ev.nu)), phi);
    if (forced) {
      auto integrand = IE::mul2(IE::lift(forcing_dot_plain(vec_re(ev.nu), spec)),
                                phi);
      f = IE::sub(f, IE::quadrature(integrand, t0));
    }
    out.push_back(make_entry(std::move(f), forced ? forced_tag : homog_tag));
    return out;
  }
  auto re_form = IE::lin_form(vec_re(ev.nu));
  auto im_form = IE::lin_form(vec_im(ev.nu));
  IE::Ptr q_re = IE::quadrature(IE::lift(lambda.re), t0);
  IE::Ptr q_im = IE::quadrature(IE::lift(lambda.im), t0);
  if (!forced) {
    auto p = IE::add2(IE::pow(re_form, Exponent::integer(2)),
                      IE::pow(im_form, Exponent::integer(2)));
    out.push_back(make_entry(IE::mul2(p, IE::exp(IE::scale(-2.0, q_re))),
                             complex_homog_tag));
    out.push_back(make_entry(IE::sub(IE::arctan(im_form, re_form), q_im),
                             complex_homog_tag));
    return out;
  }
  auto decay = IE::exp(IE::scale(-1.0, q_re));
  auto cos_q = IE::cos(q_im);
  auto sin_q = IE::sin(q_im);
  auto re_dot = IE::lift(forcing_dot_plain(vec_re(ev.nu), spec));
  auto im_dot = IE::lift(forcing_dot_plain(vec_im(ev.nu), spec));
  for (int rho = 1; rho <= 2; ++rho) {
    auto a_form = rho == 1 ? re_form : im_form;
    auto b_form = rho == 1 ? im_form : re_form;
    auto a_dot = rho == 1 ? re_dot : im_dot;
    auto b_dot = rho == 1 ? im_dot : re_dot;
    double sgn = rho == 1 ? 1.0 : -1.0;
    auto gamma_x = IE::mul2(
        IE::add2(IE::mul2(a_form, cos_q),
                 IE::scale(sgn, IE::mul2(b_form, sin_q))),
        decay);
    auto gamma_f = IE::mul2(
        IE::add2(IE::mul2(a_dot, cos_q), IE::scale(sgn, IE::mul2(b_dot, sin_q))),
        decay);
    out.push_back(make_entry(
        IE::sub(gamma_x, IE::quadrature(gamma_f, t0)), complex_forced_tag));
  }
  return out;
}

double binom_d(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return std::round(r);
}

// ----- complex expression pairs for the complex chain recursions ---------

struct CExpr {
  IE::Ptr re, im;
};

CExpr cadd(const CExpr& a, const CExpr& b) {
  return {IE::add2(a.re, b.re), IE::add2(a.im, b.im)};
}
CExpr csub(const CExpr& a, const CExpr& b) {
  return {IE::sub(a.re, b.re), IE::sub(a.im, b.im)};
}
CExpr cmul(const CExpr& a, const CExpr& b) {
  return {IE::sub(IE::mul2(a.re, b.re), IE::mul2(a.im, b.im)),
          IE::add2(IE::mul2(a.re, b.im), IE::mul2(a.im, b.re))};
}
CExpr cscale(double c, const CExpr& a) {
  return {IE::scale(c, a.re), IE::scale(c, a.im)};
}
CExpr cquad(const CExpr& a, double t0) {
  return {IE::quadrature(a.re, t0), IE::quadrature(a.im, t0)};
}

}  // namespace

SystemClass classify_system(const SystemSpec& spec, double tol,
                            std::string* evidence) {
  auto record = [&](const std::string& why) {
    if (evidence) *evidence = why;
  };
  auto check = [&](SystemClass c) -> bool {
    switch (c) {
      case SystemClass::Constant:
        if (spec.is_constant()) {
          record("single term with alpha identically 1");
          return true;
        }
        return false;
      case SystemClass::Reducible: {
        if (!spec.reduction) return false;
        ReductionReport rep = check_reduction(spec, tol);
        if (rep.max_residual < tol && rep.min_abs_det > tol) {
          record("reduction residual " + format_double(rep.max_residual) +
                 " on " + std::to_string(rep.grid_points) + "-point grid");
          return true;
        }
        return false;
      }
      case SystemClass::Triangular:
        if (terms_upper_triangular(spec)) {
          record("coefficient matrix is upper triangular");
          return true;
        }
        return false;
      case SystemClass::LappoDanilevskii:
        if (spec.terms.size() >= 1 && terms_commute(spec, tol) &&
            !spec.is_constant()) {
          record("pairwise commuting coefficient family");
          return true;
        }
        return false;
      case SystemClass::AlgebraicReducible: {
        try {
          auto cs = common_spectrum(term_transposes(spec), tol,
                                    /*require_commuting=*/false);
          record(std::to_string(cs.eigenvectors.size()) +
                 " constant eigenvectors found");
          return !cs.eigenvectors.empty();
        } catch (const ConstructionError&) {
          return false;
        }
      }
    }
    return false;
  };
  if (spec.class_hint) {
    if (!check(*spec.class_hint))
      throw ConstructionError("class_hint '" +
                              system_class_name(*spec.class_hint) +
                              "' does not match the system");
    return *spec.class_hint;
  }
  for (SystemClass c :
       {SystemClass::Constant, SystemClass::Reducible, SystemClass::Triangular,
        SystemClass::LappoDanilevskii, SystemClass::AlgebraicReducible})
    if (check(c)) return c;
  throw ConstructionError(
      "no constructor family matches this system (not constant, reducible, "
      "triangular, Lappo-Danilevskii, or algebraic reducible)");
}

BasisResult algebraic_reducible_integrals(const SystemSpec& spec, double tol) {
  auto cs = common_spectrum(term_transposes(spec), tol,
                            /*require_commuting=*/false);
  auto evs = canonical_eigenvectors(cs);
  BasisResult result;
  result.mode = BasisMode::Full;
  if (auto warn = alpha_dependence_warning(spec)) result.warnings.push_back(*warn);
  double t0 = spec.anchor();
  std::size_t count = 0;
  for (const auto& ev : evs) count += ev_is_real(ev) ? 1 : 2;
  if (count < spec.n)
    throw ConstructionError(
        "eigenvector deficiency: " + std::to_string(count) +
        " independent constant eigenvectors, need " + std::to_string(spec.n));
  for (const auto& ev : evs) {
    EigenFunction lambda = eigenfunction_expr(ev.lambdas, spec);
    for (auto& e : eigenfunction_integrals(ev, lambda, spec, t0,
                                           "Corollary 2.1", "Theorem 2.3",
                                           "Theorem 2.1", "Theorem 2.2"))
      result.entries.push_back(std::move(e));
  }
  return result;
}

BasisResult triangular_integrals(const SystemSpec& spec) {
  if (!terms_upper_triangular(spec))
    throw ConstructionError("coefficient matrix is not upper triangular");
  std::size_t n = spec.n;
  double t0 = spec.anchor();
  bool forced = spec.has_forcing();

  // Diagonal exponentials phi_tau = exp(-I a_tt), psi_tau = exp(+I a_tt);
  // both share one quadrature node per diagonal entry. 1-based indices.
  std::vector<IE::Ptr> phi(n + 1), psi(n + 1);
  for (std::size_t tau = 1; tau <= n; ++tau) {
    auto a_tt = spec.entry_expr(tau - 1, tau - 1);
    auto q = IE::quadrature(IE::lift(a_tt), t0);
    phi[tau] = IE::exp(IE::scale(-1.0, q));
    psi[tau] = IE::exp(q);
  }

  // A[tau][xi] and B[tau] per the (2.14) recursion.
  std::vector<std::vector<IE::Ptr>> acc(n + 1, std::vector<IE::Ptr>(n + 1));
  auto a_entry = [&](std::size_t i, std::size_t j) {
    return spec.entry_expr(i - 1, j - 1);  // 1-based view
  };
  for (std::size_t tau = 1; tau <= n; ++tau) {
    acc[tau][tau] = IE::constant(1.0);
    for (std::size_t xi = 1; xi < tau; ++xi) {
      std::vector<IE::Ptr> pieces;
      for (std::size_t k = 1; k <= tau - xi; ++k) {
        auto aij = a_entry(n + 1 - tau, n + 1 + k - tau);
        if (scalar_is_zero(aij)) continue;
        pieces.push_back(IE::mul({IE::lift(aij), psi[n + 1 + k - tau],
                                  acc[tau - k][xi]}));
      }
      if (pieces.empty()) {
        acc[tau][xi] = IE::constant(0.0);
        continue;
      }
      auto inner = IE::mul2(IE::add(std::move(pieces)), phi[n + 1 - tau]);
      acc[tau][xi] = IE::quadrature(inner, t0);
    }
  }
  std::vector<IE::Ptr> bfun(n + 1);
  if (forced) {
    for (std::size_t tau = 1; tau <= n; ++tau) {
      std::vector<IE::Ptr> pieces;
      auto f_entry = spec.forcing[n - tau];  // f_{n+1-tau}, 0-based
      if (!scalar_is_zero(f_entry)) pieces.push_back(IE::lift(f_entry));
      for (std::size_t xi = 1; xi < tau; ++xi) {
        auto aij = a_entry(n + 1 - tau, n + 1 - tau + xi);
        if (scalar_is_zero(aij) || !bfun[tau - xi]) continue;
        pieces.push_back(
            IE::mul({IE::lift(aij), psi[n + 1 - tau + xi], bfun[tau - xi]}));
      }
      if (pieces.empty()) {
        bfun[tau] = nullptr;
        continue;
      }
      auto inner = IE::mul2(IE::add(std::move(pieces)), phi[n + 1 - tau]);
      bfun[tau] = IE::quadrature(inner, t0);
    }
  }

  BasisResult result;
  result.mode = BasisMode::Full;
  std::vector<IE::Ptr> integrals(n + 1);
  for (std::size_t tau = 1; tau <= n; ++tau) {
    std::vector<double> coord(n, 0.0);
    coord[n - tau] = 1.0;  // x_{n+1-tau}
    std::vector<IE::Ptr> terms{IE::mul2(IE::lin_form(coord), phi[n + 1 - tau])};
    for (std::size_t xi = 1; xi < tau; ++xi) {
      if (acc[tau][xi]->kind() == IE::Kind::ScalarLift &&
          scalar_is_zero(acc[tau][xi]->scalar()))
        continue;
      terms.push_back(IE::scale(-1.0, IE::mul2(acc[tau][xi], integrals[xi])));
    }
    if (forced && bfun[tau]) terms.push_back(IE::scale(-1.0, bfun[tau]));
    integrals[tau] = IE::add(std::move(terms));
    result.entries.push_back(make_entry(
        integrals[tau], forced ? "Theorem 2.4" : "Corollary 2.2"));
  }
  return result;
}

std::optional<LDChainData> ld_chain_data(const SystemSpec& spec,
                                         const CommonEigenvector& ev,
                                         double tol) {
  auto bs = term_transposes(spec);
  // Designated index: the matrix with the longest chain, ties to the
  // smallest index.
  std::size_t zeta = 0, best_len = 0;
  for (std::size_t j = 0; j < bs.size(); ++j) {
    try {
      SpectralData sd = spectrum_of_transpose(spec.terms[j].a, tol);
      std::size_t longest = 0;
      for (const auto& c : sd.chains)
        longest = std::max(longest, c.multiplicity());
      if (longest > best_len) {
        best_len = longest;
        zeta = j;
      }
    } catch (const std::runtime_error&) {
    }
  }
  LDChainData data;
  data.zeta = zeta;
  data.chain =
      extend_chain_over(bs[zeta], ev.nu, ev.lambdas[zeta], spec.n, tol);
  std::size_t s = data.chain.multiplicity();
  if (s < 2) return std::nullopt;

  // mu constants via the chain identity: B_j nu^theta must decompose as
  // sum_rho binom(theta, rho) mu_rho nu^(theta-rho) with mu_0 = lambda^j.
  std::size_t m = bs.size();
  data.mu.assign(s - 1, std::vector<Complex>(m, Complex(0.0)));
  for (std::size_t j = 0; j < m; ++j) {
    CMat bj = complex_from_real(bs[j]);
    std::vector<Complex> mu_known{ev.lambdas[j]};
    for (std::size_t theta = 1; theta < s; ++theta) {
      CVec resid = mat_vec(bj, data.chain.vectors[theta]);
      for (std::size_t rho = 0; rho < theta; ++rho) {
        double c = binom_d(theta, rho);
        for (std::size_t i = 0; i < resid.size(); ++i)
          resid[i] -= c * mu_known[rho] * data.chain.vectors[theta - rho][i];
      }
      // resid must be parallel to nu^0.
      const CVec& nu0 = data.chain.vectors[0];
      Complex num(0.0), den(0.0);
      for (std::size_t i = 0; i < resid.size(); ++i) {
        num += std::conj(nu0[i]) * resid[i];
        den += std::conj(nu0[i]) * nu0[i];
      }
      Complex mu = num / den;
      double err = 0.0, scale = 1.0;
      for (std::size_t i = 0; i < resid.size(); ++i) {
        err = std::fmax(err, std::abs(resid[i] - mu * nu0[i]));
        scale = std::fmax(scale, std::abs(resid[i]));
      }
      if (err > 1e-6 * scale) return std::nullopt;  // Lemma 2.5 (iii) fails
      if (std::fabs(mu.real()) < 1e-12) mu = Complex(0.0, mu.imag());
      if (std::fabs(mu.imag()) < 1e-12) mu = Complex(mu.real(), 0.0);
      mu_known.push_back(mu);
      data.mu[theta - 1][j] = mu;
    }
  }
  return data;
}

namespace {

// Homogeneous chain integrals of Theorem 2.7 plus the simple Theorem 2.5
// integral of the underlying eigenvector; forced variants per 2.12/2.14.
std::vector<BasisEntry> ld_chain_integrals(const SystemSpec& spec,
                                           const CommonEigenvector& ev,
                                           const LDChainData& data) {
  double t0 = spec.anchor();
  std::size_t s = data.chain.multiplicity();
  bool forced = spec.has_forcing();
  bool complex_chain = !data.chain.is_real() || !ev_is_real(ev);
  EigenFunction lambda = eigenfunction_expr(ev.lambdas, spec);

  // mu_theta(t) = sum_j mu_theta^{j zeta} alpha_j(t), theta = 1..s-1.
  std::vector<EigenFunction> mu_fn;
  for (std::size_t theta = 1; theta < s; ++theta)
    mu_fn.push_back(eigenfunction_expr(data.mu[theta - 1], spec));

  std::vector<BasisEntry> out;
  if (!forced) {
    for (auto& e : eigenfunction_integrals(ev, lambda, spec, t0,
                                           "Theorem 2.5", "Theorem 2.6",
                                           "Theorem 2.12", "Theorem 2.13"))
      out.push_back(std::move(e));
    auto psis = std::make_shared<PsiChainData>();
    psis->vectors = data.chain.vectors;
    for (std::size_t theta = 1; theta < s; ++theta) {
      auto q_re = IE::quadrature(IE::lift(mu_fn[theta - 1].re), t0);
      out.push_back(make_entry(
          IE::sub(IE::psi(psis, theta, false), q_re), "Theorem 2.7"));
      if (complex_chain) {
        auto q_im = IE::quadrature(IE::lift(mu_fn[theta - 1].im), t0);
        out.push_back(make_entry(
            IE::sub(IE::psi(psis, theta, true), q_im), "Theorem 2.7"));
      }
    }
    return out;
  }

  if (!complex_chain) {
    // Real data: the (2.62) recursion with K and C quadratures.
    auto q = IE::quadrature(IE::lift(lambda.re), t0);
    auto phi = IE::exp(IE::scale(-1.0, q));
    std::vector<IE::Ptr> mu_lift;
    for (std::size_t theta = 1; theta < s; ++theta)
      mu_lift.push_back(IE::lift(mu_fn[theta - 1].re));
    // K[theta][rho-1], 0-based over rho-1 = 0..theta-1.
    std::vector<std::vector<IE::Ptr>> kfun(s);
    std::vector<IE::Ptr> cfun(s);
    std::vector<IE::Ptr> integrals(s);
    for (std::size_t theta = 0; theta < s; ++theta) {
      if (theta > 0) {
        kfun[theta].resize(theta);
        for (std::size_t rho = 1; rho <= theta; ++rho) {
          std::vector<IE::Ptr> pieces{
              IE::scale(binom_d(theta, rho - 1), mu_lift[theta - rho])};
          for (std::size_t eta = 1; eta <= theta - rho; ++eta)
            pieces.push_back(IE::scale(binom_d(theta, eta),
                                       IE::mul2(mu_lift[eta - 1],
                                                kfun[theta - eta][rho - 1])));
          kfun[theta][rho - 1] = IE::quadrature(IE::add(std::move(pieces)), t0);
        }
      }
      std::vector<IE::Ptr> cpieces{IE::mul2(
          IE::lift(forcing_dot_plain(vec_re(data.chain.vectors[theta]), spec)),
          phi)};
      for (std::size_t rho = 1; rho <= theta; ++rho)
        cpieces.push_back(IE::scale(binom_d(theta, rho),
                                    IE::mul2(mu_lift[rho - 1],
                                             cfun[theta - rho])));
      cfun[theta] = IE::quadrature(IE::add(std::move(cpieces)), t0);
      std::vector<IE::Ptr> terms{
          IE::mul2(IE::lin_form(vec_re(data.chain.vectors[theta])), phi)};
      for (std::size_t rho = 1; rho <= theta; ++rho)
        terms.push_back(IE::scale(
            -1.0, IE::mul2(kfun[theta][rho - 1], integrals[rho - 1])));
      terms.push_back(IE::scale(-1.0, cfun[theta]));
      integrals[theta] = IE::add(std::move(terms));
      out.push_back(make_entry(integrals[theta],
                               theta == 0 ? "Theorem 2.12" : "Theorem 2.14"));
    }
    return out;
  }

  // Complex data: the same recursion in complex pairs, then Re/Im split.
  auto q_re = IE::quadrature(IE::lift(lambda.re), t0);
  auto q_im = IE::quadrature(IE::lift(lambda.im), t0);
  auto decay = IE::exp(IE::scale(-1.0, q_re));
  CExpr phi{IE::mul2(decay, IE::cos(q_im)),
            IE::scale(-1.0, IE::mul2(decay, IE::sin(q_im)))};
  std::vector<CExpr> mu_lift;
  for (std::size_t theta = 1; theta < s; ++theta)
    mu_lift.push_back(
        CExpr{IE::lift(mu_fn[theta - 1].re), IE::lift(mu_fn[theta - 1].im)});
  std::vector<std::vector<CExpr>> kfun(s);
  std::vector<CExpr> cfun(s);
  std::vector<CExpr> integrals(s);
  double t0q = t0;
  for (std::size_t theta = 0; theta < s; ++theta) {
    if (theta > 0) {
      kfun[theta].resize(theta);
      for (std::size_t rho = 1; rho <= theta; ++rho) {
        CExpr acc = cscale(binom_d(theta, rho - 1), mu_lift[theta - rho]);
        for (std::size_t eta = 1; eta <= theta - rho; ++eta)
          acc = cadd(acc, cscale(binom_d(theta, eta),
                                 cmul(mu_lift[eta - 1],
                                      kfun[theta - eta][rho - 1])));
        kfun[theta][rho - 1] = cquad(acc, t0q);
      }
    }
    CExpr f_dot{
        IE::lift(forcing_dot_plain(vec_re(data.chain.vectors[theta]), spec)),
        IE::lift(forcing_dot_plain(vec_im(data.chain.vectors[theta]), spec))};
    CExpr acc = cmul(f_dot, phi);
    for (std::size_t rho = 1; rho <= theta; ++rho)
      acc = cadd(acc, cscale(binom_d(theta, rho),
                             cmul(mu_lift[rho - 1], cfun[theta - rho])));
    cfun[theta] = cquad(acc, t0q);
    CExpr x_form{IE::lin_form(vec_re(data.chain.vectors[theta])),
                 IE::lin_form(vec_im(data.chain.vectors[theta]))};
    CExpr f = cmul(x_form, phi);
    for (std::size_t rho = 1; rho <= theta; ++rho)
      f = csub(f, cmul(kfun[theta][rho - 1], integrals[rho - 1]));
    f = csub(f, cfun[theta]);
    integrals[theta] = f;
    const char* tag = theta == 0 ? "Theorem 2.13" : "Theorem 2.14";
    out.push_back(make_entry(f.re, tag));
    out.push_back(make_entry(f.im, tag));
  }
  return out;
}

}  // namespace

BasisResult ld_nonautonomous_integrals(const SystemSpec& spec, double tol) {
  auto cs = common_spectrum(term_transposes(spec), tol,
                            /*require_commuting=*/true);
  auto evs = canonical_eigenvectors(cs);
  BasisResult result;
  result.mode = BasisMode::Full;
  if (auto warn = alpha_dependence_warning(spec)) result.warnings.push_back(*warn);
  double t0 = spec.anchor();
  std::size_t simple_count = 0;
  for (const auto& ev : evs) simple_count += ev_is_real(ev) ? 1 : 2;

  if (simple_count >= spec.n) {
    for (const auto& ev : evs) {
      EigenFunction lambda = eigenfunction_expr(ev.lambdas, spec);
      for (auto& e : eigenfunction_integrals(ev, lambda, spec, t0,
                                             "Theorem 2.5", "Theorem 2.6",
                                             "Theorem 2.12", "Theorem 2.13"))
        result.entries.push_back(std::move(e));
    }
    return result;
  }

  // Eigenvector deficiency: bring in the generalized chains of the
  // designated matrix.
  for (const auto& ev : evs) {
    auto data = ld_chain_data(spec, ev, tol);
    if (!data) {
      result.warnings.push_back(
          "chain-based integrals withheld for an eigenvector: some a_j Psi "
          "is not constant (Lemma 2.5 condition)");
      EigenFunction lambda = eigenfunction_expr(ev.lambdas, spec);
      for (auto& e : eigenfunction_integrals(ev, lambda, spec, t0,
                                             "Theorem 2.5", "Theorem 2.6",
                                             "Theorem 2.12", "Theorem 2.13"))
        result.entries.push_back(std::move(e));
      continue;
    }
    for (auto& e : ld_chain_integrals(spec, ev, *data))
      result.entries.push_back(std::move(e));
  }
  return result;
}

BasisResult ld_autonomous_integrals(const SystemSpec& spec, double tol) {
  auto cs = common_spectrum(term_transposes(spec), tol,
                            /*require_commuting=*/true);
  auto evs = canonical_eigenvectors(cs);
  std::size_t m = spec.terms.size();
  BasisResult result;
  result.mode = BasisMode::Autonomous;
  if (auto warn = alpha_dependence_warning(spec)) result.warnings.push_back(*warn);

  // Unknown layout: one exponent per real eigenvector, a (h*, h~) pair per
  // complex representative.
  struct Unit {
    const CommonEigenvector* ev;
    bool real;
  };
  std::vector<Unit> units;
  for (const auto& ev : evs) units.push_back({&ev, ev_is_real(ev)});
  std::size_t unknowns = 0;
  for (const auto& u : units) unknowns += u.real ? 1 : 2;

  auto emit_product = [&](const std::vector<double>& h) {
    std::vector<IE::Ptr> factors;
    std::size_t col = 0;
    bool any_complex = false;
    for (const auto& u : units) {
      if (u.real) {
        double hk = h[col++];
        if (hk == 0.0) continue;
        long long hi = std::llround(hk);
        Exponent e = std::fabs(hk - double(hi)) < 1e-9 ? Exponent::integer(hi)
                                                       : Exponent::real(hk);
        factors.push_back(IE::pow(IE::abs(IE::lin_form(vec_re(u.ev->nu))), e));
      } else {
        double hs = h[col++], ht = h[col++];
        auto re_form = IE::lin_form(vec_re(u.ev->nu));
        auto im_form = IE::lin_form(vec_im(u.ev->nu));
        if (hs != 0.0) {
          any_complex = true;
          auto p = IE::add2(IE::pow(re_form, Exponent::integer(2)),
                            IE::pow(im_form, Exponent::integer(2)));
          long long hi = std::llround(hs);
          Exponent e = std::fabs(hs - double(hi)) < 1e-9
                           ? Exponent::integer(hi)
                           : Exponent::real(hs);
          factors.push_back(IE::pow(p, e));
        }
        if (ht != 0.0) {
          any_complex = true;
          factors.push_back(IE::exp(
              IE::scale(-2.0 * ht, IE::arctan(im_form, re_form))));
        }
      }
    }
    if (factors.empty()) return;
    result.entries.push_back(make_entry(
        IE::mul(std::move(factors)),
        any_complex ? "Theorem 2.9" : "Theorem 2.8"));
  };

  if (unknowns > m) {
    // Route A: enough common eigenvectors; one homogeneous solve.
    bool exact = true;
    for (const auto& u : units) exact = exact && u.ev->exact;
    if (exact) {
      Mat<Rational> rows(m);
      for (std::size_t j = 0; j < m; ++j) {
        for (const auto& u : units) {
          const auto& l = u.ev->lambdas_exact[j];
          if (u.real) {
            rows[j].push_back(l.re);
          } else {
            rows[j].push_back(Rational(2) * l.re);
            rows[j].push_back(Rational(-2) * l.im);
          }
        }
      }
      auto kernel = kernel_basis(rows, 0.0);
      for (auto& vec : kernel) {
        // Smallest-integer scaling, positive leading entry.
        std::vector<QVec> wrap{QVec{}};
        for (const auto& r : vec) wrap[0].push_back(GaussianRational(r));
        // reuse the float path normalization via doubles below
        std::vector<double> h;
        BigInt lcm_den(1);
        for (const auto& r : vec) {
          if (r.is_zero()) continue;
          BigInt d = r.den();
          BigInt g = boost::multiprecision::gcd(lcm_den, d);
          lcm_den = lcm_den / g * d;
        }
        BigInt gcd_num(0);
        for (const auto& r : vec) {
          if (r.is_zero()) continue;
          BigInt scaled = r.num() * (lcm_den / r.den());
          gcd_num = boost::multiprecision::gcd(
              gcd_num, scaled < 0 ? BigInt(-scaled) : scaled);
        }
        Rational factor = gcd_num == 0 ? Rational(1) : Rational(lcm_den, gcd_num);
        for (const auto& r : vec)
          if (!r.is_zero()) {
            if ((r * factor).sign() < 0) factor = -factor;
            break;
          }
        for (const auto& r : vec) h.push_back((r * factor).to_double());
        emit_product(h);
      }
    } else {
      CMat rows(m);
      for (std::size_t j = 0; j < m; ++j) {
        for (const auto& u : units) {
          const auto& l = u.ev->lambdas[j];
          if (u.real) {
            rows[j].push_back(Complex(l.real(), 0.0));
          } else {
            rows[j].push_back(Complex(2.0 * l.real(), 0.0));
            rows[j].push_back(Complex(-2.0 * l.imag(), 0.0));
          }
        }
      }
      for (const auto& vec : float_kernel(rows, 1e-9)) {
        std::vector<double> h;
        for (const auto& z : vec) h.push_back(z.real());
        double lead = 0.0;
        for (double v : h)
          if (std::fabs(v) > 1e-9) {
            lead = v;
            break;
          }
        if (lead != 0.0)
          for (auto& v : h) v /= lead;
        emit_product(h);
      }
    }
  } else {
    // Route B (Theorem 2.11): chains of the designated matrix make up the
    // deficiency. Selections are enumerated lexicographically; the first
    // with a nontrivial exponent solution wins.
    std::vector<std::optional<LDChainData>> chains;
    for (const auto& ev : evs) chains.push_back(ld_chain_data(spec, ev, tol));
    // Only the single-eigenvector selections are enumerated here beyond
    // k = 1; compositions over several eigenvectors follow lexicographic
    // order on (k, subset, epsilon).
    std::size_t r = evs.size();
    bool emitted = false;
    for (std::size_t k = 1; k <= r && !emitted; ++k) {
      if (m + 1 < k) break;
      std::size_t eps_total = m - k + 1;
      // subsets of size k in lexicographic order
      std::vector<std::size_t> idx(k);
      for (std::size_t i = 0; i < k; ++i) idx[i] = i;
      auto next_subset = [&]() {
        std::size_t i = k;
        while (i-- > 0) {
          if (idx[i] + (k - i) <= r - 1 + 0) {
            ++idx[i];
            for (std::size_t l = i + 1; l < k; ++l) idx[l] = idx[l - 1] + 1;
            return true;
          }
        }
        return false;
      };
      do {
        bool usable = true;
        for (auto i : idx)
          if (!chains[i]) usable = false;
        if (!usable) continue;
        // compositions eps (eps_i >= 1? the theorem allows eps_i >= 1
        // implicitly via the sum; enumerate eps_i in 0..s_i-1 summing to
        // eps_total, lexicographically).
        std::vector<std::size_t> eps(k, 0);
        std::function<bool(std::size_t, std::size_t)> rec =
            [&](std::size_t pos, std::size_t remaining) -> bool {
          if (pos == k) {
            if (remaining != 0) return false;
            // Build the exponent system (2.51).
            std::size_t cols = 0;
            for (std::size_t i = 0; i < k; ++i) cols += 1 + eps[i];
            CMat rows(m, CVec(cols, Complex(0.0)));
            for (std::size_t j = 0; j < m; ++j) {
              std::size_t col = 0;
              for (std::size_t i = 0; i < k; ++i) {
                rows[j][col++] = evs[idx[i]].lambdas[j];
                for (std::size_t q = 1; q <= eps[i]; ++q)
                  rows[j][col++] = chains[idx[i]]->mu[q - 1][j];
              }
            }
            auto kernel = float_kernel(rows, 1e-9);
            if (kernel.empty()) return false;
            bool any_complex_data = false;
            for (std::size_t i = 0; i < k; ++i)
              if (!ev_is_real(evs[idx[i]]) ||
                  !chains[idx[i]]->chain.is_real())
                any_complex_data = true;
            for (auto vec : kernel) {
              Complex lead(0.0);
              for (const auto& z : vec)
                if (std::abs(z) > 1e-9) {
                  lead = z;
                  break;
                }
              if (lead != Complex(0.0))
                for (auto& z : vec) z /= lead;
              bool complex_solution = any_complex_data;
              for (const auto& z : vec)
                if (std::fabs(z.imag()) > 1e-9) complex_solution = true;
              if (!complex_solution) {
                // Real data: the (2.48) product form.
                std::size_t col = 0;
                std::vector<IE::Ptr> factors;
                std::vector<IE::Ptr> exponent_terms;
                for (std::size_t i = 0; i < k; ++i) {
                  double h0 = vec[col++].real();
                  auto psis = std::make_shared<PsiChainData>();
                  psis->vectors = chains[idx[i]]->chain.vectors;
                  if (h0 != 0.0) {
                    long long hi = std::llround(h0);
                    Exponent e = std::fabs(h0 - double(hi)) < 1e-9
                                     ? Exponent::integer(hi)
                                     : Exponent::real(h0);
                    factors.push_back(IE::pow(
                        IE::lin_form(vec_re(evs[idx[i]].nu)), e));
                  }
                  for (std::size_t q = 1; q <= eps[i]; ++q) {
                    double hq = vec[col++].real();
                    if (hq == 0.0) continue;
                    exponent_terms.push_back(
                        IE::scale(hq, IE::psi(psis, q, false)));
                  }
                }
                IE::Ptr f;
                if (factors.empty() && exponent_terms.size() == 1) {
                  f = exponent_terms[0];  // log form: Psi itself
                } else {
                  std::vector<IE::Ptr> all = factors;
                  if (!exponent_terms.empty())
                    all.push_back(
                        IE::exp(IE::add(std::move(exponent_terms))));
                  if (all.empty()) continue;
                  f = IE::mul(std::move(all));
                }
                result.entries.push_back(make_entry(f, "Theorem 2.11"));
                emitted = true;
                continue;
              }
              // Complex data: real and imaginary parts of
              // log F = sum h_0 log(nu0 x) + sum h_q Psi_q.
              std::vector<IE::Ptr> re_terms, im_terms;
              std::size_t col = 0;
              for (std::size_t i = 0; i < k; ++i) {
                const auto& ev = evs[idx[i]];
                Complex h0 = vec[col++];
                auto psis = std::make_shared<PsiChainData>();
                psis->vectors = chains[idx[i]]->chain.vectors;
                if (std::abs(h0) > 1e-12) {
                  if (ev_is_real(ev)) {
                    auto log_abs =
                        IE::ln(IE::abs(IE::lin_form(vec_re(ev.nu))));
                    if (h0.real() != 0.0)
                      re_terms.push_back(IE::scale(h0.real(), log_abs));
                    if (h0.imag() != 0.0)
                      im_terms.push_back(IE::scale(h0.imag(), log_abs));
                  } else {
                    auto re_form = IE::lin_form(vec_re(ev.nu));
                    auto im_form = IE::lin_form(vec_im(ev.nu));
                    auto half_log_p = IE::scale(
                        0.5,
                        IE::ln(IE::add2(
                            IE::pow(re_form, Exponent::integer(2)),
                            IE::pow(im_form, Exponent::integer(2)))));
                    auto arg = IE::arctan(im_form, re_form);
                    if (h0.real() != 0.0) {
                      re_terms.push_back(IE::scale(h0.real(), half_log_p));
                      im_terms.push_back(IE::scale(h0.real(), arg));
                    }
                    if (h0.imag() != 0.0) {
                      re_terms.push_back(IE::scale(-h0.imag(), arg));
                      im_terms.push_back(IE::scale(h0.imag(), half_log_p));
                    }
                  }
                }
                for (std::size_t q = 1; q <= eps[i]; ++q) {
                  Complex hq = vec[col++];
                  if (std::abs(hq) < 1e-12) continue;
                  auto psi_re = IE::psi(psis, q, false);
                  auto psi_im = IE::psi(psis, q, true);
                  if (hq.real() != 0.0) {
                    re_terms.push_back(IE::scale(hq.real(), psi_re));
                    im_terms.push_back(IE::scale(hq.real(), psi_im));
                  }
                  if (hq.imag() != 0.0) {
                    re_terms.push_back(IE::scale(-hq.imag(), psi_im));
                    im_terms.push_back(IE::scale(hq.imag(), psi_re));
                  }
                }
              }
              if (!re_terms.empty()) {
                result.entries.push_back(
                    make_entry(IE::add(std::move(re_terms)), "Theorem 2.11"));
                emitted = true;
              }
              if (!im_terms.empty()) {
                result.entries.push_back(
                    make_entry(IE::add(std::move(im_terms)), "Theorem 2.11"));
                emitted = true;
              }
            }
            return emitted;
          }
          std::size_t s_i = chains[idx[pos]]->chain.multiplicity();
          for (std::size_t e = 0; e <= std::min(remaining, s_i - 1); ++e) {
            eps[pos] = e;
            if (rec(pos + 1, remaining - e)) return true;
          }
          return false;
        };
        if (rec(0, eps_total)) break;
      } while (next_subset());
    }
    if (!emitted)
      throw ConstructionError(
          "exponent system has only the trivial solution: no autonomous "
          "integral from the enumerated selections");
  }

  if (result.entries.empty())
    throw ConstructionError(
        "exponent system has only the trivial solution: no autonomous "
        "integral from this selection");

  // Lemma 2.6 check: each emitted F must be annihilated by every frozen
  // field A_j x (verified numerically at random points).
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<BasisEntry> kept;
  for (auto& entry : result.entries) {
    bool ok = true;
    std::size_t checked = 0;
    for (int trial = 0; trial < 200 && checked < 8; ++trial) {
      EvalPoint p;
      p.t = spec.anchor();
      p.x.resize(spec.n);
      for (auto& v : p.x) v = unit(rng);
      try {
        double grad_norm = 0.0;
        std::vector<double> grad(spec.n);
        for (std::size_t i = 0; i < spec.n; ++i) {
          grad[i] = numeric_partial(entry.integral, p, i + 1);
          grad_norm += grad[i] * grad[i];
        }
        grad_norm = std::sqrt(grad_norm);
        for (std::size_t j = 0; j < spec.terms.size(); ++j) {
          double dir = 0.0, field_norm = 0.0;
          for (std::size_t i = 0; i < spec.n; ++i) {
            double vi = 0.0;
            for (std::size_t l = 0; l < spec.n; ++l)
              vi += spec.terms[j].a[i][l] * p.x[l];
            dir += vi * grad[i];
            field_norm += vi * vi;
          }
          field_norm = std::sqrt(field_norm);
          if (std::fabs(dir) >
              1e-5 * std::fmax(grad_norm * field_norm, 1e-12))
            ok = false;
        }
        ++checked;
      } catch (const DomainError&) {
        continue;
      }
      if (!ok) break;
    }
    if (ok && checked > 0) kept.push_back(std::move(entry));
  }
  if (kept.empty())
    throw ConstructionError(
        "constructed candidates failed the frozen-field verification");
  result.entries = std::move(kept);
  return result;
}

BasisResult build_basis_for_class(const SystemSpec& spec, SystemClass cls,
                                  BasisMode mode) {
  switch (cls) {
    case SystemClass::Constant:
      return autonomous_basis(spec, mode);
    case SystemClass::Reducible:
      return reducible_integrals(spec);
    case SystemClass::Triangular:
      return triangular_integrals(spec);
    case SystemClass::LappoDanilevskii:
      if (mode == BasisMode::Autonomous) return ld_autonomous_integrals(spec);
      return ld_nonautonomous_integrals(spec);
    case SystemClass::AlgebraicReducible:
      return algebraic_reducible_integrals(spec);
  }
  throw ConstructionError("unreachable class");
}

}  // namespace fint
