#include <doctest.h>

#include <cmath>
#include <random>

#include "fint/errors.hpp"
#include "fint/numerics.hpp"
#include "fint/timevarying.hpp"

using namespace fint;
using IE = IntegralExpr;

namespace {

SystemSpec ld_2_25() {
  SystemSpec spec;
  spec.n = 2;
  spec.terms.push_back({parse_scalar("t"), {{1, 0}, {0, 1}}});
  spec.terms.push_back({parse_scalar("sin(t)"), {{2, 1}, {1, 0}}});
  spec.t_lo = 0.0;
  spec.t_hi = 2.0;
  return spec;
}

SystemSpec ld_2_37() {
  SystemSpec spec;
  spec.n = 3;
  spec.terms.push_back({parse_scalar("sinh(t)"),
                        {{0, 2, 2}, {1, 0, 0}, {1, 0, 0}}});
  spec.terms.push_back({parse_scalar("exp(t)*cos(exp(t))"),
                        {{1, 0, 0}, {0, 0, 1}, {0, 1, 0}}});
  spec.t_lo = 0.0;
  spec.t_hi = 1.0;
  return spec;
}

SystemSpec ld_2_63() {
  SystemSpec spec;
  spec.n = 3;
  spec.terms.push_back({parse_scalar("1"),
                        {{0, -1, 1}, {1, -1, 1}, {-1, 1, -2}}});
  spec.terms.push_back({parse_scalar("t"),
                        {{1, -2, 1}, {2, 0, 2}, {-1, 2, -1}}});
  spec.forcing = {parse_scalar("0.5"), parse_scalar("-2*t^2"),
                  parse_scalar("t")};
  spec.t_lo = 0.0;
  spec.t_hi = 1.0;
  return spec;
}

SystemSpec triangular_2_17() {
  SystemSpec spec;
  spec.n = 3;
  spec.terms.push_back({parse_scalar("1/t"),
                        {{-1, 0, 0}, {0, 0, 0}, {0, 0, 2}}});
  spec.terms.push_back({parse_scalar("exp(-t)"),
                        {{0, -1, 0}, {0, 0, 0}, {0, 0, 0}}});
  spec.terms.push_back({parse_scalar("1"),
                        {{0, 0, -6}, {0, 1, 0}, {0, 0, 0}}});
  spec.terms.push_back({parse_scalar("exp(t)"),
                        {{0, 0, 0}, {0, 0, 5}, {0, 0, 0}}});
  spec.forcing = {parse_scalar("8*t^5+4*t+2*(t^3+3*t^2+6*t+6)*exp(-t)"),
                  parse_scalar("-2*t^3+4*exp(t)"), parse_scalar("2*t^3")};
  spec.t_lo = 1.0;
  spec.t_hi = 2.0;
  return spec;
}

SystemSpec algebraic_2_10() {
  SystemSpec spec;
  spec.n = 3;
  spec.terms.push_back({parse_scalar("sin(t)"),
                        {{0, 0, 0}, {-1, 1, 0}, {-1, 1, 0}}});
  spec.terms.push_back({parse_scalar("cos(t)"),
                        {{1, 0, 0}, {1, 0, 0}, {1, -1, 1}}});
  spec.terms.push_back({parse_scalar("t"),
                        {{0, -1, 1}, {0, -1, 1}, {-1, -1, 1}}});
  spec.t_lo = 0.0;
  spec.t_hi = 1.0;
  return spec;
}

}  // namespace

TEST_CASE("classification matches the worked systems") {
  std::string why;
  CHECK(classify_system(ld_2_25(), 1e-8, &why) ==
        SystemClass::LappoDanilevskii);
  CHECK(classify_system(triangular_2_17()) == SystemClass::Triangular);

  SystemSpec constant;
  constant.n = 2;
  constant.terms.push_back({parse_scalar("1"), {{1, 2}, {3, 4}}});
  constant.t_lo = 0;
  constant.t_hi = 1;
  CHECK(classify_system(constant) == SystemClass::Constant);

  // A system with none of the structures is rejected.
  SystemSpec shapeless;
  shapeless.n = 2;
  shapeless.terms.push_back({parse_scalar("sin(t)"), {{0, 1}, {0, 0}}});
  shapeless.terms.push_back({parse_scalar("t"), {{0, 0}, {1, 0}}});
  shapeless.terms.push_back({parse_scalar("exp(t)"), {{1, 0}, {0, -1}}});
  shapeless.t_lo = 0;
  shapeless.t_hi = 1;
  CHECK_THROWS_AS(classify_system(shapeless), ConstructionError);

  // A hint that does not match the system is an error.
  SystemSpec hinted = ld_2_25();
  hinted.class_hint = SystemClass::Triangular;
  CHECK_THROWS_AS(classify_system(hinted), ConstructionError);
}

TEST_CASE("algebraic reducible integrals of the third-order family") {
  auto spec = algebraic_2_10();
  auto basis = algebraic_reducible_integrals(spec);
  REQUIRE(basis.entries.size() == 3);
  // F1 = (x2 - x1) exp(-I alpha1) with alpha1 = sin.
  const IE::Ptr* kernel_like = nullptr;
  for (const auto& e : basis.entries)
    if (e.provenance == "Corollary 2.1") kernel_like = &e.integral;
  REQUIRE(kernel_like);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int it = 0; it < 12; ++it) {
    EvalPoint p{u(rng), {u(rng), u(rng), u(rng)}};
    double expected =
        (p.x[0] - p.x[1]) * std::exp(-(1.0 - std::cos(p.t)));
    double got = eval_integral(*kernel_like, p);
    CHECK(std::fabs(std::fabs(got) - std::fabs(expected)) < 1e-9);
  }
  VerifyOptions opts;
  opts.trajectories = 8;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  CHECK(report.passed);
  CHECK(report.independence == 3);
}

TEST_CASE("algebraic reducible with constant coefficients reduces to the "
          "constant construction") {
  SystemSpec spec;
  spec.n = 3;
  spec.terms.push_back({parse_scalar("1"),
                        {{0, 0, 0}, {-1, 1, 0}, {-1, 1, 0}}});
  spec.terms.push_back({parse_scalar("2"),
                        {{1, 0, 0}, {1, 0, 0}, {1, -1, 1}}});
  spec.terms.push_back({parse_scalar("3"),
                        {{0, -1, 1}, {0, -1, 1}, {-1, -1, 1}}});
  spec.t_lo = 0;
  spec.t_hi = 1;
  auto basis = algebraic_reducible_integrals(spec);
  VerifyOptions opts;
  opts.trajectories = 6;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  CHECK(report.passed);
}

TEST_CASE("homogeneous complex eigenfunctions produce the oscillatory pair") {
  // The homogeneous part of the worked system with eigenfunction
  // -tanh t + cosh t i on nu = (1, i, -i).
  SystemSpec spec;
  spec.n = 3;
  spec.terms.push_back({parse_scalar("tanh(t)"),
                        {{-1, 0, 0}, {-1, 0, 0}, {-1, 1, -1}}});
  spec.terms.push_back({parse_scalar("cosh(t)"),
                        {{0, -1, 1}, {0, -1, 1}, {-1, -1, 1}}});
  spec.terms.push_back({parse_scalar("1/t-1"),
                        {{0, 0, 0}, {1, -1, 0}, {1, -1, 0}}});
  spec.t_lo = 0.5;
  spec.t_hi = 2.0;
  auto basis = algebraic_reducible_integrals(spec);
  bool cosine_form = false;
  for (const auto& e : basis.entries) {
    if (e.provenance != "Theorem 2.3") continue;
    cosine_form = true;
  }
  CHECK(cosine_form);
  VerifyOptions opts;
  opts.trajectories = 8;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  CHECK(report.passed);
}

TEST_CASE("triangular integrals: recursion anchor and golden diagonal") {
  auto spec = triangular_2_17();
  auto basis = triangular_integrals(spec);
  REQUIRE(basis.entries.size() == 3);
  // At the anchor every quadrature vanishes: F_tau(t0, x) = x_{n+1-tau}.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int it = 0; it < 10; ++it) {
    EvalPoint p{1.0, {u(rng), u(rng), u(rng)}};
    CHECK(std::fabs(eval_integral(basis.entries[0].integral, p) - p.x[2]) <
          1e-12);
    CHECK(std::fabs(eval_integral(basis.entries[1].integral, p) - p.x[1]) <
          1e-12);
    CHECK(std::fabs(eval_integral(basis.entries[2].integral, p) - p.x[0]) <
          1e-12);
  }
  VerifyOptions opts;
  opts.trajectories = 8;
  opts.drift_gate = 1e-6;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  CHECK(report.passed);

  // Diagonal homogeneous system: F_tau = x_{n+1-tau} exp(-I a).
  SystemSpec diag;
  diag.n = 2;
  diag.terms.push_back({parse_scalar("cos(t)"), {{1, 0}, {0, 1}}});
  diag.t_lo = 0.0;
  diag.t_hi = 1.0;
  auto dbasis = triangular_integrals(diag);
  REQUIRE(dbasis.entries.size() == 2);
  CHECK(dbasis.entries[0].provenance == "Corollary 2.2");
  EvalPoint p{0.9, {2.0, 3.0}};
  CHECK(eval_integral(dbasis.entries[0].integral, p) ==
        doctest::Approx(3.0 * std::exp(-std::sin(0.9))).epsilon(1e-10));
}

TEST_CASE("generic 2x2 triangular system passes the oracle") {
  SystemSpec spec;
  spec.n = 2;
  spec.terms.push_back({parse_scalar("1/(1+t^2)"), {{1, 0}, {0, 0}}});
  spec.terms.push_back({parse_scalar("sin(t)"), {{0, 1}, {0, 0}}});
  spec.terms.push_back({parse_scalar("cos(t)"), {{0, 0}, {0, 1}}});
  spec.t_lo = 0.0;
  spec.t_hi = 2.0;
  auto basis = triangular_integrals(spec);
  VerifyOptions opts;
  opts.trajectories = 10;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  CHECK(report.passed);
  CHECK(report.independence == 2);
}

TEST_CASE("Lappo-Danilevskii simple integrals of the 2nd-order system") {
  auto spec = ld_2_25();
  auto basis = ld_nonautonomous_integrals(spec);
  REQUIRE(basis.entries.size() == 2);
  double root2 = std::sqrt(2.0);
  // F1 = ((1 - sqrt 2) x1 + x2) exp(-t^2/2 + (1 - sqrt 2) cos t) up to a
  // constant factor from the anchored quadrature and scaling.
  bool matched = false;
  for (const auto& e : basis.entries) {
    EvalPoint p{1.3, {0.7, 0.4}};
    EvalPoint q{0.6, {0.2, -0.9}};
    auto golden = [&](const EvalPoint& pt) {
      return ((1.0 - root2) * pt.x[0] + pt.x[1]) *
             std::exp(-pt.t * pt.t / 2 + (1.0 - root2) * std::cos(pt.t));
    };
    double r1 = eval_integral(e.integral, p) / golden(p);
    double r2 = eval_integral(e.integral, q) / golden(q);
    if (std::fabs(r1 - r2) < 1e-9) matched = true;
  }
  CHECK(matched);
  VerifyOptions opts;
  opts.trajectories = 10;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  CHECK(report.passed);
}

TEST_CASE("single-term family reduces to the constant constructors") {
  SystemSpec spec;
  spec.n = 2;
  spec.terms.push_back({parse_scalar("1"), {{1, 0}, {0, 2}}});
  spec.t_lo = 0;
  spec.t_hi = 1;
  auto basis = ld_nonautonomous_integrals(spec);
  REQUIRE(basis.entries.size() == 2);
  EvalPoint p{0.5, {2.0, 3.0}};
  // nu x exp(-lambda t) up to ordering.
  double a = eval_integral(basis.entries[0].integral, p);
  double b = eval_integral(basis.entries[1].integral, p);
  double e1 = 2.0 * std::exp(-0.5), e2 = 3.0 * std::exp(-1.0);
  CHECK(((std::fabs(a - e1) < 1e-12 && std::fabs(b - e2) < 1e-12) ||
         (std::fabs(a - e2) < 1e-12 && std::fabs(b - e1) < 1e-12)));
}

TEST_CASE("LD chain data reproduces the worked mu constants") {
  auto spec = ld_2_63();
  auto bs = std::vector<RealMat>{};
  auto cs = common_spectrum(
      {{{0, 1, -1}, {-1, -1, 1}, {1, 1, -2}},
       {{1, 2, -1}, {-2, 0, 2}, {1, 2, -1}}});
  REQUIRE(cs.eigenvectors.size() == 1);
  auto data = ld_chain_data(spec, cs.eigenvectors[0]);
  REQUIRE(data.has_value());
  CHECK(data->zeta == 0);
  REQUIRE(data->chain.multiplicity() == 3);
  // mu_1 = (1, 2), mu_2 = (0, 2) in the family order.
  CHECK(data->mu[0][0] == Complex(1.0));
  CHECK(data->mu[0][1] == Complex(2.0));
  CHECK(data->mu[1][0] == Complex(0.0));
  CHECK(data->mu[1][1] == Complex(2.0));

  // Type invariants: a_zeta Psi_1 = 1, a_zeta Psi_2 = 0, a_j Psi constant,
  // probed numerically at random points.
  auto psis = std::make_shared<PsiChainData>();
  psis->vectors = data->chain.vectors;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.3, 1.0);
  for (std::size_t theta = 1; theta <= 2; ++theta) {
    auto psi = theta == 1 ? IE::psi(psis, 1, false) : IE::psi(psis, 2, false);
    for (std::size_t j = 0; j < spec.terms.size(); ++j) {
      double reference = 0.0;
      bool have = false;
      for (int it = 0; it < 5; ++it) {
        EvalPoint p{0.0, {1.0 + u(rng), u(rng), u(rng)}};
        double dir = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
          double vi = 0.0;
          for (std::size_t l = 0; l < 3; ++l)
            vi += spec.terms[j].a[i][l] * p.x[l];
          dir += vi * numeric_partial(psi, p, i + 1);
        }
        if (!have) {
          reference = dir;
          have = true;
        }
        CHECK(std::fabs(dir - reference) < 1e-6 * (1.0 + std::fabs(dir)));
        CHECK(std::fabs(dir - data->mu[theta - 1][j].real()) <
              1e-6 * (1.0 + std::fabs(dir)));
      }
    }
  }
  (void)bs;
}

TEST_CASE("LD forced chain integrals match the worked closed forms") {
  auto spec = ld_2_63();
  auto basis = ld_nonautonomous_integrals(spec);
  REQUIRE(basis.entries.size() == 3);
  auto worked_f0 = [](const EvalPoint& p) {
    return (p.x[0] + p.x[2] - p.t + 0.5) * std::exp(p.t);
  };
  auto worked_f1 = [&](const EvalPoint& p) {
    return (p.x[1] + 0.5) * std::exp(p.t) - p.t * (p.t + 1) * worked_f0(p);
  };
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  double base0 = HUGE_VAL, base1 = HUGE_VAL;
  for (int it = 0; it < 15; ++it) {
    EvalPoint p{u(rng), {u(rng), u(rng), u(rng)}};
    double d0 = eval_integral(basis.entries[0].integral, p) - worked_f0(p);
    double d1 = eval_integral(basis.entries[1].integral, p) - worked_f1(p);
    if (base0 == HUGE_VAL) {
      base0 = d0;
      base1 = d1;
      continue;
    }
    CHECK(d0 == doctest::Approx(base0).epsilon(1e-7));
    CHECK(d1 == doctest::Approx(base1).epsilon(1e-7));
  }
  VerifyOptions opts;
  opts.trajectories = 10;
  opts.drift_gate = 1e-6;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  CHECK(report.passed);
  CHECK(report.independence == 3);
}

TEST_CASE("LD autonomous exponent solve on the worked third-order system") {
  auto spec = ld_2_37();
  auto basis = ld_autonomous_integrals(spec);
  REQUIRE(!basis.entries.empty());
  // F = |x1 - x2 - x3| |x2 - x3|^2 |x1 + x2 + x3| with h = (1, 2, 1).
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 0.5);
  for (int it = 0; it < 15; ++it) {
    EvalPoint p{0.0, {2.0 + u(rng), u(rng), -u(rng)}};
    double expected = std::fabs(p.x[0] - p.x[1] - p.x[2]) *
                      std::pow(p.x[1] - p.x[2], 2) *
                      std::fabs(p.x[0] + p.x[1] + p.x[2]);
    CHECK(eval_integral(basis.entries[0].integral, p) ==
          doctest::Approx(expected).epsilon(1e-10));
  }
  VerifyOptions opts;
  opts.trajectories = 8;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  for (const auto& entry : report.integrals) CHECK(entry.rel_drift < 1e-7);
}

TEST_CASE("single-matrix autonomous solve reduces to the weighted product") {
  SystemSpec spec;
  spec.n = 2;
  spec.terms.push_back({parse_scalar("t"), {{1, 0}, {0, 2}}});
  spec.t_lo = 0.0;
  spec.t_hi = 1.0;
  auto basis = ld_autonomous_integrals(spec);
  REQUIRE(!basis.entries.empty());
  // Exponents solve h1 + 2 h2 = 0: the |x1|^2 |x2|^(-1) family.
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> u(0.3, 1.0);
  for (int it = 0; it < 12; ++it) {
    EvalPoint p{0.0, {u(rng), u(rng)}};
    double expected = p.x[0] * p.x[0] / p.x[1];
    double got = eval_integral(basis.entries[0].integral, p);
    bool direct = std::fabs(got - expected) < 1e-10 * (1.0 + expected);
    bool reciprocal =
        std::fabs(got - 1.0 / expected) < 1e-10 * (1.0 + 1.0 / expected);
    CHECK((direct || reciprocal));
  }
}

TEST_CASE("Cramer-style product on the 4th-order commuting family") {
  SystemSpec spec;
  spec.n = 4;
  spec.terms.push_back({parse_scalar("sin(t)"),
                        {{0, 6, -1, 3},
                         {1, -7, 1, -5},
                         {2, -6, 3, -3},
                         {-2, 10, -2, 8}}});
  spec.terms.push_back({parse_scalar("cos(t)"),
                        {{1, 4, 0, 2},
                         {1, -4, 1, -3},
                         {0, -4, 1, -2},
                         {-2, 6, -2, 5}}});
  spec.t_lo = 0.0;
  spec.t_hi = 1.0;
  auto basis = ld_autonomous_integrals(spec);
  REQUIRE(!basis.entries.empty());
  // F_123 = (2 x2 + x4)(x1 + x3) appears among the kernel solutions.
  bool found = false;
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  for (const auto& e : basis.entries) {
    bool all_match = true;
    for (int it = 0; it < 10; ++it) {
      EvalPoint p{0.0, {u(rng), u(rng), u(rng), u(rng)}};
      double expected = (2 * p.x[1] + p.x[3]) * (p.x[0] + p.x[2]);
      double got;
      try {
        got = eval_integral(e.integral, p);
      } catch (const DomainError&) {
        all_match = false;
        break;
      }
      if (std::fabs(got - expected) > 1e-9 * (1.0 + std::fabs(expected)))
        all_match = false;
    }
    if (all_match) found = true;
  }
  CHECK(found);
  VerifyOptions opts;
  opts.trajectories = 6;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  for (const auto& entry : report.integrals) CHECK(entry.rel_drift < 1e-7);
}

TEST_CASE("eigenvector-deficient family goes through the chain route") {
  SystemSpec spec;
  spec.n = 4;
  spec.terms.push_back({parse_scalar("1"),
                        {{0, 1, 0, 0},
                         {0, 2, -1, -1},
                         {1, 0, 0, -1},
                         {-1, 0, 2, 2}}});
  spec.terms.push_back({parse_scalar("t"),
                        {{2, 0, -1, 0},
                         {-1, 2, 0, 1},
                         {-1, 0, 3, 1},
                         {0, 1, -3, 1}}});
  spec.t_lo = 0.0;
  spec.t_hi = 1.0;
  auto basis = ld_autonomous_integrals(spec);
  REQUIRE(!basis.entries.empty());
  CHECK(basis.entries[0].provenance == "Theorem 2.11");
  VerifyOptions opts;
  opts.trajectories = 6;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  for (const auto& entry : report.integrals) CHECK(entry.rel_drift < 1e-7);

  // The emitted integral is annihilated by each frozen field A_j x.
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  for (int it = 0; it < 20; ++it) {
    EvalPoint p{0.0, {2.0 + u(rng), u(rng), u(rng), u(rng)}};
    for (std::size_t j = 0; j < 2; ++j) {
      double dir = 0.0, grad_norm = 0.0, field_norm = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        double vi = 0.0;
        for (std::size_t l = 0; l < 4; ++l)
          vi += spec.terms[j].a[i][l] * p.x[l];
        double gi = numeric_partial(basis.entries[0].integral, p, i + 1);
        dir += vi * gi;
        grad_norm += gi * gi;
        field_norm += vi * vi;
      }
      CHECK(std::fabs(dir) <=
            1e-5 * std::sqrt(grad_norm) * std::sqrt(field_norm) + 1e-12);
    }
  }
}

TEST_CASE("autonomous exponent solve with a complex eigenvector pair") {
  // The commuting third-order family with common eigenvectors (1,0,-1)
  // and (i,i,1): exponents (-2, 1, 1) give P/(nu x)^2 exp(-2 arctan).
  SystemSpec spec;
  spec.n = 3;
  spec.terms.push_back({parse_scalar("tanh(t)+3*t^2"),
                        {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
  spec.terms.push_back({parse_scalar("-tanh(t)"),
                        {{-2, -1, 1}, {2, 1, 0}, {-1, -1, 0}}});
  spec.t_lo = 0.0;
  spec.t_hi = 1.0;
  auto basis = ld_autonomous_integrals(spec);
  REQUIRE(!basis.entries.empty());
  auto worked = [](const EvalPoint& p) {
    double d = p.x[0] - p.x[2];
    double pp = (p.x[0] + p.x[1]) * (p.x[0] + p.x[1]) + p.x[2] * p.x[2];
    return pp / (d * d) *
           std::exp(-2.0 * std::atan((p.x[0] + p.x[1]) / p.x[2]));
  };
  // The exponent vector is determined up to scale (including sign) and
  // the arctan branch differs by a locally constant offset, so ours must
  // be a constant multiple of the reference integral or of its reciprocal
  // on a fixed sign region.
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> direct_ratio, inverse_ratio;
  for (int it = 0; it < 15; ++it) {
    EvalPoint p{0.0, {2.0 + u(rng), u(rng), u(rng)}};
    double ours = eval_integral(basis.entries[0].integral, p);
    direct_ratio.push_back(ours / worked(p));
    inverse_ratio.push_back(ours * worked(p));
  }
  auto is_constant = [](const std::vector<double>& v) {
    for (double x : v)
      if (std::fabs(x - v[0]) > 1e-8 * (1.0 + std::fabs(v[0]))) return false;
    return true;
  };
  CHECK((is_constant(direct_ratio) || is_constant(inverse_ratio)));
  VerifyOptions opts;
  opts.trajectories = 6;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  for (const auto& e : report.integrals) CHECK(e.rel_drift < 1e-7);
}

TEST_CASE("Erugin-type forced system with nonelementary quadratures") {
  // Cauchy-Riemann right-hand side: the integrals involve Fresnel-type
  // quadratures of cos(t^2) and sin(t^2).
  SystemSpec spec;
  spec.n = 2;
  spec.terms.push_back({parse_scalar("1/t"), {{1, 0}, {0, 1}}});
  spec.terms.push_back({parse_scalar("2*t"), {{0, 1}, {-1, 0}}});
  spec.forcing = {parse_scalar("t"), parse_scalar("2*t^2")};
  spec.t_lo = 0.5;
  spec.t_hi = 2.0;
  CHECK(classify_system(spec) == SystemClass::LappoDanilevskii);
  auto basis = ld_nonautonomous_integrals(spec);
  REQUIRE(basis.entries.size() == 2);
  CHECK(basis.entries[0].provenance == "Theorem 2.13");
  VerifyOptions opts;
  opts.trajectories = 8;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  CHECK(report.passed);
  CHECK(report.independence == 2);
}

TEST_CASE("complex chain route emits the log-split pair") {
  // B1 = companion of (l^2+1)^3: one chain of length 3 over each of +-i.
  // B2 = I makes the family commute and forces the chain route.
  RealMat b1 = {{0, 0, 0, 0, 0, -1}, {1, 0, 0, 0, 0, 0},
                {0, 1, 0, 0, 0, -3}, {0, 0, 1, 0, 0, 0},
                {0, 0, 0, 1, 0, -3}, {0, 0, 0, 0, 1, 0}};
  SystemSpec spec;
  spec.n = 6;
  RealMat a1(6, std::vector<double>(6, 0.0));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a1[i][j] = b1[j][i];
  RealMat eye(6, std::vector<double>(6, 0.0));
  for (int i = 0; i < 6; ++i) eye[i][i] = 1.0;
  spec.terms.push_back({parse_scalar("1"), a1});
  spec.terms.push_back({parse_scalar("t"), eye});
  spec.t_lo = 0.0;
  spec.t_hi = 1.0;
  auto basis = ld_autonomous_integrals(spec);
  REQUIRE(basis.entries.size() >= 2);
  for (const auto& e : basis.entries)
    CHECK(e.provenance == "Theorem 2.11");
  VerifyOptions opts;
  opts.trajectories = 6;
  auto report = verify_integrals(spec, basis.integrals(), opts);
  for (const auto& entry : report.integrals) CHECK(entry.rel_drift < 1e-7);
}

TEST_CASE("alpha dependence produces a warning, not an error") {
  SystemSpec spec;
  spec.n = 2;
  spec.terms.push_back({parse_scalar("sin(t)"), {{1, 0}, {0, 1}}});
  spec.terms.push_back({parse_scalar("2*sin(t)"), {{2, 1}, {1, 0}}});
  spec.t_lo = 0.0;
  spec.t_hi = 2.0;
  auto basis = ld_nonautonomous_integrals(spec);
  CHECK(!basis.warnings.empty());
  CHECK(!basis.entries.empty());
}
