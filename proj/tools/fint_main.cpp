#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fint/autonomous.hpp"
#include "fint/errors.hpp"
#include "fint/numerics.hpp"
#include "fint/reducible.hpp"
#include "fint/spectral.hpp"
#include "fint/system_spec.hpp"
#include "fint/timevarying.hpp"

namespace {

using fint::BasisMode;
using fint::BasisResult;
using fint::SystemClass;
using fint::SystemSpec;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitClassification = 3;
constexpr int kExitConstruction = 4;
constexpr int kExitVerification = 5;

std::string divisor_string(const fint::EigenChain& chain) {
  std::string lam = fint::format_eigenvalue(chain.lambda);
  std::string factor = "λ";
  if (chain.lambda != fint::Complex(0.0)) {
    if (lam[0] == '-')
      factor += "+" + lam.substr(1);
    else
      factor += "-" + lam;
  }
  if (chain.multiplicity() == 1) return factor;
  std::string sup;
  for (char c : std::to_string(chain.multiplicity())) {
    static const std::map<char, std::string> sups = {
        {'0', "⁰"}, {'1', "¹"}, {'2', "²"}, {'3', "³"},
        {'4', "⁴"}, {'5', "⁵"}, {'6', "⁶"}, {'7', "⁷"},
        {'8', "⁸"}, {'9', "⁹"}};
    sup += sups.at(c);
  }
  return "(" + factor + ")" + sup;
}

std::string complex_str(const fint::Complex& z) {
  return fint::format_eigenvalue(z);
}

std::string vector_str(const fint::CVec& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += complex_str(v[i]);
  }
  return s + ")";
}

json spectral_json(const fint::SpectralData& sd) {
  json j;
  j["exact"] = sd.exact;
  j["eigenvalues"] = json::array();
  for (const auto& chain : sd.chains) {
    json c;
    c["re"] = chain.lambda.real();
    c["im"] = chain.lambda.imag();
    c["multiplicity"] = chain.multiplicity();
    c["divisor"] = divisor_string(chain);
    json vectors = json::array();
    for (const auto& v : chain.vectors) vectors.push_back(vector_str(v));
    c["chain"] = vectors;
    j["eigenvalues"].push_back(std::move(c));
  }
  return j;
}

void print_spectrum(const fint::SpectralData& sd) {
  std::string eigens, divisors;
  for (std::size_t i = 0; i < sd.chains.size(); ++i) {
    if (i) {
      eigens += ", ";
      divisors += ", ";
    }
    eigens += complex_str(sd.chains[i].lambda);
    if (sd.chains[i].multiplicity() > 1)
      eigens += " (×" + std::to_string(sd.chains[i].multiplicity()) + ")";
    divisors += divisor_string(sd.chains[i]);
  }
  std::printf("eigenvalues: %s\n", eigens.c_str());
  std::printf("divisors: %s\n", divisors.c_str());
  std::printf("path: %s\n", sd.exact ? "exact" : "float");
  for (const auto& chain : sd.chains) {
    std::printf("chain λ=%s m=%zu:", complex_str(chain.lambda).c_str(),
                chain.multiplicity());
    for (const auto& v : chain.vectors)
      std::printf(" %s", vector_str(v).c_str());
    std::printf("\n");
  }
}

BasisMode pick_mode(const std::string& mode_flag, SystemClass cls,
                    const SystemSpec& spec) {
  if (mode_flag == "autonomous") return BasisMode::Autonomous;
  if (mode_flag == "full") return BasisMode::Full;
  if (mode_flag == "forced") return BasisMode::Forced;
  // auto: forced when forcing is present on a constant system, full else.
  if (cls == SystemClass::Constant)
    return spec.has_forcing() ? BasisMode::Forced : BasisMode::Autonomous;
  return BasisMode::Full;
}

json transform_json(const fint::TransformPtr& g) {
  json rows = json::array();
  for (const auto& row : g->g) {
    json r = json::array();
    for (const auto& cell : row)
      r.push_back(cell ? fint::format_scalar(cell) : "0");
    rows.push_back(std::move(r));
  }
  return rows;
}

// Full structural serialization; scalar leaves stay parseable strings.
json tree_json(const fint::IntegralExpr::Ptr& f) {
  using Kind = fint::IntegralExpr::Kind;
  json node;
  switch (f->kind()) {
    case Kind::ScalarLift:
      node["node"] = "scalar";
      node["expr"] = fint::format_scalar(f->scalar());
      return node;
    case Kind::LinForm:
      node["node"] = "linform";
      node["coeffs"] = f->coeffs();
      if (f->transform()) node["transform"] = transform_json(f->transform());
      return node;
    case Kind::Add:
    case Kind::Mul: {
      node["node"] = f->kind() == Kind::Add ? "add" : "mul";
      json children = json::array();
      for (const auto& c : f->children()) children.push_back(tree_json(c));
      node["children"] = std::move(children);
      return node;
    }
    case Kind::Pow:
      node["node"] = "pow";
      node["base"] = tree_json(f->children()[0]);
      node["exponent"] = f->exponent().str();
      return node;
    case Kind::Exp:
    case Kind::Ln:
    case Kind::Abs:
    case Kind::Cos:
    case Kind::Sin: {
      static const std::map<Kind, const char*> names = {
          {Kind::Exp, "exp"}, {Kind::Ln, "ln"}, {Kind::Abs, "abs"},
          {Kind::Cos, "cos"}, {Kind::Sin, "sin"}};
      node["node"] = names.at(f->kind());
      node["child"] = tree_json(f->children()[0]);
      return node;
    }
    case Kind::Arctan:
      node["node"] = "arctan";
      node["numerator"] = tree_json(f->children()[0]);
      node["denominator"] = tree_json(f->children()[1]);
      return node;
    case Kind::Quadrature:
      node["node"] = "quadrature";
      node["t0"] = f->quad_t0();
      node["integrand"] = tree_json(f->children()[0]);
      return node;
    case Kind::Psi: {
      node["node"] = "psi";
      node["index"] = f->psi_index();
      node["part"] = f->psi_imag() ? "im" : "re";
      json chain = json::array();
      for (const auto& vec : f->psi_chain()->vectors) {
        json v = json::array();
        for (const auto& z : vec) v.push_back({z.real(), z.imag()});
        chain.push_back(std::move(v));
      }
      node["chain"] = std::move(chain);
      if (f->psi_chain()->transform)
        node["transform"] = transform_json(f->psi_chain()->transform);
      return node;
    }
  }
  node["node"] = "?";
  return node;
}

json basis_json(const BasisResult& basis) {
  json out = json::array();
  for (const auto& entry : basis.entries) {
    json e;
    e["expression"] = entry.integral->format();
    e["provenance"] = entry.provenance;
    e["singular_set"] = entry.singular_set;
    e["tree"] = tree_json(entry.integral);
    out.push_back(std::move(e));
  }
  return out;
}

int run_analyze(const std::string& path, bool as_json, double tol) {
  SystemSpec spec = fint::load_system_spec(path);
  std::string evidence;
  SystemClass cls;
  try {
    cls = fint::classify_system(spec, tol, &evidence);
  } catch (const fint::ConstructionError& e) {
    std::fprintf(stderr, "classification failed: %s\n", e.what());
    return kExitClassification;
  }
  json j;
  j["class"] = fint::system_class_name(cls);
  j["evidence"] = evidence;
  if (!as_json)
    std::printf("class: %s (%s)\n", fint::system_class_name(cls).c_str(),
                evidence.c_str());
  if (cls == SystemClass::Constant) {
    auto sd = fint::spectrum_of_transpose(spec.constant_a(), tol);
    if (as_json)
      j["spectrum"] = spectral_json(sd);
    else
      print_spectrum(sd);
  } else if (cls == SystemClass::Reducible) {
    auto report = fint::check_reduction(spec, tol);
    auto sd = fint::spectrum_of_transpose(spec.reduction->b, tol);
    if (as_json) {
      j["reduction_residual"] = report.max_residual;
      j["min_abs_det"] = report.min_abs_det;
      j["spectrum"] = spectral_json(sd);
    } else {
      std::printf("reduction residual: %s, min |det g|: %s\n",
                  fint::format_double(report.max_residual).c_str(),
                  fint::format_double(report.min_abs_det).c_str());
      print_spectrum(sd);
    }
  } else if (cls == SystemClass::LappoDanilevskii ||
             cls == SystemClass::AlgebraicReducible) {
    bool commuting = cls == SystemClass::LappoDanilevskii;
    json per_matrix = json::array();
    for (std::size_t k = 0; k < spec.terms.size(); ++k) {
      auto sd = fint::spectrum_of_transpose(spec.terms[k].a, tol);
      if (as_json) {
        per_matrix.push_back(spectral_json(sd));
      } else {
        std::printf("-- B%zu --\n", k + 1);
        print_spectrum(sd);
      }
    }
    if (as_json) j["matrices"] = std::move(per_matrix);
    std::vector<fint::RealMat> bs;
    for (const auto& term : spec.terms) {
      fint::RealMat b(spec.n, std::vector<double>(spec.n, 0.0));
      for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t jx = 0; jx < spec.n; ++jx) b[jx][i] = term.a[i][jx];
      bs.push_back(std::move(b));
    }
    auto cs = fint::common_spectrum(bs, tol, commuting);
    json common = json::array();
    for (const auto& ev : cs.eigenvectors) {
      json e;
      e["nu"] = vector_str(ev.nu);
      json ls = json::array();
      for (const auto& l : ev.lambdas) ls.push_back(complex_str(l));
      e["lambdas"] = std::move(ls);
      common.push_back(std::move(e));
      if (!as_json) {
        std::string lams;
        for (std::size_t l = 0; l < ev.lambdas.size(); ++l) {
          if (l) lams += ", ";
          lams += complex_str(ev.lambdas[l]);
        }
        std::printf("common eigenvector %s with (%s)\n",
                    vector_str(ev.nu).c_str(), lams.c_str());
      }
    }
    if (as_json) j["common_spectrum"] = std::move(common);
  } else if (cls == SystemClass::Triangular) {
    if (!as_json)
      std::printf("upper triangular; diagonal entries drive the phi/psi "
                  "exponentials\n");
  }
  if (as_json) std::printf("%s\n", j.dump(2).c_str());
  return kExitOk;
}

int run_basis(const std::string& path, const std::string& mode_flag,
              bool as_json, double tol) {
  SystemSpec spec = fint::load_system_spec(path);
  SystemClass cls;
  try {
    cls = fint::classify_system(spec, tol);
  } catch (const fint::ConstructionError& e) {
    std::fprintf(stderr, "classification failed: %s\n", e.what());
    return kExitClassification;
  }
  BasisMode mode = pick_mode(mode_flag, cls, spec);
  BasisResult basis;
  try {
    basis = fint::build_basis_for_class(spec, cls, mode);
  } catch (const fint::ConstructionError& e) {
    std::fprintf(stderr, "construction failed: %s\n", e.what());
    return kExitConstruction;
  }
  for (const auto& w : basis.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (as_json) {
    json j;
    j["class"] = fint::system_class_name(cls);
    j["mode"] = mode == BasisMode::Autonomous
                    ? "autonomous"
                    : (mode == BasisMode::Full ? "full" : "forced");
    json sys;
    sys["n"] = spec.n;
    sys["terms"] = json::array();
    for (const auto& term : spec.terms) {
      json t;
      t["alpha"] = fint::format_scalar(term.alpha);
      t["A"] = term.a;
      sys["terms"].push_back(std::move(t));
    }
    if (spec.has_forcing()) {
      sys["forcing"] = json::array();
      for (const auto& f : spec.forcing)
        sys["forcing"].push_back(fint::format_scalar(f));
    }
    sys["window"] = {spec.t_lo, spec.t_hi};
    j["system"] = std::move(sys);
    j["integrals"] = basis_json(basis);
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    if (basis.entries.empty())
      std::printf("no integrals (empty basis for this mode)\n");
    for (std::size_t i = 0; i < basis.entries.size(); ++i) {
      const auto& e = basis.entries[i];
      std::printf("F%zu [%s] = %s\n", i + 1, e.provenance.c_str(),
                  e.integral->format().c_str());
      for (const auto& s : e.singular_set)
        std::printf("    singular where %s\n", s.c_str());
    }
  }
  return kExitOk;
}

int run_verify(const std::string& path, const std::string& mode_flag,
               std::size_t trajectories, double gate, bool as_json,
               std::uint64_t seed, bool inject_test, double tol) {
  SystemSpec spec = fint::load_system_spec(path);
  SystemClass cls;
  try {
    cls = fint::classify_system(spec, tol);
  } catch (const fint::ConstructionError& e) {
    std::fprintf(stderr, "classification failed: %s\n", e.what());
    return kExitClassification;
  }
  BasisMode mode = pick_mode(mode_flag, cls, spec);
  BasisResult basis;
  try {
    basis = fint::build_basis_for_class(spec, cls, mode);
  } catch (const fint::ConstructionError& e) {
    std::fprintf(stderr, "construction failed: %s\n", e.what());
    return kExitConstruction;
  }
  auto fs = basis.integrals();
  if (inject_test && !fs.empty()) {
    std::vector<double> probe(spec.n, 0.0);
    probe[0] = 1.0;
    fs.push_back(fint::IntegralExpr::add2(
        fs[0],
        fint::IntegralExpr::scale(1e-3, fint::IntegralExpr::lin_form(probe))));
  }
  fint::VerifyOptions opts;
  opts.trajectories = trajectories;
  opts.drift_gate = gate;
  opts.seed = seed;
  fint::VerificationReport report;
  try {
    report = fint::verify_integrals(spec, fs, opts);
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "verification could not run: %s\n", e.what());
    return kExitVerification;
  }
  if (as_json) {
    json j;
    j["trajectories"] = report.trajectories;
    j["independence_rank"] = report.independence;
    j["passed"] = report.passed;
    j["integrals"] = json::array();
    for (const auto& entry : report.integrals) {
      json e;
      e["expression"] = entry.expression;
      e["max_drift"] = entry.max_drift;
      e["rel_drift"] = entry.rel_drift;
      e["lie_residual"] = entry.lie_residual;
      e["crossings"] = entry.crossings;
      e["passed"] = entry.passed;
      j["integrals"].push_back(std::move(e));
    }
    std::printf("%s\n", j.dump(2).c_str());
  } else {
    for (std::size_t i = 0; i < report.integrals.size(); ++i) {
      const auto& entry = report.integrals[i];
      std::printf("integral %zu: drift %.3e (rel %.3e), lie %.3e, "
                  "crossings %zu [%s]\n",
                  i + 1, entry.max_drift, entry.rel_drift, entry.lie_residual,
                  entry.crossings, entry.passed ? "PASS" : "FAIL");
    }
    std::printf("independence rank: %zu/%zu\n", report.independence,
                report.integrals.size());
    std::printf("VERDICT: %s\n", report.passed ? "PASS" : "FAIL");
  }
  if (!report.passed) {
    for (std::size_t i = 0; i < report.integrals.size(); ++i)
      if (!report.integrals[i].passed)
        std::fprintf(stderr, "drift gate failed for integral %zu: %s\n", i + 1,
                     report.integrals[i].expression.c_str());
    return kExitVerification;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fint: first integrals of linear differential systems"};
  app.require_subcommand(1);

  std::string path, mode = "auto";
  bool as_json = false;
  double tol = 1e-7;
  std::size_t trajectories = 20;
  std::uint64_t seed = 12345;
  bool inject_test = false;

  auto* analyze = app.add_subcommand("analyze", "spectral/class analysis");
  analyze->add_option("path", path)->required();
  analyze->add_flag("--json", as_json);

  auto* basis = app.add_subcommand("basis", "construct a basis of integrals");
  basis->add_option("path", path)->required();
  basis->add_option("--mode", mode)
      ->check(CLI::IsMember({"auto", "autonomous", "full", "forced"}));
  basis->add_flag("--json", as_json);

  auto* verify = app.add_subcommand("verify", "certify integrals numerically");
  verify->add_option("path", path)->required();
  verify->add_option("--mode", mode)
      ->check(CLI::IsMember({"auto", "autonomous", "full", "forced"}));
  verify->add_option("--trajectories", trajectories);
  verify->add_option("--tol", tol);
  verify->add_option("--seed", seed);
  verify->add_flag("--json", as_json);
  verify->add_flag("--inject-test", inject_test,
                   "inject a deliberately corrupted integral (harness "
                   "self-test)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(analyze)) return run_analyze(path, as_json, 1e-8);
    if (app.got_subcommand(basis)) return run_basis(path, mode, as_json, 1e-8);
    if (app.got_subcommand(verify))
      return run_verify(path, mode, trajectories, tol, as_json, seed,
                        inject_test, 1e-8);
  } catch (const fint::ConstructionError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const fint::ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConstruction;
  }
  return kExitOk;
}
