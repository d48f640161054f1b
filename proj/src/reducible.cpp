#include "fint/reducible.hpp"

#include <cfloat>
#include <cmath>

#include "fint/errors.hpp"
#include "fint/numerics.hpp"

namespace fint {

namespace {

double det_real(std::vector<std::vector<double>> m) {
  std::size_t n = m.size();
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(m[r][col]) > std::fabs(m[best][col])) best = r;
    if (m[best][col] == 0.0) return 0.0;
    if (best != col) {
      std::swap(m[best], m[col]);
      det = -det;
    }
    det *= m[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return det;
}

double scalar_derivative(const ScalarExpr::Ptr& e, double t) {
  static const double eps_cbrt = std::cbrt(DBL_EPSILON);
  double h = eps_cbrt * (1.0 + std::fabs(t));
  volatile double hi = t + h;
  volatile double lo = t - h;
  return (e->eval(hi) - e->eval(lo)) / (hi - lo);
}

}  // namespace

ReductionReport check_reduction(const SystemSpec& spec, double tol) {
  (void)tol;
  if (!spec.reduction)
    throw ConstructionError("system has no reduction data");
  const Reduction& red = *spec.reduction;
  std::size_t n = spec.n;
  ReductionReport report;
  report.grid_points = 50;
  report.min_abs_det = HUGE_VAL;
  for (std::size_t s = 0; s < report.grid_points; ++s) {
    double t = spec.t_lo +
               (spec.t_hi - spec.t_lo) * (double(s) + 0.5) /
                   double(report.grid_points);
    double sprime = red.time_scale == TimeScale::Log ? 1.0 / t : 1.0;
    RealMat a = spec.coefficient_at(t);
    std::vector<std::vector<double>> g(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i][j] = red.g[i][j]->eval(t);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double gp = scalar_derivative(red.g[i][j], t);
        double bg = 0.0, ga = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          bg += red.b[i][k] * g[k][j];
          ga += g[i][k] * a[k][j];
        }
        report.max_residual =
            std::fmax(report.max_residual, std::fabs(gp - sprime * bg + ga));
      }
    report.min_abs_det = std::fmin(report.min_abs_det, std::fabs(det_real(g)));
  }
  return report;
}

BasisResult reducible_integrals(const SystemSpec& spec, double tol) {
  if (!spec.reduction)
    throw ConstructionError("system has no reduction data");
  ReductionReport report = check_reduction(spec, tol);
  if (report.max_residual > tol)
    throw ConstructionError("reduction identity residual " +
                            format_double(report.max_residual) +
                            " exceeds tolerance " + format_double(tol));
  if (report.min_abs_det <= tol)
    throw ConstructionError("transformation matrix is singular on the window");

  const Reduction& red = *spec.reduction;
  SpectralData sd = spectrum_of_transpose(red.b);

  CtorOptions opts;
  auto transform = std::make_shared<Transform>();
  transform->g = red.g;
  opts.transform = std::move(transform);
  opts.log_time = red.time_scale == TimeScale::Log;
  opts.t0 = spec.anchor();
  opts.section3_names = true;

  BasisResult result;
  result.mode = spec.has_forcing() ? BasisMode::Forced : BasisMode::Full;
  for (const auto& chain : sd.chains) {
    if (chain.lambda.imag() < 0.0) continue;  // conjugate mirror
    if (spec.has_forcing()) {
      auto built = chain.multiplicity() == 1
                       ? forced_integral(chain, spec, opts)
                       : forced_chain_integrals(chain, spec, opts);
      for (auto& e : built) result.entries.push_back(std::move(e));
      continue;
    }
    // Homogeneous: Theorem 3.1/3.2 on the eigenvector, Theorem 3.3 for
    // the first generalized vector, Theorem 3.4 Psi's beyond that.
    EigenChain head = chain;
    head.vectors.resize(1);
    if (head.exact) head.vectors_exact.resize(1);
    for (auto& e : time_anchored_integral(head, opts))
      result.entries.push_back(std::move(e));
    if (chain.multiplicity() >= 2)
      for (auto& e : time_anchored_integral(chain, opts))
        result.entries.push_back(std::move(e));
    if (chain.multiplicity() >= 3)
      for (auto& e : psi_evaluators(chain, opts))
        result.entries.push_back(std::move(e));
  }
  if (result.entries.size() != spec.n)
    throw ConstructionError("reducible basis has " +
                            std::to_string(result.entries.size()) +
                            " integrals, expected " + std::to_string(spec.n));
  std::vector<IntegralExpr::Ptr> fs;
  for (const auto& e : result.entries) fs.push_back(e.integral);
  std::size_t rank = 0;
  for (std::uint64_t probe = 0; probe < 4 && rank < spec.n; ++probe) {
    try {
      EvalPoint p{spec.anchor(), sample_initial_state(spec, fs, 1000 + probe)};
      rank = std::max(rank, independence_rank(fs, p));
    } catch (const std::runtime_error&) {
    }
  }
  if (rank != spec.n)
    throw ConstructionError("reducible basis rank " + std::to_string(rank) +
                            " below dimension " + std::to_string(spec.n));
  return result;
}

}  // namespace fint
