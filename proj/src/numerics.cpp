#include "fint/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fint/errors.hpp"
#include "fint/quad.hpp"

namespace fint {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                 kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                 kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;

using Vecd = std::vector<double>;

Vecd axpy(const Vecd& base, double h,
          std::initializer_list<std::pair<double, const Vecd*>> terms) {
  Vecd out = base;
  for (const auto& [c, k] : terms)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * c * (*k)[i];
  return out;
}

struct Rhs {
  const SystemSpec& spec;
  Vecd operator()(double t, const Vecd& x) const {
    RealMat a = spec.coefficient_at(t);
    Vecd dx(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) dx[i] += a[i][j] * x[j];
    if (spec.has_forcing()) {
      Vecd f = spec.forcing_at(t);
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] += f[i];
    }
    return dx;
  }
};

}  // namespace

double adaptive_quad(const ScalarExpr::Ptr& f, double a, double b, double tol) {
  return adaptive_simpson([&](double t) { return f->eval(t); }, a, b, tol);
}

Trajectory integrate_trajectory(const SystemSpec& spec, const Vecd& x0,
                                double t_lo, double t_hi, double tol,
                                std::size_t min_samples) {
  if (x0.size() != spec.n)
    throw ConstructionError("initial state dimension mismatch");
  Rhs rhs{spec};
  Trajectory traj;
  std::size_t grid = std::max<std::size_t>(min_samples, 2);
  traj.times.reserve(grid + 1);
  traj.states.reserve(grid + 1);
  traj.times.push_back(t_lo);
  traj.states.push_back(x0);

  double span = t_hi - t_lo;
  Vecd y = x0;
  Vecd k1 = rhs(t_lo, y);
  double h = span / 100.0;
  for (std::size_t seg = 1; seg <= grid; ++seg) {
    double t = traj.times.back();
    double t_target = t_lo + span * double(seg) / double(grid);
    while (t < t_target) {
      bool clipped = false;
      double step = h;
      if (t + step >= t_target) {
        step = t_target - t;
        clipped = true;
      }
      if (step < 1e-14 * std::fabs(span))
        throw ConvergenceError("step-size collapse near t=" + format_double(t));
      Vecd k2 = rhs(t + kA21 * step, axpy(y, step, {{kA21, &k1}}));
      Vecd k3 = rhs(t + 0.3 * step, axpy(y, step, {{kA31, &k1}, {kA32, &k2}}));
      Vecd k4 = rhs(t + 0.8 * step,
                    axpy(y, step, {{kA41, &k1}, {kA42, &k2}, {kA43, &k3}}));
      Vecd k5 = rhs(t + 8.0 / 9.0 * step,
                    axpy(y, step, {{kA51, &k1}, {kA52, &k2}, {kA53, &k3},
                                   {kA54, &k4}}));
      Vecd k6 = rhs(t + step, axpy(y, step, {{kA61, &k1}, {kA62, &k2},
                                             {kA63, &k3}, {kA64, &k4},
                                             {kA65, &k5}}));
      Vecd y5 = axpy(y, step, {{kB1, &k1}, {kB3, &k3}, {kB4, &k4}, {kB5, &k5},
                               {kB6, &k6}});
      Vecd k7 = rhs(t + step, y5);
      double err = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        double e = step * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] +
                           kE5 * k5[i] + kE6 * k6[i] + kE7 * k7[i]);
        double sc = tol + tol * std::fmax(std::fabs(y[i]), std::fabs(y5[i]));
        err = std::fmax(err, std::fabs(e) / sc);
      }
      ++traj.steps;
      if (err <= 1.0) {
        t += step;
        y = std::move(y5);
        k1 = std::move(k7);  // FSAL
        traj.max_local_error = std::fmax(traj.max_local_error, err * tol);
        if (!clipped) {
          double grow = err == 0.0 ? 5.0 : 0.9 * std::pow(err, -0.2);
          h = step * std::clamp(grow, 0.2, 5.0);
        }
      } else {
        h = step * std::clamp(0.9 * std::pow(err, -0.2), 0.05, 0.9);
      }
      for (double v : y)
        if (!std::isfinite(v))
          throw ConvergenceError("trajectory diverged near t=" +
                                 format_double(t));
    }
    traj.times.push_back(t_target);
    traj.states.push_back(y);
  }
  return traj;
}

DriftStats verify_constancy(const IntegralExpr::Ptr& f, const Trajectory& traj,
                            double quad_tol) {
  std::vector<IntegralExpr::Ptr> dens;
  f->collect_denominators(dens);
  {  // structural dedupe
    std::set<std::string> seen;
    std::vector<IntegralExpr::Ptr> unique;
    for (const auto& d : dens)
      if (seen.insert(d->format()).second) unique.push_back(d);
    dens = std::move(unique);
  }

  std::size_t samples = traj.times.size();
  std::vector<std::vector<double>> den_vals(dens.size(),
                                            std::vector<double>(samples));
  std::vector<double> den_scale(dens.size(), 1.0);
  std::vector<bool> valid(samples, true);
  for (std::size_t i = 0; i < samples; ++i) {
    EvalPoint p{traj.times[i], traj.states[i]};
    for (std::size_t d = 0; d < dens.size(); ++d) {
      double v;
      try {
        v = dens[d]->eval(p, quad_tol);
      } catch (const DomainError&) {
        v = 0.0;
      }
      den_vals[d][i] = v;
      den_scale[d] = std::fmax(den_scale[d], std::fabs(v));
    }
  }
  for (std::size_t i = 0; i < samples; ++i)
    for (std::size_t d = 0; d < dens.size(); ++d)
      if (std::fabs(den_vals[d][i]) < 1e-6 * den_scale[d]) valid[i] = false;

  DriftStats stats;
  std::size_t i = 0;
  bool any_segment = false;
  while (i < samples) {
    if (!valid[i]) {
      ++i;
      continue;
    }
    // Extend the segment while samples stay valid and no denominator
    // changes sign relative to the segment start.
    std::size_t j = i;
    while (j + 1 < samples && valid[j + 1]) {
      bool flip = false;
      for (std::size_t d = 0; d < dens.size(); ++d)
        if (std::signbit(den_vals[d][j + 1]) != std::signbit(den_vals[d][i]))
          flip = true;
      if (flip) break;
      ++j;
    }
    if (j > i) {
      any_segment = true;
      double f0 = 0.0;
      bool have_f0 = false;
      for (std::size_t k = i; k <= j; ++k) {
        EvalPoint p{traj.times[k], traj.states[k]};
        double v;
        try {
          v = f->eval(p, quad_tol);
        } catch (const DomainError&) {
          continue;
        }
        if (!have_f0) {
          f0 = v;
          have_f0 = true;
          continue;
        }
        double drift = std::fabs(v - f0);
        stats.max_drift = std::fmax(stats.max_drift, drift);
        stats.rel_drift =
            std::fmax(stats.rel_drift, drift / (1.0 + std::fabs(f0)));
      }
    }
    if (j + 1 < samples && valid[j + 1]) ++stats.crossings;
    i = j + 1;
  }
  stats.entire_singular = !any_segment;
  return stats;
}

std::size_t independence_rank(const std::vector<IntegralExpr::Ptr>& fs,
                              const EvalPoint& p, double quad_tol) {
  if (fs.empty()) return 0;
  std::size_t cols = p.x.size() + 1;
  std::vector<std::vector<double>> jac;
  for (const auto& f : fs) {
    std::vector<double> row(cols);
    for (std::size_t v = 0; v < cols; ++v)
      row[v] = numeric_partial(f, p, v, quad_tol);
    // Functional independence is invariant under scaling each function,
    // so rows are normalized; a gradient that is negligible against the
    // function's own magnitude is a constant in disguise and stays zero.
    double row_norm = 0.0;
    for (double v : row) row_norm = std::fmax(row_norm, std::fabs(v));
    double f_scale = 1.0;
    try {
      f_scale += std::fabs(f->eval(p, quad_tol));
    } catch (const DomainError&) {
    }
    if (row_norm > 1e-8 * f_scale)
      for (double& v : row) v /= row_norm;
    else
      for (double& v : row) v = 0.0;
    jac.push_back(std::move(row));
  }
  // Pivoted elimination with threshold relative to the largest pivot seen.
  std::size_t rank = 0;
  double largest_pivot = 0.0;
  std::vector<bool> used_row(jac.size(), false);
  for (std::size_t iter = 0; iter < std::min(jac.size(), cols); ++iter) {
    std::size_t best_r = 0, best_c = 0;
    double best = 0.0;
    for (std::size_t r = 0; r < jac.size(); ++r) {
      if (used_row[r]) continue;
      for (std::size_t c = 0; c < cols; ++c)
        if (std::fabs(jac[r][c]) > best) {
          best = std::fabs(jac[r][c]);
          best_r = r;
          best_c = c;
        }
    }
    largest_pivot = std::fmax(largest_pivot, best);
    if (best <= 1e-6 * largest_pivot) break;
    ++rank;
    used_row[best_r] = true;
    for (std::size_t r = 0; r < jac.size(); ++r) {
      if (used_row[r]) continue;
      double factor = jac[r][best_c] / jac[best_r][best_c];
      for (std::size_t c = 0; c < cols; ++c)
        jac[r][c] -= factor * jac[best_r][c];
    }
  }
  return rank;
}

std::vector<double> sample_initial_state(
    const SystemSpec& spec, const std::vector<IntegralExpr::Ptr>& fs,
    std::uint64_t seed, double quad_tol) {
  std::vector<IntegralExpr::Ptr> dens;
  for (const auto& f : fs) f->collect_denominators(dens);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double t0 = spec.anchor();
  for (int attempt = 0; attempt < 2000; ++attempt) {
    std::vector<double> x(spec.n);
    double norm2 = 0.0;
    for (auto& v : x) {
      v = unit(rng);
      norm2 += v * v;
    }
    if (norm2 > 1.0 || norm2 == 0.0) continue;
    bool ok = true;
    EvalPoint p{t0, x};
    for (const auto& d : dens) {
      double v;
      try {
        v = d->eval(p, quad_tol);
      } catch (const DomainError&) {
        ok = false;
        break;
      }
      if (std::fabs(v) <= 0.1) {
        ok = false;
        break;
      }
    }
    if (ok) return x;
  }
  throw ConstructionError(
      "could not sample an initial state clear of the singular sets");
}

double lie_derivative(const SystemSpec& spec, const IntegralExpr::Ptr& f,
                      const EvalPoint& p, double quad_tol) {
  double v = numeric_partial(f, p, 0, quad_tol);
  RealMat a = spec.coefficient_at(p.t);
  std::vector<double> vel(spec.n, 0.0);
  for (std::size_t i = 0; i < spec.n; ++i)
    for (std::size_t j = 0; j < spec.n; ++j) vel[i] += a[i][j] * p.x[j];
  if (spec.has_forcing()) {
    auto fr = spec.forcing_at(p.t);
    for (std::size_t i = 0; i < spec.n; ++i) vel[i] += fr[i];
  }
  for (std::size_t i = 0; i < spec.n; ++i)
    v += vel[i] * numeric_partial(f, p, i + 1, quad_tol);
  return v;
}

VerificationReport verify_integrals(const SystemSpec& spec,
                                    const std::vector<IntegralExpr::Ptr>& fs,
                                    const VerifyOptions& opts) {
  VerificationReport report;
  report.trajectories = opts.trajectories;
  report.integrals.resize(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    report.integrals[i].expression = fs[i]->format();
    report.integrals[i].passed = true;
  }

  for (std::size_t run = 0; run < opts.trajectories; ++run) {
    auto x0 = sample_initial_state(spec, fs, opts.seed + run, opts.quad_tol);
    Trajectory traj = integrate_trajectory(spec, x0, spec.t_lo, spec.t_hi,
                                           opts.rk_tol);
    for (std::size_t i = 0; i < fs.size(); ++i) {
      DriftStats stats = verify_constancy(fs[i], traj, opts.quad_tol);
      auto& entry = report.integrals[i];
      entry.max_drift = std::fmax(entry.max_drift, stats.max_drift);
      entry.rel_drift = std::fmax(entry.rel_drift, stats.rel_drift);
      entry.crossings += stats.crossings;
      if (run == 0) {
        // Lie residual probed at a few interior points of the first run.
        for (std::size_t s = 1; s + 1 < traj.times.size();
             s += traj.times.size() / 8 + 1) {
          EvalPoint p{traj.times[s], traj.states[s]};
          try {
            entry.lie_residual = std::fmax(
                entry.lie_residual,
                std::fabs(lie_derivative(spec, fs[i], p, opts.quad_tol)));
          } catch (const DomainError&) {
          }
        }
      }
    }
  }
  for (auto& entry : report.integrals)
    entry.passed = entry.rel_drift <= opts.drift_gate;

  report.rank_point =
      EvalPoint{spec.anchor(),
                sample_initial_state(spec, fs, opts.seed + 7919, opts.quad_tol)};
  std::size_t best_rank = 0;
  for (int probe = 0; probe < 6; ++probe) {
    EvalPoint p{spec.anchor(), sample_initial_state(spec, fs,
                                                    opts.seed + 7919 + probe,
                                                    opts.quad_tol)};
    std::size_t r = independence_rank(fs, p, opts.quad_tol);
    if (r > best_rank) {
      best_rank = r;
      report.rank_point = p;
    }
    if (best_rank == fs.size()) break;
  }
  report.independence = best_rank;
  report.passed = report.independence == fs.size();
  for (const auto& entry : report.integrals)
    report.passed = report.passed && entry.passed;
  return report;
}

}  // namespace fint
