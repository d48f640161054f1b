#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fint/integral_expr.hpp"
#include "fint/scalar_expr.hpp"
#include "fint/system_spec.hpp"

namespace fint {

struct Trajectory {
  std::vector<double> times;                  // strictly increasing
  std::vector<std::vector<double>> states;    // parallel to times
  std::size_t steps = 0;
  double max_local_error = 0.0;
};

// Adaptive Simpson on a scalar expression in t.
double adaptive_quad(const ScalarExpr::Ptr& f, double a, double b, double tol);

// Embedded Dormand-Prince RK45 with dense samples at >= min_samples
// evenly spaced output times (integration lands on them exactly).
Trajectory integrate_trajectory(const SystemSpec& spec,
                                const std::vector<double>& x0, double t_lo,
                                double t_hi, double tol,
                                std::size_t min_samples = 200);

struct DriftStats {
  double max_drift = 0.0;       // max |F - F0| over the best-covered segments
  double rel_drift = 0.0;       // max_drift scaled by 1 + |F0| per segment
  std::size_t crossings = 0;    // singular-set sign changes detected
  bool entire_singular = false; // no usable segment on the trajectory
};

// Max deviation of F from its value at each maximal trajectory segment
// that avoids F's singular set (denominator sign tracking splits it).
DriftStats verify_constancy(const IntegralExpr::Ptr& f, const Trajectory& traj,
                            double quad_tol = 1e-10);

// Rank of the k x (n+1) Jacobian [dF/dt, dF/dx] via pivoted elimination
// with threshold 1e-6 * largest pivot.
std::size_t independence_rank(const std::vector<IntegralExpr::Ptr>& fs,
                              const EvalPoint& p, double quad_tol = 1e-10);

struct IntegralVerification {
  std::string expression;
  double max_drift = 0.0;
  double rel_drift = 0.0;
  double lie_residual = 0.0;
  std::size_t crossings = 0;
  bool passed = false;
};

struct VerificationReport {
  std::vector<IntegralVerification> integrals;
  std::size_t independence = 0;
  EvalPoint rank_point;
  std::size_t trajectories = 0;
  bool passed = false;
};

struct VerifyOptions {
  std::size_t trajectories = 20;
  double drift_gate = 1e-7;  // relative drift threshold
  double rk_tol = 1e-10;
  double quad_tol = 1e-10;
  std::uint64_t seed = 12345;
};

// Runs N random trajectories of the system and checks every integral's
// drift plus the joint independence rank at a generic point.
VerificationReport verify_integrals(const SystemSpec& spec,
                                    const std::vector<IntegralExpr::Ptr>& fs,
                                    const VerifyOptions& opts);

// Initial state sampled from the unit ball, rejected until every singular
// denominator of the given integrals exceeds 0.1 in magnitude at t0.
std::vector<double> sample_initial_state(
    const SystemSpec& spec, const std::vector<IntegralExpr::Ptr>& fs,
    std::uint64_t seed, double quad_tol = 1e-10);

// Lie derivative dF/dt + (A(t)x + f) . dF/dx by central differences.
double lie_derivative(const SystemSpec& spec, const IntegralExpr::Ptr& f,
                      const EvalPoint& p, double quad_tol = 1e-10);

}  // namespace fint
