#pragma once

#include <functional>

namespace fint {

// Adaptive Simpson integration of f over [a, b]. The error target is
// tol in absolute terms and tol relative to the running magnitude,
// whichever is looser. Throws ConvergenceError past depth 40 and
// DomainError if the integrand is singular inside the interval.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol);

}  // namespace fint
