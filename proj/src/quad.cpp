#include "fint/quad.hpp"

#include <cmath>

#include "fint/errors.hpp"
#include "fint/numbers.hpp"

namespace fint {

namespace {

double simpson(double h, double fa, double fc, double fb) {
  return (fa + 4.0 * fc + fb) * (h / 6.0);
}

double simpson_ad(const std::function<double(double)>& f, double a, double c,
                  double b, double fa, double fc, double fb, double whole,
                  double tol, int depth) {
  double ca = 0.5 * (a + c);
  double cb = 0.5 * (c + b);
  double fca = f(ca);
  double fcb = f(cb);
  if (!std::isfinite(fca) || !std::isfinite(fcb))
    throw DomainError("singular integrand near t=" + format_double(c));
  double h2 = 0.5 * (b - a);
  double left = simpson(h2, fa, fca, fc);
  double right = simpson(h2, fc, fcb, fb);
  double err = (left + right - whole) / 15.0;
  if (std::fabs(err) <= tol * std::fmax(1.0, std::fabs(left + right)) ||
      depth <= 0) {
    if (depth <= 0 &&
        std::fabs(err) > 1e3 * tol * std::fmax(1.0, std::fabs(left + right)))
      throw ConvergenceError("quadrature did not converge at depth 40");
    return left + right + err;
  }
  return simpson_ad(f, a, ca, c, fa, fca, fc, left, 0.5 * tol, depth - 1) +
         simpson_ad(f, c, cb, b, fc, fcb, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  if (a == b) return 0.0;
  double c = 0.5 * (a + b);
  double fa = f(a);
  double fb = f(b);
  double fc = f(c);
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fc))
    throw DomainError("singular integrand on quadrature interval");
  double whole = simpson(b - a, fa, fc, fb);
  return simpson_ad(f, a, c, b, fa, fc, fb, whole, tol, 40);
}

}  // namespace fint
