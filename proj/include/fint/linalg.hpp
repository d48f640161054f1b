#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "fint/numbers.hpp"

namespace fint {

// Dense row-major matrix over an arbitrary field (GaussianRational,
// Rational, or std::complex<double>). Sizes here are tiny (n <= ~10),
// so clarity beats cleverness.
template <typename F>
using Mat = std::vector<std::vector<F>>;
template <typename F>
using Vec = std::vector<F>;

using CMat = Mat<Complex>;
using CVec = Vec<Complex>;
using QMat = Mat<GaussianRational>;
using QVec = Vec<GaussianRational>;

inline bool is_field_zero(const GaussianRational& x) { return x.is_zero(); }
inline bool is_field_zero(const Rational& x) { return x.is_zero(); }
inline bool is_field_zero(const Complex& x) { return x == Complex(0.0, 0.0); }

// Pivot magnitude used for pivot selection inside elimination.
inline double pivot_size(const GaussianRational& x) {
  return x.is_zero() ? 0.0 : 1.0;
}
inline double pivot_size(const Rational& x) { return x.is_zero() ? 0.0 : 1.0; }
inline double pivot_size(const Complex& x) { return std::abs(x); }

template <typename F>
Mat<F> identity_matrix(std::size_t n) {
  Mat<F> m(n, Vec<F>(n, F(0)));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = F(1);
  return m;
}

template <typename F>
Mat<F> mat_mul(const Mat<F>& a, const Mat<F>& b) {
  std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Mat<F> c(n, Vec<F>(m, F(0)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      if (is_field_zero(a[i][l])) continue;
      for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
    }
  return c;
}

template <typename F>
Vec<F> mat_vec(const Mat<F>& a, const Vec<F>& x) {
  Vec<F> y(a.size(), F(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
  return y;
}

template <typename F>
Mat<F> mat_transpose(const Mat<F>& a) {
  std::size_t n = a.size(), m = a.empty() ? 0 : a[0].size();
  Mat<F> t(m, Vec<F>(n, F(0)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) t[j][i] = a[i][j];
  return t;
}

// Reduced row echelon form of an augmented system [a | rhs...] in place.
// `zero_tol` only matters for floating-point fields (exact fields pass 0).
// Returns the pivot column of each pivot row.
template <typename F>
std::vector<std::size_t> rref(Mat<F>& m, std::size_t cols, double zero_tol) {
  std::vector<std::size_t> pivots;
  std::size_t row = 0;
  for (std::size_t col = 0; col < cols && row < m.size(); ++col) {
    std::size_t best = row;
    double best_sz = pivot_size(m[row][col]);
    for (std::size_t r = row + 1; r < m.size(); ++r) {
      double sz = pivot_size(m[r][col]);
      if (sz > best_sz) {
        best = r;
        best_sz = sz;
      }
    }
    if (best_sz <= zero_tol) continue;
    std::swap(m[row], m[best]);
    F inv = F(1) / m[row][col];
    for (auto& v : m[row]) v = v * inv;
    m[row][col] = F(1);
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == row || is_field_zero(m[r][col])) continue;
      F factor = m[r][col];
      for (std::size_t c = 0; c < m[r].size(); ++c)
        m[r][c] = m[r][c] - factor * m[row][c];
      m[r][col] = F(0);
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

template <typename F>
std::size_t mat_rank(Mat<F> m, double zero_tol) {
  if (m.empty()) return 0;
  return rref(m, m[0].size(), zero_tol).size();
}

// Kernel basis; free variables are set one at a time to 1 (deterministic).
template <typename F>
std::vector<Vec<F>> kernel_basis(Mat<F> m, double zero_tol) {
  std::size_t n = m.empty() ? 0 : m[0].size();
  auto pivots = rref(m, n, zero_tol);
  std::vector<bool> is_pivot(n, false);
  for (auto p : pivots) is_pivot[p] = true;
  std::vector<Vec<F>> basis;
  for (std::size_t free_col = 0; free_col < n; ++free_col) {
    if (is_pivot[free_col]) continue;
    Vec<F> v(n, F(0));
    v[free_col] = F(1);
    for (std::size_t r = 0; r < pivots.size(); ++r)
      v[pivots[r]] = -m[r][free_col];
    basis.push_back(std::move(v));
  }
  return basis;
}

// Particular solution of a x = b with all free variables set to zero.
// This is the gauge every chain construction uses: it is deterministic and
// reproduces hand calculations that substitute zero for free parameters.
template <typename F>
std::optional<Vec<F>> solve_particular(Mat<F> a, const Vec<F>& b,
                                       double zero_tol) {
  std::size_t n = a.empty() ? 0 : a[0].size();
  for (std::size_t i = 0; i < a.size(); ++i) a[i].push_back(b[i]);
  auto pivots = rref(a, n, zero_tol);
  // Inconsistent if some row is [0 ... 0 | nonzero].
  for (std::size_t r = pivots.size(); r < a.size(); ++r)
    if (pivot_size(a[r][n]) > (zero_tol > 0 ? 64 * zero_tol : 0.0))
      return std::nullopt;
  Vec<F> x(n, F(0));
  for (std::size_t r = 0; r < pivots.size(); ++r) x[pivots[r]] = a[r][n];
  return x;
}

// Faddeev-LeVerrier: coefficients of det(lambda I - A) =
// lambda^n + c[0] lambda^(n-1) + ... + c[n-1], computed in the field F.
template <typename F>
Vec<F> char_poly(const Mat<F>& a) {
  std::size_t n = a.size();
  Mat<F> m = identity_matrix<F>(n);
  Vec<F> coeffs;
  for (std::size_t k = 1; k <= n; ++k) {
    m = mat_mul(a, m);
    F tr = F(0);
    for (std::size_t i = 0; i < n; ++i) tr += m[i][i];
    F c = -(tr / F(static_cast<long long>(k)));
    coeffs.push_back(c);
    for (std::size_t i = 0; i < n; ++i) m[i][i] += c;
  }
  return coeffs;
}

// ----- conversions -------------------------------------------------------

QMat exact_from_real(const std::vector<std::vector<double>>& a);
CMat complex_from_exact(const QMat& a);
CVec complex_from_exact(const QVec& v);
CMat complex_from_real(const std::vector<std::vector<double>>& a);

double mat_norm_2(const CMat& a);  // spectral norm via singular values

// Floating-point helpers backed by Eigen (declared here, defined in .cpp
// to keep Eigen out of public headers).
std::vector<Complex> float_eigenvalues(const CMat& a);
std::size_t float_rank(const CMat& a, double rel_tol);
// Kernel basis with threshold rel_tol * max(largest singular value,
// scale_floor); the floor keeps an all-but-zero matrix from looking
// full-rank under a purely relative test.
std::vector<CVec> float_kernel(const CMat& a, double rel_tol,
                               double scale_floor = 1.0);

}  // namespace fint
