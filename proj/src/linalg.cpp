#include "fint/linalg.hpp"

#include <Eigen/Dense>

namespace fint {

namespace {

Eigen::MatrixXcd to_eigen(const CMat& a) {
  Eigen::MatrixXcd m(a.size(), a.empty() ? 0 : a[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) m(i, j) = a[i][j];
  return m;
}

}  // namespace

QMat exact_from_real(const std::vector<std::vector<double>>& a) {
  QMat m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    m[i].reserve(a[i].size());
    for (double v : a[i])
      m[i].emplace_back(Rational::from_double_exact(v), Rational(0));
  }
  return m;
}

CMat complex_from_exact(const QMat& a) {
  CMat m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    m[i].reserve(a[i].size());
    for (const auto& v : a[i]) m[i].push_back(v.to_complex());
  }
  return m;
}

CVec complex_from_exact(const QVec& v) {
  CVec out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(x.to_complex());
  return out;
}

CMat complex_from_real(const std::vector<std::vector<double>>& a) {
  CMat m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    m[i].reserve(a[i].size());
    for (double v : a[i]) m[i].emplace_back(v, 0.0);
  }
  return m;
}

double mat_norm_2(const CMat& a) {
  if (a.empty()) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(a));
  return svd.singularValues()(0);
}

std::vector<Complex> float_eigenvalues(const CMat& a) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(to_eigen(a), false);
  std::vector<Complex> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    out.push_back(es.eigenvalues()(i));
  return out;
}

std::size_t float_rank(const CMat& a, double rel_tol) {
  if (a.empty()) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(a));
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  double thresh = rel_tol * sv(0);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++r;
  return r;
}

std::vector<CVec> float_kernel(const CMat& a, double rel_tol,
                               double scale_floor) {
  Eigen::MatrixXcd m = to_eigen(a);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double thresh =
      sv.size() ? rel_tol * std::max(sv(0), scale_floor) : 0.0;
  std::vector<CVec> basis;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    bool in_kernel = j >= sv.size() || sv(j) <= thresh;
    if (!in_kernel) continue;
    CVec v(m.cols());
    for (Eigen::Index i = 0; i < m.cols(); ++i) v[i] = svd.matrixV()(i, j);
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace fint
