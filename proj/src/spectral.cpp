#include "fint/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fint/errors.hpp"

namespace fint {

namespace {

// ----- generic helpers over both scalar fields ---------------------------

RealMat transpose_real(const RealMat& a) {
  std::size_t n = a.size();
  RealMat t(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) t[j][i] = a[i][j];
  return t;
}

double real_mat_scale(const RealMat& a) {
  double s = 0.0;
  for (const auto& row : a)
    for (double v : row) s = std::fmax(s, std::fabs(v));
  return std::fmax(s, 1.0);
}

GaussianRational poly_eval(const std::vector<GaussianRational>& coeffs,
                           const GaussianRational& x) {
  // coeffs are c1..cn of the monic polynomial.
  GaussianRational acc(1);
  for (const auto& c : coeffs) acc = acc * x + c;
  return acc;
}

// Divides the monic polynomial by (l - root); returns quotient coefficients
// (again without the leading 1) and the remainder.
std::pair<std::vector<GaussianRational>, GaussianRational> synthetic_divide(
    const std::vector<GaussianRational>& coeffs, const GaussianRational& root) {
  std::vector<GaussianRational> q;
  GaussianRational acc(1);
  for (std::size_t i = 0; i + 1 < coeffs.size(); ++i) {
    acc = acc * root + coeffs[i];
    q.push_back(acc);
  }
  GaussianRational rem = coeffs.empty()
                             ? GaussianRational(1)
                             : acc * root + coeffs.back();
  return {std::move(q), rem};
}

std::optional<GaussianRational> recognize_gaussian(const Complex& z,
                                                   double tol) {
  auto re = Rational::recognize(z.real(), 100000, tol);
  auto im = Rational::recognize(z.imag(), 100000, tol);
  if (!re || !im) return std::nullopt;
  return GaussianRational(*re, *im);
}

// Defective eigenvalues are only accurate to about eps^(1/m) in floating
// point, so recognition works down a tolerance ladder. A wrong guess is
// harmless: every candidate must still vanish exactly in the polynomial.
std::optional<GaussianRational> recognize_root_candidate(
    const Complex& z, const std::vector<GaussianRational>& coeffs,
    double scale) {
  static const std::pair<long long, double> ladder[] = {
      {64, 2e-2}, {4096, 1e-4}, {100000, 1e-8}};
  for (const auto& [max_den, tol] : ladder) {
    auto re = Rational::recognize(z.real(), max_den, tol * scale);
    auto im = Rational::recognize(z.imag(), max_den, tol * scale);
    if (!re || !im) continue;
    GaussianRational cand(*re, *im);
    if (poly_eval(coeffs, cand).is_zero()) return cand;
  }
  return std::nullopt;
}

// Smallest-integer scaling with positive leading entry; rescales the whole
// chain by the same factor so the chain identities survive.
void normalize_chain_exact(std::vector<QVec>& chain) {
  if (chain.empty() || chain[0].empty()) return;
  const QVec& head = chain[0];
  BigInt lcm_den(1);
  for (const auto& c : head) {
    for (const Rational* part : {&c.re, &c.im}) {
      if (part->is_zero()) continue;
      BigInt d = part->den();
      BigInt g = boost::multiprecision::gcd(lcm_den, d);
      lcm_den = lcm_den / g * d;
    }
  }
  BigInt gcd_num(0);
  for (const auto& c : head) {
    for (const Rational* part : {&c.re, &c.im}) {
      if (part->is_zero()) continue;
      BigInt scaled = part->num() * (lcm_den / part->den());
      gcd_num = boost::multiprecision::gcd(gcd_num, scaled < 0 ? -scaled : scaled);
    }
  }
  if (gcd_num == 0) return;
  Rational factor(lcm_den, gcd_num);
  // Positive leading nonzero entry (real part first, imaginary as fallback).
  for (const auto& c : head) {
    if (!c.re.is_zero()) {
      if ((c.re * factor).sign() < 0) factor = -factor;
      break;
    }
    if (!c.im.is_zero()) {
      if ((c.im * factor).sign() < 0) factor = -factor;
      break;
    }
  }
  for (auto& vec : chain)
    for (auto& c : vec) {
      c.re *= factor;
      c.im *= factor;
    }
}

void normalize_chain_float(std::vector<CVec>& chain) {
  if (chain.empty() || chain[0].empty()) return;
  double maxmag = 0.0;
  for (const auto& c : chain[0]) maxmag = std::fmax(maxmag, std::abs(c));
  if (maxmag == 0.0) return;
  Complex lead(0.0);
  for (const auto& c : chain[0])
    if (std::abs(c) > 1e-7 * maxmag) {
      lead = c;
      break;
    }
  if (lead == Complex(0.0)) return;
  for (auto& vec : chain)
    for (auto& c : vec) c /= lead;
}

CVec complex_view(const QVec& v) { return complex_from_exact(v); }

template <typename F>
Mat<F> shift_matrix(const Mat<F>& b, const F& lambda) {
  Mat<F> m = b;
  for (std::size_t i = 0; i < m.size(); ++i) m[i][i] -= lambda;
  return m;
}

// Jordan block lengths for one eigenvalue from the kernel filtration.
template <typename F>
std::vector<std::size_t> block_lengths(const Mat<F>& m, std::size_t alg_mult,
                                       double zero_tol) {
  std::size_t n = m.size();
  std::vector<std::size_t> nullity{0};
  Mat<F> power = identity_matrix<F>(n);
  for (std::size_t k = 1; k <= alg_mult + 1 && k <= n; ++k) {
    power = mat_mul(power, m);
    nullity.push_back(n - mat_rank(power, zero_tol));
    if (nullity.back() == alg_mult) break;
  }
  if (nullity.back() != alg_mult)
    throw ClusterAmbiguityError(
        "kernel filtration does not reach the algebraic multiplicity");
  // b_k = #blocks of size >= k; lengths via the conjugate partition.
  std::vector<std::size_t> lengths;
  for (std::size_t k = 1; k < nullity.size(); ++k) {
    std::size_t blocks_ge_k = nullity[k] - nullity[k - 1];
    if (lengths.size() < blocks_ge_k) lengths.resize(blocks_ge_k, 0);
    for (std::size_t i = 0; i < blocks_ge_k; ++i) lengths[i] = k;
  }
  std::sort(lengths.begin(), lengths.end(), std::greater<>());
  return lengths;
}

template <typename F>
std::vector<Vec<F>> kernel_of_power(const Mat<F>& m, std::size_t k,
                                    double zero_tol) {
  Mat<F> power = identity_matrix<F>(m.size());
  for (std::size_t i = 0; i < k; ++i) power = mat_mul(power, m);
  return kernel_basis(power, zero_tol);
}

template <typename F>
bool independent_of(const std::vector<Vec<F>>& span, const Vec<F>& v,
                    double zero_tol) {
  Mat<F> rows = span;
  std::size_t base = mat_rank(rows, zero_tol);
  rows.push_back(v);
  return mat_rank(rows, zero_tol) > base;
}

// All Jordan chains of `b` for eigenvalue `lambda` in the k-scaled
// convention; deterministic generator choice, hand-calculation gauge where possible.
template <typename F>
std::vector<std::vector<Vec<F>>> build_chains_for(const Mat<F>& b,
                                                  const F& lambda,
                                                  std::size_t alg_mult,
                                                  double zero_tol) {
  Mat<F> m = shift_matrix(b, lambda);
  auto lengths = block_lengths(m, alg_mult, zero_tol);
  std::vector<std::vector<Vec<F>>> chains;
  std::vector<Vec<F>> used;  // every chain vector already committed
  for (std::size_t len : lengths) {
    auto k_lo = len == 1 ? std::vector<Vec<F>>{}
                         : kernel_of_power(m, len - 1, zero_tol);
    auto k_hi = kernel_of_power(m, len, zero_tol);
    std::vector<Vec<F>> barrier = k_lo;
    barrier.insert(barrier.end(), used.begin(), used.end());
    bool built = false;
    for (const auto& u : k_hi) {
      if (!independent_of(barrier, u, zero_tol)) continue;
      // Downward pass in the standard scaling, then k-rescale.
      std::vector<Vec<F>> std_chain(len);
      std_chain[len - 1] = u;
      for (std::size_t k = len - 1; k > 0; --k)
        std_chain[k - 1] = mat_vec(m, std_chain[k]);
      std::vector<Vec<F>> chain(len);
      F factorial(1);
      for (std::size_t k = 0; k < len; ++k) {
        if (k > 0) factorial *= F(static_cast<long long>(k));
        chain[k] = std_chain[k];
        for (auto& c : chain[k]) c *= factorial;
      }
      // Joint independence of everything committed plus this chain.
      std::vector<Vec<F>> all = used;
      all.insert(all.end(), chain.begin(), chain.end());
      if (mat_rank(all, zero_tol) != all.size()) continue;
      chains.push_back(chain);
      used.insert(used.end(), chain.begin(), chain.end());
      built = true;
      break;
    }
    if (!built)
      throw ClusterAmbiguityError("no solvable chain of length " +
                                  std::to_string(len));
  }
  return chains;
}

// Re-solves a chain upward from its (already normalized) eigenvector with
// free variables pinned to zero. This is the gauge of the worked examples;
// kept only when the joint system stays independent.
template <typename F>
void prettify_chains(const Mat<F>& b, const F& lambda,
                     std::vector<std::vector<Vec<F>>>& chains,
                     double zero_tol) {
  Mat<F> m = shift_matrix(b, lambda);
  std::vector<std::vector<Vec<F>>> pretty = chains;
  for (auto& chain : pretty) {
    for (std::size_t k = 1; k < chain.size(); ++k) {
      Vec<F> rhs = chain[k - 1];
      for (auto& c : rhs) c *= F(static_cast<long long>(k));
      auto sol = solve_particular(m, rhs, zero_tol);
      if (!sol) return;  // keep the original gauge
      chain[k] = *sol;
    }
  }
  std::vector<Vec<F>> all;
  for (const auto& chain : pretty)
    all.insert(all.end(), chain.begin(), chain.end());
  if (mat_rank(all, zero_tol) == all.size()) chains = std::move(pretty);
}

struct ExactRoot {
  GaussianRational value;
  std::size_t multiplicity;
};

// Float discovery + exact certification of the spectrum of an exact matrix.
std::optional<std::vector<ExactRoot>> certify_roots(
    const QMat& b, const std::vector<GaussianRational>& coeffs,
    const std::vector<Complex>& float_eigs, double scale) {
  std::vector<ExactRoot> roots;
  std::vector<GaussianRational> seen;
  std::size_t total = 0;
  for (const Complex& mu : float_eigs) {
    auto cand = recognize_root_candidate(mu, coeffs, scale);
    if (!cand) return std::nullopt;
    bool dup = false;
    for (const auto& s : seen)
      if (s == *cand) dup = true;
    if (dup) continue;
    seen.push_back(*cand);
    // Multiplicity by repeated exact deflation.
    std::size_t mult = 0;
    std::vector<GaussianRational> work = coeffs;
    for (;;) {
      auto [q, rem] = synthetic_divide(work, *cand);
      if (!rem.is_zero()) break;
      ++mult;
      work = std::move(q);
      if (work.empty()) break;
    }
    if (mult == 0) return std::nullopt;
    roots.push_back({*cand, mult});
    total += mult;
  }
  if (total != b.size()) return std::nullopt;
  return roots;
}

EigenChain make_exact_chain(const GaussianRational& lambda,
                            std::vector<QVec> vectors) {
  EigenChain c;
  c.exact = true;
  c.lambda_exact = lambda;
  c.lambda = lambda.to_complex();
  c.vectors_exact = std::move(vectors);
  for (const auto& v : c.vectors_exact) c.vectors.push_back(complex_view(v));
  return c;
}

EigenChain conjugate_chain(const EigenChain& c) {
  EigenChain out = c;
  out.lambda = std::conj(out.lambda);
  for (auto& v : out.vectors)
    for (auto& z : v) z = std::conj(z);
  if (out.exact) {
    out.lambda_exact = out.lambda_exact.conj();
    for (auto& v : out.vectors_exact)
      for (auto& z : v) z = z.conj();
  }
  return out;
}

bool chain_less(const EigenChain& a, const EigenChain& b) {
  if (a.lambda.real() != b.lambda.real())
    return a.lambda.real() < b.lambda.real();
  if (a.lambda.imag() != b.lambda.imag())
    return a.lambda.imag() < b.lambda.imag();
  return a.multiplicity() < b.multiplicity();
}

// Clusters float eigenvalues of a real matrix and symmetrizes conjugates.
std::vector<std::pair<Complex, std::size_t>> cluster_eigenvalues(
    std::vector<Complex> eigs, double tol_abs) {
  std::sort(eigs.begin(), eigs.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  std::vector<std::pair<Complex, std::size_t>> clusters;
  std::vector<bool> taken(eigs.size(), false);
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    if (taken[i]) continue;
    Complex sum = eigs[i];
    std::size_t count = 1;
    taken[i] = true;
    for (std::size_t j = i + 1; j < eigs.size(); ++j) {
      if (taken[j]) continue;
      if (std::abs(eigs[j] - sum / double(count)) < tol_abs) {
        sum += eigs[j];
        ++count;
        taken[j] = true;
      }
    }
    Complex mean = sum / double(count);
    if (std::fabs(mean.imag()) < tol_abs) mean = Complex(mean.real(), 0.0);
    clusters.push_back({mean, count});
  }
  return clusters;
}

}  // namespace

bool EigenChain::is_real() const {
  for (const auto& v : vectors)
    for (const auto& z : v)
      if (z.imag() != 0.0) return false;
  return lambda.imag() == 0.0;
}

std::vector<double> EigenChain::re(std::size_t k) const {
  std::vector<double> out(vectors[k].size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = vectors[k][j].real();
  return out;
}

std::vector<double> EigenChain::im(std::size_t k) const {
  std::vector<double> out(vectors[k].size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = vectors[k][j].imag();
  return out;
}

bool CommonEigenvector::is_real() const {
  for (const auto& z : nu)
    if (z.imag() != 0.0) return false;
  return true;
}

SpectralData spectrum_of_transpose(const RealMat& a, double tol) {
  RealMat b_real = transpose_real(a);
  std::size_t n = a.size();
  SpectralData out;
  out.dimension = n;

  QMat b_exact = exact_from_real(b_real);
  auto coeffs_exact = char_poly(b_exact);
  out.char_poly.reserve(n);
  for (const auto& c : coeffs_exact) out.char_poly.push_back(c.to_complex());

  CMat b_c = complex_from_real(b_real);
  double scale = real_mat_scale(b_real);
  auto float_eigs = float_eigenvalues(b_c);

  if (auto roots = certify_roots(b_exact, coeffs_exact, float_eigs, scale)) {
    out.exact = true;
    for (const auto& root : *roots) {
      if (root.value.im.sign() < 0) continue;  // conjugates mirrored below
      auto chains =
          build_chains_for(b_exact, root.value, root.multiplicity, 0.0);
      prettify_chains(b_exact, root.value, chains, 0.0);
      for (auto& chain : chains) {
        normalize_chain_exact(chain);
        out.chains.push_back(make_exact_chain(root.value, std::move(chain)));
        if (!root.value.im.is_zero())
          out.chains.push_back(conjugate_chain(out.chains.back()));
      }
    }
  } else {
    double tol_abs = tol * std::fmax(mat_norm_2(b_c), 1.0);
    auto clusters = cluster_eigenvalues(float_eigs, tol_abs);
    for (const auto& [lambda, mult] : clusters) {
      if (lambda.imag() < 0.0) continue;
      auto chains = build_chains_for(b_c, lambda, mult, tol);
      prettify_chains(b_c, lambda, chains, tol);
      for (auto& chain : chains) {
        normalize_chain_float(chain);
        EigenChain c;
        c.lambda = lambda;
        c.vectors = std::move(chain);
        out.chains.push_back(std::move(c));
        if (lambda.imag() > 0.0)
          out.chains.push_back(conjugate_chain(out.chains.back()));
      }
    }
  }
  std::stable_sort(out.chains.begin(), out.chains.end(), chain_less);
  std::size_t total = 0;
  for (const auto& c : out.chains) total += c.multiplicity();
  if (total != n)
    throw ClusterAmbiguityError("chain lengths sum to " +
                                std::to_string(total) + ", expected " +
                                std::to_string(n));
  return out;
}

EigenChain build_chain(const RealMat& b, Complex lambda, std::size_t m,
                       double tol) {
  QMat b_exact = exact_from_real(b);
  auto coeffs = char_poly(b_exact);
  double scale = real_mat_scale(b);
  if (auto lam = recognize_root_candidate(lambda, coeffs, scale)) {
    // Exact path: find the block structure, return a chain of length m.
    std::size_t mult = 0;
    std::vector<GaussianRational> work = coeffs;
    for (;;) {
      auto [q, rem] = synthetic_divide(work, *lam);
      if (!rem.is_zero()) break;
      ++mult;
      work = std::move(q);
      if (work.empty()) break;
    }
    auto chains = build_chains_for(b_exact, *lam, mult, 0.0);
    prettify_chains(b_exact, *lam, chains, 0.0);
    for (auto& chain : chains) {
      if (chain.size() < m) continue;
      chain.resize(m);
      normalize_chain_exact(chain);
      return make_exact_chain(*lam, std::move(chain));
    }
    throw ConstructionError("no chain of length " + std::to_string(m) +
                            " for eigenvalue " + lam->str());
  }
  CMat b_c = complex_from_real(b);
  auto eigs = float_eigenvalues(b_c);
  std::size_t mult = 0;
  double tol_abs = tol * std::fmax(mat_norm_2(b_c), 1.0);
  for (const auto& mu : eigs)
    if (std::abs(mu - lambda) < tol_abs) ++mult;
  if (mult < m)
    throw ConstructionError("eigenvalue multiplicity below requested length");
  auto chains = build_chains_for(b_c, lambda, mult, tol);
  prettify_chains(b_c, lambda, chains, tol);
  for (auto& chain : chains) {
    if (chain.size() < m) continue;
    chain.resize(m);
    normalize_chain_float(chain);
    EigenChain c;
    c.lambda = lambda;
    c.vectors = std::move(chain);
    return c;
  }
  throw ConstructionError("no chain of length " + std::to_string(m));
}

EigenChain extend_chain_over(const RealMat& b, const CVec& nu0, Complex lambda,
                             std::size_t max_len, double tol) {
  QMat b_exact = exact_from_real(b);
  auto coeffs = char_poly(b_exact);
  double scale = real_mat_scale(b);
  auto lam = recognize_root_candidate(lambda, coeffs, scale);
  bool exact = lam.has_value();
  if (exact) {
    QVec nu0_exact;
    for (const auto& z : nu0) {
      auto re = Rational::recognize(z.real(), 100000, 1e-6 * scale);
      auto im = Rational::recognize(z.imag(), 100000, 1e-6 * scale);
      if (!re || !im) {
        exact = false;
        break;
      }
      nu0_exact.push_back(GaussianRational(*re, *im));
    }
    if (exact) {
      QMat m = shift_matrix(b_exact, *lam);
      std::vector<QVec> chain{nu0_exact};
      while (chain.size() < max_len) {
        QVec rhs = chain.back();
        for (auto& c : rhs)
          c *= GaussianRational(static_cast<long long>(chain.size()));
        auto sol = solve_particular(m, rhs, 0.0);
        if (!sol) break;
        chain.push_back(*sol);
      }
      return make_exact_chain(*lam, std::move(chain));
    }
  }
  CMat m = shift_matrix(complex_from_real(b), lambda);
  std::vector<CVec> chain{nu0};
  while (chain.size() < max_len) {
    CVec rhs = chain.back();
    for (auto& c : rhs) c *= Complex(double(chain.size()), 0.0);
    auto sol = solve_particular(m, rhs, tol);
    if (!sol) break;
    // Guard against garbage from a nearly-inconsistent float solve.
    CVec check = mat_vec(m, *sol);
    double err = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < check.size(); ++i) {
      err = std::fmax(err, std::abs(check[i] - rhs[i]));
      mag = std::fmax(mag, std::abs(rhs[i]));
    }
    if (err > 1e-6 * std::fmax(mag, 1.0)) break;
    chain.push_back(*sol);
  }
  EigenChain c;
  c.lambda = lambda;
  c.vectors = std::move(chain);
  return c;
}

CommonSpectrum common_spectrum(const std::vector<RealMat>& b_mats, double tol,
                               bool require_commuting) {
  if (b_mats.empty()) throw ConstructionError("empty matrix family");
  std::size_t n = b_mats[0].size();
  if (require_commuting) {
    for (std::size_t j = 0; j < b_mats.size(); ++j)
      for (std::size_t k = j + 1; k < b_mats.size(); ++k) {
        CMat bj = complex_from_real(b_mats[j]);
        CMat bk = complex_from_real(b_mats[k]);
        CMat comm = mat_mul(bj, bk);
        CMat comm2 = mat_mul(bk, bj);
        double err = 0.0, scale = 1.0;
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < n; ++c) {
            err = std::fmax(err, std::abs(comm[r][c] - comm2[r][c]));
            scale = std::fmax(scale, std::abs(comm[r][c]));
          }
        if (err > tol * scale)
          throw ConstructionError("matrices " + std::to_string(j + 1) +
                                  " and " + std::to_string(k + 1) +
                                  " do not commute");
      }
  }

  // Candidate subspaces refined one matrix at a time: a subspace carries
  // the eigenvalue tuple accumulated so far.
  struct Candidate {
    std::vector<CVec> basis;  // column vectors spanning the subspace
    std::vector<Complex> lambdas;
  };
  std::vector<Candidate> cands;
  {
    Candidate whole;
    for (std::size_t i = 0; i < n; ++i) {
      CVec e(n, Complex(0.0));
      e[i] = Complex(1.0);
      whole.basis.push_back(std::move(e));
    }
    cands.push_back(std::move(whole));
  }
  for (const auto& b_real : b_mats) {
    CMat b = complex_from_real(b_real);
    // Exact roots when certifiable; float clusters otherwise. Defective
    // eigenvalues are hopeless to cluster from float output alone.
    QMat b_exact = exact_from_real(b_real);
    auto coeffs = char_poly(b_exact);
    auto float_eigs = float_eigenvalues(b);
    std::vector<std::pair<Complex, std::size_t>> clusters;
    if (auto roots =
            certify_roots(b_exact, coeffs, float_eigs, real_mat_scale(b_real))) {
      for (const auto& r : *roots)
        clusters.push_back({r.value.to_complex(), r.multiplicity});
    } else {
      double tol_abs = tol * std::fmax(mat_norm_2(b), 1.0);
      clusters = cluster_eigenvalues(float_eigs, tol_abs);
    }
    std::vector<Candidate> next;
    for (const auto& cand : cands) {
      std::size_t d = cand.basis.size();
      for (const auto& [mu, mult] : clusters) {
        (void)mult;
        // Kernel of (B - mu) restricted to span(basis), in coordinates.
        CMat stacked(n, CVec(d, Complex(0.0)));
        for (std::size_t col = 0; col < d; ++col) {
          CVec bv = mat_vec(b, cand.basis[col]);
          for (std::size_t row = 0; row < n; ++row)
            stacked[row][col] = bv[row] - mu * cand.basis[col][row];
        }
        auto coord_kernel =
            float_kernel(stacked, 1e-9, std::fmax(mat_norm_2(b), 1.0));
        if (coord_kernel.empty()) continue;
        Candidate refined;
        refined.lambdas = cand.lambdas;
        refined.lambdas.push_back(mu);
        for (const auto& coords : coord_kernel) {
          CVec v(n, Complex(0.0));
          for (std::size_t col = 0; col < d; ++col)
            for (std::size_t row = 0; row < n; ++row)
              v[row] += coords[col] * cand.basis[col][row];
          refined.basis.push_back(std::move(v));
        }
        next.push_back(std::move(refined));
      }
    }
    cands = std::move(next);
    if (cands.empty()) break;
  }

  CommonSpectrum out;
  double scale = 1.0;
  for (const auto& b : b_mats) scale = std::fmax(scale, real_mat_scale(b));
  for (const auto& cand : cands) {
    for (const auto& v : cand.basis) {
      CommonEigenvector ev;
      std::vector<CVec> single{v};
      normalize_chain_float(single);
      ev.nu = single[0];
      ev.lambdas = cand.lambdas;
      // Exact upgrade when everything is recognizable and verifies.
      bool exact = true;
      QVec nu_exact;
      for (const auto& z : ev.nu) {
        auto re = Rational::recognize(z.real(), 100000, 1e-6 * scale);
        auto im = Rational::recognize(z.imag(), 100000, 1e-6 * scale);
        if (!re || !im) {
          exact = false;
          break;
        }
        nu_exact.push_back(GaussianRational(*re, *im));
      }
      std::vector<GaussianRational> lambdas_exact;
      for (std::size_t j = 0; exact && j < b_mats.size(); ++j) {
        auto lam = recognize_gaussian(ev.lambdas[j], 1e-6 * scale);
        if (!lam) {
          exact = false;
          break;
        }
        QMat bj = exact_from_real(b_mats[j]);
        QVec prod = mat_vec(bj, nu_exact);
        for (std::size_t i = 0; i < prod.size(); ++i)
          if (prod[i] != *lam * nu_exact[i]) {
            exact = false;
            break;
          }
        if (exact) lambdas_exact.push_back(*lam);
      }
      if (exact) {
        ev.exact = true;
        std::vector<QVec> chain{nu_exact};
        normalize_chain_exact(chain);
        ev.nu_exact = chain[0];
        ev.nu = complex_view(ev.nu_exact);
        ev.lambdas_exact = std::move(lambdas_exact);
        for (std::size_t j = 0; j < ev.lambdas.size(); ++j)
          ev.lambdas[j] = ev.lambdas_exact[j].to_complex();
      }
      out.eigenvectors.push_back(std::move(ev));
    }
  }
  std::stable_sort(out.eigenvectors.begin(), out.eigenvectors.end(),
                   [](const CommonEigenvector& a, const CommonEigenvector& b) {
                     for (std::size_t j = 0;
                          j < a.lambdas.size() && j < b.lambdas.size(); ++j) {
                       if (a.lambdas[j].real() != b.lambdas[j].real())
                         return a.lambdas[j].real() < b.lambdas[j].real();
                       if (a.lambdas[j].imag() != b.lambdas[j].imag())
                         return a.lambdas[j].imag() < b.lambdas[j].imag();
                     }
                     return false;
                   });
  out.exact = !out.eigenvectors.empty();
  for (const auto& ev : out.eigenvectors) out.exact = out.exact && ev.exact;
  if (out.eigenvectors.empty())
    throw ConstructionError("family has no common eigenvectors");
  return out;
}

double chain_residual(const RealMat& b, const EigenChain& chain) {
  CMat m = shift_matrix(complex_from_real(b), chain.lambda);
  double worst = 0.0;
  for (std::size_t k = 0; k < chain.vectors.size(); ++k) {
    CVec lhs = mat_vec(m, chain.vectors[k]);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      Complex expected =
          k == 0 ? Complex(0.0) : double(k) * chain.vectors[k - 1][i];
      worst = std::fmax(worst, std::abs(lhs[i] - expected));
    }
  }
  return worst;
}

std::string format_eigenvalue(const Complex& l) {
  if (l.imag() == 0.0) return format_double(l.real());
  std::string s = format_double(l.real());
  if (l.imag() >= 0.0) s += "+";
  s += format_double(l.imag()) + "i";
  return s;
}

}  // namespace fint
