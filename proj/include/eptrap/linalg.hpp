#pragma once

// Dense complex linear algebra for non-Hermitian effective Hamiltonians:
// Hessenberg reduction, single-shift complex QR with Wilkinson shifts,
// biorthogonal (c-product) normalization and Jordan-chain solves.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "eptrap/errors.hpp"

namespace eptrap {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline bool all_finite(const CMat& m) {
  return m.allFinite();
}

// Square complex matrix with an optional certificate that it is complex
// symmetric (M = M^T, no conjugation). All model Hamiltonians set the flag.
struct Matrix {
  CMat m;
  bool symmetric = false;

  Matrix() = default;
  explicit Matrix(CMat mat, bool sym = false) : m(std::move(mat)), symmetric(sym) {
    if (m.rows() != m.cols())
      throw DimensionError("matrix must be square, got " +
                           std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()));
    if (!all_finite(m)) throw DomainError("matrix has non-finite entries");
    if (symmetric) {
      double dev = (m - m.transpose()).cwiseAbs().maxCoeff();
      if (dev > 1e-12)
        throw DomainError("symmetric flag set but max |M - M^T| = " +
                          std::to_string(dev));
    }
  }

  Eigen::Index n() const { return m.rows(); }
  double frobenius() const { return m.norm(); }
};

struct EigenPair {
  Complex value;
  CVec right;
  CVec left;          // row sense: left^T * M = value * left^T
  double residual = 0.0;
};

struct JordanSolve {
  Complex eigenvalue;
  CVec eigenvector;    // phi^cr, unit Euclidean norm
  CVec associated;     // phi^cra, component along phi^cr projected out
  double defect_residual = 0.0;
  double eigen_residual = 0.0;  // ||(H - eps0) phi^cr||
};

struct EigOptions {
  double eig_tol = 1e-10;          // residual bound, relative to ||H||_F
  int max_qr_iters_factor = 30;    // total iteration cap = factor * n^2
};

// c-product <a*|b> = a^T b (bilinear, no conjugation).
inline Complex c_dot(const CVec& a, const CVec& b) {
  return (a.transpose() * b)(0);
}

namespace detail {

struct Givens {
  double c;    // real cosine
  Complex s;
  Complex r;
};

// Rotation with [c s; -conj(s) c] * [f; g] = [r; 0].
inline Givens make_givens(Complex f, Complex g) {
  Givens gv;
  double af = std::abs(f), ag = std::abs(g);
  if (ag == 0.0) {
    gv.c = 1.0;
    gv.s = Complex(0, 0);
    gv.r = f;
    return gv;
  }
  if (af == 0.0) {
    gv.c = 0.0;
    gv.s = std::conj(g) / ag;
    gv.r = ag;
    return gv;
  }
  double d = std::hypot(af, ag);
  Complex fs = f / af;
  gv.c = af / d;
  gv.s = fs * std::conj(g) / d;
  gv.r = fs * d;
  return gv;
}

// Eigenvalue of [[a,b],[c,d]] closest to d (Wilkinson shift).
inline Complex wilkinson_shift(Complex a, Complex b, Complex c, Complex d) {
  Complex t = (a - d) * 0.5;
  Complex disc = std::sqrt(t * t + b * c);
  Complex m1 = d + t + disc;
  Complex m2 = d + t - disc;
  return std::abs(m1 - d) < std::abs(m2 - d) ? m1 : m2;
}

}  // namespace detail

// Householder reduction to upper Hessenberg form. Returns (H, Q) with
// Q H Q^dagger = m and Q unitary.
inline std::pair<CMat, CMat> hessenberg(const Matrix& mat) {
  const Eigen::Index n = mat.n();
  CMat h = mat.m;
  CMat q = CMat::Identity(n, n);
  for (Eigen::Index j = 0; j + 2 < n; ++j) {
    CVec x = h.col(j).segment(j + 1, n - j - 1);
    double xnorm = x.norm();
    if (xnorm == 0.0) continue;
    Complex x0 = x(0);
    Complex phase = (std::abs(x0) == 0.0) ? Complex(1, 0) : x0 / std::abs(x0);
    Complex alpha = -phase * xnorm;
    CVec v = x;
    v(0) -= alpha;
    double vnorm2 = v.squaredNorm();
    if (vnorm2 == 0.0) continue;
    Complex tau = 2.0 / vnorm2;
    // H <- P H P with P = I - tau v v^dagger acting on rows/cols j+1..n-1
    auto rows = Eigen::seq(j + 1, n - 1);
    h(rows, Eigen::all) -= (tau * v) * (v.adjoint() * h(rows, Eigen::all));
    h(Eigen::all, rows) -= (h(Eigen::all, rows) * v) * (tau * v).adjoint();
    q(Eigen::all, rows) -= (q(Eigen::all, rows) * v) * (tau * v).adjoint();
    h.col(j).segment(j + 2, n - j - 2).setZero();
  }
  return {h, q};
}

struct SchurResult {
  CMat t;        // upper triangular
  CMat z;        // unitary, z t z^dagger = input (when vectors accumulated)
  bool converged = true;
  Eigen::Index deflated = 0;  // eigenvalues settled before giving up
};

// Single-shift QR iteration on an upper Hessenberg matrix.
inline SchurResult hessenberg_qr(CMat h, CMat z, bool want_z,
                                 const EigOptions& opts = {}) {
  const Eigen::Index n = h.rows();
  const double hnorm = std::max(h.norm(), 1e-300);
  const double eps = std::numeric_limits<double>::epsilon();
  const long max_iters =
      static_cast<long>(opts.max_qr_iters_factor) * static_cast<long>(n) * n;

  long total_iters = 0;
  Eigen::Index hi = n - 1;
  int stall = 0;
  while (hi > 0) {
    // deflate negligible subdiagonals
    Eigen::Index lo = hi;
    while (lo > 0) {
      double sub = std::abs(h(lo, lo - 1));
      double scale = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
      if (scale == 0.0) scale = hnorm;
      if (sub <= eps * scale) {
        h(lo, lo - 1) = 0.0;
        break;
      }
      --lo;
    }
    if (lo == hi) {
      --hi;
      stall = 0;
      continue;
    }
    if (++total_iters > max_iters) {
      SchurResult res{std::move(h), std::move(z), false, n - 1 - hi};
      return res;
    }
    Complex mu;
    ++stall;
    if (stall % 16 == 0) {
      // exceptional shift to break symmetric stalls
      mu = h(hi, hi) + Complex(0.75 * std::abs(h(hi, hi - 1)), 0.0);
    } else {
      mu = detail::wilkinson_shift(h(hi - 1, hi - 1), h(hi - 1, hi),
                                   h(hi, hi - 1), h(hi, hi));
    }
    // implicit single-shift sweep over the active block [lo, hi]
    Complex f = h(lo, lo) - mu;
    Complex g = h(lo + 1, lo);
    for (Eigen::Index k = lo; k < hi; ++k) {
      detail::Givens gv = detail::make_givens(f, g);
      Eigen::Index r1 = k, r2 = k + 1;
      // rows
      Eigen::Index cstart = (k > lo) ? k - 1 : lo;
      for (Eigen::Index j = cstart; j < n; ++j) {
        Complex t1 = h(r1, j), t2 = h(r2, j);
        h(r1, j) = gv.c * t1 + gv.s * t2;
        h(r2, j) = -std::conj(gv.s) * t1 + gv.c * t2;
      }
      // columns
      Eigen::Index rend = std::min(hi, k + 2);
      for (Eigen::Index i = 0; i <= rend; ++i) {
        Complex t1 = h(i, r1), t2 = h(i, r2);
        h(i, r1) = gv.c * t1 + std::conj(gv.s) * t2;
        h(i, r2) = -gv.s * t1 + gv.c * t2;
      }
      if (want_z) {
        for (Eigen::Index i = 0; i < n; ++i) {
          Complex t1 = z(i, r1), t2 = z(i, r2);
          z(i, r1) = gv.c * t1 + std::conj(gv.s) * t2;
          z(i, r2) = -gv.s * t1 + gv.c * t2;
        }
      }
      if (k + 2 <= hi) {
        f = h(k + 1, k);
        g = h(k + 2, k);
      }
    }
  }
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) h(i, j) = 0.0;
  return SchurResult{std::move(h), std::move(z), true, n - 1};
}

// Complex Schur decomposition m = Z T Z^dagger via Hessenberg + QR.
inline SchurResult schur(const Matrix& mat, bool want_z,
                         const EigOptions& opts = {}) {
  auto [h, q] = hessenberg(mat);
  SchurResult res = hessenberg_qr(std::move(h), want_z ? q : CMat(),
                                  want_z, opts);
  if (!res.converged)
    throw ConvergenceError("QR failed to converge after " +
                           std::to_string(opts.max_qr_iters_factor) +
                           "*n^2 iterations; " + std::to_string(res.deflated) +
                           " eigenvalues deflated");
  return res;
}

// Eigenvalues only.
inline std::vector<Complex> eig_values(const Matrix& mat,
                                       const EigOptions& opts = {}) {
  SchurResult s = schur(mat, false, opts);
  std::vector<Complex> vals(mat.n());
  for (Eigen::Index k = 0; k < mat.n(); ++k) vals[k] = s.t(k, k);
  std::sort(vals.begin(), vals.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return vals;
}

namespace detail {

// Right eigenvectors of an upper triangular matrix by back substitution,
// mapped back through z.
inline std::vector<CVec> triangular_eigenvectors(const CMat& t, const CMat& z) {
  const Eigen::Index n = t.rows();
  const double tnorm = std::max(t.norm(), 1e-300);
  const double eps = std::numeric_limits<double>::epsilon();
  std::vector<CVec> vecs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    CVec y = CVec::Zero(n);
    y(k) = 1.0;
    for (Eigen::Index j = k - 1; j >= 0; --j) {
      Complex acc(0, 0);
      for (Eigen::Index i = j + 1; i <= k; ++i) acc += t(j, i) * y(i);
      Complex denom = t(j, j) - t(k, k);
      if (std::abs(denom) < eps * tnorm) {
        denom = (std::abs(denom) == 0.0)
                    ? Complex(eps * tnorm, 0)
                    : denom / std::abs(denom) * (eps * tnorm);
      }
      y(j) = -acc / denom;
    }
    CVec x = z * y;
    vecs[k] = x / x.norm();
  }
  return vecs;
}

inline bool value_less(Complex a, Complex b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

}  // namespace detail

// Full eigendecomposition: right and left eigenvectors with residuals,
// sorted by Re(z) then Im(z). Left vectors satisfy left^T m = z left^T;
// for complex symmetric input left == right (c-product self-duality).
inline std::vector<EigenPair> eig(const Matrix& mat,
                                  const EigOptions& opts = {}) {
  const Eigen::Index n = mat.n();
  SchurResult s = schur(mat, true, opts);
  std::vector<CVec> rights = detail::triangular_eigenvectors(s.t, s.z);

  std::vector<EigenPair> pairs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    pairs[k].value = s.t(k, k);
    pairs[k].right = std::move(rights[k]);
  }
  std::sort(pairs.begin(), pairs.end(), [](const EigenPair& a, const EigenPair& b) {
    return detail::value_less(a.value, b.value);
  });

  if (mat.symmetric) {
    for (auto& p : pairs) p.left = p.right;
  } else {
    Matrix mt(mat.m.transpose(), false);
    SchurResult st = schur(mt, true, opts);
    std::vector<CVec> lefts = detail::triangular_eigenvectors(st.t, st.z);
    std::vector<std::pair<Complex, CVec>> lv(n);
    for (Eigen::Index k = 0; k < n; ++k) lv[k] = {st.t(k, k), std::move(lefts[k])};
    std::sort(lv.begin(), lv.end(), [](const auto& a, const auto& b) {
      return detail::value_less(a.first, b.first);
    });
    // transpose has the same spectrum; after sorting, pair index-wise
    for (Eigen::Index k = 0; k < n; ++k) pairs[k].left = std::move(lv[k].second);
  }

  const double hnorm = mat.frobenius();
  for (auto& p : pairs) {
    p.residual = (mat.m * p.right - p.value * p.right).norm();
    if (p.residual > opts.eig_tol * std::max(hnorm, 1e-300))
      throw ConvergenceError(
          "eigenpair residual " + std::to_string(p.residual) +
          " exceeds tolerance for eigenvalue re=" + std::to_string(p.value.real()));
  }
  return pairs;
}

// c-normalization: scale each pair so <phi_k*|phi_k> = 1 (complex symmetric)
// or left_k^T right_k = 1 (general), then fix the sign so the largest-modulus
// component of the right vector has argument in (-pi/2, pi/2].
// Pairs closer than degeneracy_gap must be routed to jordan_chain instead.
inline void c_normalize(std::vector<EigenPair>& pairs, double degeneracy_gap,
                        bool symmetric = true) {
  const std::size_t n = pairs.size();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = k + 1; l < n; ++l)
      if (std::abs(pairs[k].value - pairs[l].value) <= degeneracy_gap)
        throw IllConditionedError(
            "eigenvalues " + std::to_string(k) + " and " + std::to_string(l) +
            " are separated by less than the degeneracy gap");

  for (auto& p : pairs) {
    if (symmetric) {
      Complex c = c_dot(p.right, p.right);
      if (std::abs(c) < 1e-300)
        throw IllConditionedError("self-orthogonal eigenvector, c-product ~ 0");
      p.right /= std::sqrt(c);
      p.left = p.right;
    } else {
      p.right.normalize();
      Complex c = c_dot(p.left, p.right);
      if (std::abs(c) < 1e-300)
        throw IllConditionedError("left/right c-product ~ 0");
      p.left /= c;
    }
    // sign gauge from the largest-modulus component
    Eigen::Index imax;
    p.right.cwiseAbs().maxCoeff(&imax);
    Complex top = p.right(imax);
    bool in_range = top.real() > 0.0 ||
                    (top.real() == 0.0 && top.imag() > 0.0);
    if (!in_range) {
      p.right = -p.right;
      p.left = symmetric ? p.right : CVec(-p.left);
    }
  }
}

// Jordan chain at a (numerically) defective eigenvalue eps0:
// phi^cr spans the null space of (m - eps0), phi^cra is the minimum-norm
// least-squares solution of (m - eps0) x = phi^cr with the phi^cr component
// projected out.
inline JordanSolve jordan_chain(const Matrix& mat, Complex eps0,
                                double tol = 1e-8) {
  const Eigen::Index n = mat.n();
  CMat a = mat.m - eps0 * CMat::Identity(n, n);
  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVec& sv = svd.singularValues();
  double smax = sv(0);
  double cutoff = tol * std::max(smax, 1e-300);
  Eigen::Index deficiency = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (sv(i) <= cutoff) ++deficiency;
  if (deficiency != 1)
    throw NotAnEpError("rank deficiency of (H - eps0) is " +
                       std::to_string(deficiency) + ", expected 1 at tol " +
                       std::to_string(tol));

  JordanSolve js;
  js.eigenvalue = eps0;
  js.eigenvector = svd.matrixV().col(n - 1);
  js.eigen_residual = (a * js.eigenvector).norm();

  // pseudo-inverse solve with the null direction truncated
  CVec rhs_u = svd.matrixU().adjoint() * js.eigenvector;
  CVec y = CVec::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) y(i) = rhs_u(i) / sv(i);
  CVec x = svd.matrixV() * y;
  x -= (js.eigenvector.adjoint() * x)(0) * js.eigenvector;  // gauge choice
  js.associated = x;
  js.defect_residual = (a * x - js.eigenvector).norm();
  return js;
}

}  // namespace eptrap
