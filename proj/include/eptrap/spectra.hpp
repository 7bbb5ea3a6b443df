#pragma once

// Fully annotated biorthogonal spectra: eigenpairs with overlap diagnostics
// A_k = <phi_k|phi_k>, cross overlaps B_k^l = <phi_k|phi_l>, phase rigidity
// r_k = 1/A_k, and near-degeneracy (exceptional point) flags.

#include <limits>
#include <utility>
#include <vector>

#include "eptrap/linalg.hpp"

namespace eptrap {

struct SpectraOptions {
  EigOptions eig;
  double degeneracy_gap_rel = 1e-8;  // relative to ||H||_F
};

struct ModeSet {
  std::vector<EigenPair> modes;           // ordered by Re(z)
  std::vector<double> a_k;                // <phi|phi>, >= 1 (NaN when flagged)
  CMat b_kl;                              // cross overlaps (NaN when flagged)
  std::vector<double> r_k;                // 1/a_k in [0,1]
  std::vector<bool> flagged;              // mode is part of a near-EP pair
  std::vector<std::pair<int, int>> ep_pairs;
  double matrix_norm = 0.0;

  int n() const { return static_cast<int>(modes.size()); }
  double energy(int k) const { return modes[k].value.real(); }
  double width(int k) const { return -2.0 * modes[k].value.imag(); }
};

// Phase rigidity |<phi*|phi>| / <phi|phi> = 1/A_k for a c-normalized mode.
// The ratio is scale invariant, so it extends continuously to modes that
// cannot be c-normalized (it tends to 0 at an EP).
inline double phase_rigidity(const EigenPair& mode) {
  double norm2 = mode.right.squaredNorm();
  if (norm2 == 0.0) throw DomainError("phase rigidity of a zero vector");
  return std::abs(c_dot(mode.right, mode.right)) / norm2;
}

// Ray distance between two modes: || phi1 - g phi2 || minimized over the
// unit-phase gauge g (covers the +-i chiral alignment). Tends to 0 as the
// pair coalesces at an EP, sqrt(2) for an orthogonal (Hermitian) pair.
inline double chirality_defect(const EigenPair& m1, const EigenPair& m2) {
  CVec a = m1.right.normalized();
  CVec b = m2.right.normalized();
  double overlap = std::abs(a.dot(b));  // Eigen dot conjugates the first arg
  overlap = std::min(overlap, 1.0);
  return std::sqrt(2.0 - 2.0 * overlap);
}

inline ModeSet solve_modes(const Matrix& mat, const SpectraOptions& opts = {}) {
  ModeSet ms;
  ms.matrix_norm = mat.frobenius();
  ms.modes = eig(mat, opts.eig);
  const int n = static_cast<int>(ms.modes.size());
  const double gap = opts.degeneracy_gap_rel * std::max(ms.matrix_norm, 1e-300);

  ms.flagged.assign(n, false);
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l)
      if (std::abs(ms.modes[k].value - ms.modes[l].value) <= gap) {
        ms.ep_pairs.emplace_back(k, l);
        ms.flagged[k] = ms.flagged[l] = true;
      }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  ms.a_k.assign(n, nan);
  ms.r_k.assign(n, nan);
  ms.b_kl = CMat::Constant(n, n, Complex(nan, nan));

  for (int k = 0; k < n; ++k) {
    auto& p = ms.modes[k];
    if (ms.flagged[k]) {
      // never silently c-normalized: a near-EP c-product is vanishing
      p.right.normalize();
      if (mat.symmetric) p.left = p.right;
      continue;
    }
    if (mat.symmetric) {
      Complex c = c_dot(p.right, p.right);
      p.right /= std::sqrt(c);
      p.left = p.right;
    } else {
      p.right.normalize();
      p.left /= c_dot(p.left, p.right);
    }
    Eigen::Index imax;
    p.right.cwiseAbs().maxCoeff(&imax);
    Complex top = p.right(imax);
    if (!(top.real() > 0.0 || (top.real() == 0.0 && top.imag() > 0.0))) {
      p.right = -p.right;
      if (mat.symmetric) p.left = p.right; else p.left = -p.left;
    }
    ms.a_k[k] = p.right.squaredNorm();
    ms.r_k[k] = 1.0 / ms.a_k[k];
  }
  for (int k = 0; k < n; ++k) {
    if (ms.flagged[k]) continue;
    ms.b_kl(k, k) = Complex(ms.a_k[k], 0.0);
    for (int l = 0; l < n; ++l) {
      if (l == k || ms.flagged[l]) continue;
      ms.b_kl(k, l) = ms.modes[k].right.dot(ms.modes[l].right);
    }
  }
  return ms;
}

}  // namespace eptrap
