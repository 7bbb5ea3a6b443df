#pragma once

// Nonlinear source-term Schrodinger equation
//   (H0 - eps_n) |phi_n> = <phi_n|W|phi_n> |phi_n|^2 |phi_n>
// solved by damped fixed-point iteration on the equivalent linearized
// eigenproblem, plus the biorthogonal expansion of the interaction source.

#include <vector>

#include "eptrap/linalg.hpp"
#include "eptrap/spectra.hpp"

namespace eptrap {

enum class BracketMode {
  Hermitian,  // <phi_k|W|phi_n> with the conjugating inner product (default)
  CProduct,   // <phi_k^*|W|phi_n>, the bilinear pairing
};

enum class CubicMode {
  Componentwise,  // |phi|^2 acts entry by entry (default)
  GlobalNorm,     // |phi|^2 read as ||phi||^2, a scalar
};

struct NonlinearOptions {
  double nl_tol = 1e-10;
  int max_iters = 500;
  double eta = 0.5;  // mixing weight for the new state, halved on regression
  CubicMode cubic = CubicMode::Componentwise;
  EigOptions eig;
};

struct NonlinearSolve {
  CVec state;
  Complex eigenvalue{0, 0};
  int iterations = 0;
  double residual = 0.0;  // recomputed from scratch at the returned state
  bool converged = false;
  std::vector<double> residual_history;
};

// Interaction source in the biorthogonal mode basis:
// sum_k <phi_k|W|phi_n> { A_k |phi_k> + sum_{l != k} B_k^l |phi_l> }.
// Reduces to the plain projection sum_k <phi_k|W|phi_n> |phi_k> in the
// Hermitian limit (A_k -> 1, B -> 0) and grows without bound toward an EP.
inline CVec source_term(const CVec& phi_n, const CMat& w, const ModeSet& ms,
                        BracketMode bracket = BracketMode::Hermitian) {
  if (w.rows() != ms.n() || w.cols() != ms.n() || phi_n.size() != ms.n())
    throw DimensionError("source term dimensions must match the mode set");
  for (int k = 0; k < ms.n(); ++k)
    if (ms.flagged[k])
      throw IllConditionedError("source expansion undefined at a near-EP pair");
  CVec wphi = w * phi_n;
  CVec out = CVec::Zero(ms.n());
  for (int k = 0; k < ms.n(); ++k) {
    const CVec& pk = ms.modes[k].right;
    Complex coeff = bracket == BracketMode::Hermitian ? pk.dot(wphi)
                                                      : c_dot(pk, wphi);
    CVec bracketed = ms.a_k[k] * pk;
    for (int l = 0; l < ms.n(); ++l)
      if (l != k) bracketed += ms.b_kl(k, l) * ms.modes[l].right;
    out += coeff * bracketed;
  }
  return out;
}

namespace detail {

inline double nonlinear_residual(const Matrix& h0, const CMat& w,
                                 const CVec& phi, Complex eps,
                                 CubicMode cubic) {
  Complex c = phi.dot(w * phi);
  CVec s = cubic == CubicMode::Componentwise
               ? (phi.cwiseAbs2().cast<Complex>().cwiseProduct(phi) * c).eval()
               : (c * phi.squaredNorm() * phi).eval();
  return (h0.m * phi - eps * phi - s).norm();
}

}  // namespace detail

// Damped fixed-point iteration: the cubic right-hand side is absorbed into
// a state-dependent diagonal, the resulting linear eigenproblem
//   (H0 - c(phi) diag(|phi|^2)) psi = eps psi
// is solved exactly, the eigenpair with the largest overlap against the
// current state is mixed in with weight eta, and eta backs off
// geometrically whenever the residual regresses. Non-convergence is a
// reported outcome, not an exception.
inline NonlinearSolve solve_nonlinear(const Matrix& h0, const CMat& w,
                                      const EigenPair& seed,
                                      const NonlinearOptions& opts = {}) {
  if (w.rows() != h0.n() || w.cols() != h0.n() || seed.right.size() != h0.n())
    throw DimensionError("nonlinear solve dimensions must agree");
  NonlinearSolve out;
  out.state = seed.right.normalized();
  out.eigenvalue = seed.value;
  double eta = opts.eta;
  double best = std::numeric_limits<double>::infinity();

  for (int it = 0; it < opts.max_iters; ++it) {
    double res = detail::nonlinear_residual(h0, w, out.state, out.eigenvalue,
                                            opts.cubic);
    out.residual_history.push_back(res);
    out.iterations = it + 1;
    if (res <= opts.nl_tol) {
      out.converged = true;
      break;
    }
    if (res > best) eta = std::max(0.5 * eta, 1e-3);
    best = std::min(best, res);

    Complex c = out.state.dot(w * out.state);
    CMat a = h0.m;
    if (opts.cubic == CubicMode::Componentwise)
      a -= c * out.state.cwiseAbs2().cast<Complex>().asDiagonal().toDenseMatrix();
    else
      a -= c * out.state.squaredNorm() * CMat::Identity(h0.n(), h0.n());

    std::vector<EigenPair> pairs;
    try {
      pairs = eig(Matrix(a, h0.symmetric), opts.eig);  // diagonal keeps symmetry
    } catch (const Error&) {
      break;  // linearized solve failed; report the best state so far
    }
    int pick = 0;
    double bestov = -1.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      double ov = std::abs(out.state.dot(pairs[k].right.normalized()));
      if (ov > bestov) {
        bestov = ov;
        pick = static_cast<int>(k);
      }
    }
    CVec next = pairs[pick].right.normalized();
    Complex phase = out.state.dot(next);
    if (std::abs(phase) > 0.0) next *= std::conj(phase) / std::abs(phase);
    out.state = ((1.0 - eta) * out.state + eta * next).normalized();
    out.eigenvalue = pairs[pick].value;
  }

  out.residual = detail::nonlinear_residual(h0, w, out.state, out.eigenvalue,
                                            opts.cubic);
  out.converged = out.residual <= opts.nl_tol;
  return out;
}

}  // namespace eptrap
