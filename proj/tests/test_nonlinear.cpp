#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eptrap/models.hpp"
#include "eptrap/nonlinear.hpp"
#include "test_support.hpp"

using namespace eptrap;
using namespace eptrap::test;

namespace {

Matrix hermitian_h0() {
  CMat h(3, 3);
  h << 0.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 2.5;
  return Matrix(h, true);
}

}  // namespace

TEST_CASE("source term: zero interaction gives the zero vector") {
  ModeSet ms = solve_modes(hermitian_h0());
  CVec phi = ms.modes[0].right;
  CHECK(source_term(phi, CMat::Zero(3, 3), ms).norm() == 0.0);
}

TEST_CASE("source term: Hermitian limit reduces to the linear projection") {
  // orthonormal complete basis: the expansion collapses to W phi
  ModeSet ms = solve_modes(hermitian_h0());
  CMat w = 0.1 * random_complex(3, 1.0);
  w = (0.5 * (w + w.adjoint())).eval();
  CVec phi = (ms.modes[0].right + 0.5 * ms.modes[2].right).eval();
  CVec s = source_term(phi, w, ms);
  CHECK((s - w * phi).norm() <= 1e-10 * (w * phi).norm());
}

TEST_CASE("source term: c-product bracket differs for complex modes only") {
  ModeSet ms = solve_modes(hermitian_h0());  // real modes: brackets coincide
  CMat w = CMat::Identity(3, 3);
  CVec phi = ms.modes[1].right;
  CHECK((source_term(phi, w, ms, BracketMode::Hermitian) -
         source_term(phi, w, ms, BracketMode::CProduct))
            .norm() <= 1e-12);
}

TEST_CASE("source term: Hermitian bracket reconstructs W phi exactly") {
  // the A_k / B_k^l weights compensate the non-orthonormal basis: the
  // expansion is a completeness identity, stable arbitrarily close to the EP
  double d = 0.5;
  CMat w(2, 2);
  w << 0.1, 0.05, 0.05, -0.1;
  for (double dist : {0.3, 1e-2, 1e-4}) {
    TwoLevelSpec s{Complex(0, d), Complex(0, -d), Complex(d + dist, 0)};
    ModeSet ms = solve_modes(build(s));
    CVec phi = ms.modes[0].right.normalized();
    CVec src = source_term(phi, w, ms);
    CHECK((src - w * phi).norm() <= 1e-10 * (w * phi).norm());
  }
}

TEST_CASE("source term: c-product bracket blows up near an EP") {
  double d = 0.5;
  CMat w(2, 2);
  w << 0.1, 0.05, 0.05, -0.1;
  auto ratio = [&](double dist) {
    TwoLevelSpec s{Complex(0, d), Complex(0, -d), Complex(d + dist, 0)};
    ModeSet ms = solve_modes(build(s));
    CVec phi = ms.modes[0].right.normalized();
    return source_term(phi, w, ms, BracketMode::CProduct).norm() /
           (w * phi).norm();
  };
  // grows like sqrt(A_k): two decades of distance buy a factor ~50
  CHECK(ratio(1e-4) > 20.0 * ratio(0.3));
  CHECK(ratio(1e-4) > 5.0 * ratio(1e-2));
}

TEST_CASE("source term: dimension and near-EP guards") {
  ModeSet ms = solve_modes(hermitian_h0());
  CHECK_THROWS_AS(source_term(CVec::Ones(2), CMat::Zero(3, 3), ms),
                  DimensionError);
  TwoLevelSpec at_ep{Complex(0, 0.5), Complex(0, -0.5), Complex(0.5, 0)};
  ModeSet bad = solve_modes(build(at_ep));
  CHECK_THROWS_AS(source_term(CVec::Ones(2), CMat::Zero(2, 2), bad),
                  IllConditionedError);
}

TEST_CASE("solve_nonlinear: W = 0 returns the seed in one iteration") {
  Matrix h0 = hermitian_h0();
  auto pairs = eig(h0);
  auto sol = solve_nonlinear(h0, CMat::Zero(3, 3), pairs[1]);
  CHECK(sol.converged);
  CHECK(sol.iterations == 1);
  CHECK(sol.residual <= 1e-10);
  CHECK(std::abs(sol.eigenvalue - pairs[1].value) <= 1e-12);
}

TEST_CASE("solve_nonlinear: weak interaction matches first-order perturbation") {
  Matrix h0 = hermitian_h0();
  auto pairs = eig(h0);
  const double s = 1e-3;
  CMat w = CMat::Identity(3, 3) * s;  // <phi|W|phi> = s exactly
  for (int n = 0; n < 3; ++n) {
    CVec phi0 = pairs[n].right.normalized();
    Complex c0 = phi0.dot(w * phi0);
    CVec src = (c0 * phi0.cwiseAbs2().cast<Complex>().cwiseProduct(phi0)).eval();
    // (H0 - e0) dphi - de phi0 = src  =>  de = -<phi0|src>,
    // <phi_m|dphi> = <phi_m|src> / (e_m - e0)
    Complex de = -phi0.dot(src);
    CVec dphi = CVec::Zero(3);
    for (int m = 0; m < 3; ++m) {
      if (m == n) continue;
      CVec pm = pairs[m].right.normalized();
      dphi += (pm.dot(src) / (pairs[m].value - pairs[n].value)) * pm;
    }
    auto sol = solve_nonlinear(h0, w, pairs[n]);
    REQUIRE(sol.converged);
    CHECK(std::abs(sol.eigenvalue - (pairs[n].value + de)) <= 20.0 * s * s);
    CVec first = (phi0 + dphi).normalized();
    Complex g = first.dot(sol.state);
    CHECK((sol.state - (g / std::abs(g)) * first).norm() <= 20.0 * s * s);
  }
}

TEST_CASE("solve_nonlinear: correction shrinks quadratically with the coupling") {
  Matrix h0 = hermitian_h0();
  auto pairs = eig(h0);
  CVec phi0 = pairs[0].right.normalized();
  auto gap_to_first_order = [&](double s) {
    CMat w = CMat::Identity(3, 3) * s;
    Complex c0 = phi0.dot(w * phi0);
    CVec src = (c0 * phi0.cwiseAbs2().cast<Complex>().cwiseProduct(phi0)).eval();
    CVec dphi = CVec::Zero(3);
    for (int m = 1; m < 3; ++m) {
      CVec pm = pairs[m].right.normalized();
      dphi += (pm.dot(src) / (pairs[m].value - pairs[0].value)) * pm;
    }
    auto sol = solve_nonlinear(h0, w, pairs[0]);
    REQUIRE(sol.converged);
    CVec first = (phi0 + dphi).normalized();
    Complex g = first.dot(sol.state);
    return (sol.state - (g / std::abs(g)) * first).norm();
  };
  double d1 = gap_to_first_order(0.2);
  double d2 = gap_to_first_order(0.1);
  CHECK(d1 / d2 > 3.0);  // distance to first order falls like s^2
  CHECK(d1 / d2 < 5.0);
}

TEST_CASE("solve_nonlinear: moderate interaction converges with small residual") {
  Matrix h0 = hermitian_h0();
  auto pairs = eig(h0);
  CMat w = CMat::Zero(3, 3);
  w(0, 0) = 0.3;
  w(1, 1) = -0.2;
  w(0, 1) = w(1, 0) = 0.1;
  auto sol = solve_nonlinear(h0, w, pairs[0]);
  CHECK(sol.converged);
  CHECK(sol.residual <= 1e-10);
  // reported residual must be the from-scratch value at the returned state
  CHECK(detail::nonlinear_residual(h0, w, sol.state, sol.eigenvalue,
                                   CubicMode::Componentwise) ==
        doctest::Approx(sol.residual).epsilon(1e-12));
}

TEST_CASE("solve_nonlinear: the two cubic readings differ by the known factor") {
  // flat-modulus state: componentwise |phi_i|^2 = 1/2, global ||phi||^2 = 1,
  // so the eigenvalue shifts differ by exactly a factor of two
  CMat h(2, 2);
  h << 0.0, 1.0, 1.0, 0.0;
  Matrix h0(h, true);
  auto pairs = eig(h0);  // eigenvectors (1, +-1)/sqrt(2): flat moduli
  CMat w = 0.2 * CMat::Identity(2, 2);
  NonlinearOptions comp, glob;
  glob.cubic = CubicMode::GlobalNorm;
  auto a = solve_nonlinear(h0, w, pairs[0], comp);
  auto b = solve_nonlinear(h0, w, pairs[0], glob);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  Complex e0 = pairs[0].value;
  CHECK(std::abs((b.eigenvalue - e0) - 2.0 * (a.eigenvalue - e0)) <= 1e-9);
}

TEST_CASE("solve_nonlinear: near-EP seed never returns garbage silently") {
  double d = 0.5;
  TwoLevelSpec s{Complex(0, d), Complex(0, -d), Complex(d + 1e-3, 0)};
  Matrix h0 = build(s);
  auto pairs = eig(h0);
  CMat w(2, 2);
  w << 0.05, 0.02, 0.02, -0.05;
  auto sol = solve_nonlinear(h0, w, pairs[0]);
  // contract: converged iff the recomputed residual meets the tolerance
  CHECK(sol.converged == (sol.residual <= 1e-10));
  CHECK(std::isfinite(sol.residual));
  CHECK(!sol.residual_history.empty());
}

TEST_CASE("solve_nonlinear: non-convergence is reported, not thrown") {
  Matrix h0 = hermitian_h0();
  auto pairs = eig(h0);
  CMat w = 5.0 * CMat::Identity(3, 3);  // strong cubic term
  NonlinearOptions opts;
  opts.max_iters = 3;  // starve the iteration
  auto sol = solve_nonlinear(h0, w, pairs[0], opts);
  CHECK(!sol.converged);
  CHECK(sol.residual_history.size() == 3);
  CHECK(std::isfinite(sol.residual));
}
