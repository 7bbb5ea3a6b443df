#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "eptrap/models.hpp"
#include "test_support.hpp"

using namespace eptrap;
using namespace eptrap::test;

TEST_CASE("two-level build: omega = 0 gives diagonal") {
  Matrix m = build(TwoLevelSpec{Complex(1, 0), Complex(2, 0), Complex(0, 0)});
  CHECK(m.symmetric);
  CHECK(m.m(0, 0) == Complex(1, 0));
  CHECK(m.m(1, 1) == Complex(2, 0));
  CHECK(m.m(0, 1) == Complex(0, 0));
}

TEST_CASE("toy chain build: direct substitution with the -i/2 convention") {
  ToyChainSpec s{2, {0.0, 0.0}, {Complex(1, 0), Complex(1, 0)}, 1.0};
  Matrix m = build(s);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(m.m(i, j) - Complex(0, -0.5)) <= 1e-15);
}

TEST_CASE("PT build: gamma < 2|omega| gives real eigenvalues") {
  Matrix m = build(PTSpec{0.0, 1.0, 1.0});
  auto vals = eig_values(m);
  double z = std::sqrt(1.0 - 0.25);
  CHECK(std::abs(vals[0] - Complex(-z, 0)) <= 1e-12);
  CHECK(std::abs(vals[1] - Complex(z, 0)) <= 1e-12);
}

TEST_CASE("PT threshold at gamma = 2|omega| exactly") {
  for (double g : {0.5, 1.0, 1.9, 1.99}) {
    auto vals = eig_values(build(PTSpec{0.3, g, 1.0}));
    CHECK(std::abs(vals[0].imag()) <= 1e-10);
    CHECK(std::abs(vals[1].imag()) <= 1e-10);
  }
  for (double g : {2.01, 2.5, 4.0}) {
    auto vals = eig_values(build(PTSpec{0.3, g, 1.0}));
    CHECK(std::abs(vals[0].imag()) > 1e-6);
    // conjugate pair
    CHECK(std::abs(vals[0].imag() + vals[1].imag()) <= 1e-12);
  }
}

TEST_CASE("pv_self_energy: symmetric midpoint cancels") {
  BandModelSpec s{1, 1, {0.0}, {{1.0}}, {{0.0, 2.0}}, 1.0};
  CHECK(pv_self_energy(s, 0, 0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("pv_self_energy: analytic log value") {
  BandModelSpec s{1, 1, {0.0}, {{1.0}}, {{0.0, 2.0}}, 1.5};
  CHECK(pv_self_energy(s, 0, 0) ==
        doctest::Approx(std::log(3.0) / (2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("pv_self_energy: zero coupling gives zero") {
  BandModelSpec s{2, 1, {0.0, 1.0}, {{0.0}, {1.0}}, {{-1.0, 3.0}}, 0.5};
  CHECK(pv_self_energy(s, 0, 0) == 0.0);
  CHECK(pv_self_energy(s, 0, 1) == 0.0);
}

TEST_CASE("pv_self_energy: energy outside the band is rejected") {
  BandModelSpec s{1, 1, {0.0}, {{1.0}}, {{0.0, 2.0}}, 2.5};
  CHECK_THROWS_AS(pv_self_energy(s, 0, 0), DomainError);
}

TEST_CASE("pv quadrature agrees with the closed form on random boxes") {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int rep = 0; rep < 100; ++rep) {
    double lo = -2.0 + 4.0 * u(rng());
    double hi = lo + 0.5 + 3.0 * u(rng());
    double e = lo + (hi - lo) * u(rng());
    double g = 0.1 + 2.0 * u(rng());
    double closed = g * g * std::log((e - lo) / (hi - e)) / (2.0 * M_PI);
    double quad = g * g *
                  pv_quadrature([&](double) { return 1.0; }, lo, hi, e) /
                  (2.0 * M_PI);
    double denom = std::max(std::abs(closed), 1e-3);
    CHECK(std::abs(quad - closed) / denom <= 1e-6);
  }
}

TEST_CASE("pv quadrature handles a non-constant profile") {
  // PV int_a^b x/(E-x) dx = E ln((E-a)/(b-E)) - (b-a)
  double a = 0.0, b = 2.0, e = 1.25;
  double exact = e * std::log((e - a) / (b - e)) - (b - a);
  double quad = pv_quadrature([](double x) { return x; }, a, b, e);
  CHECK(quad == doctest::Approx(exact).epsilon(1e-9));
}

TEST_CASE("residuum matrix: direct substitution") {
  BandModelSpec s{2, 1, {0.0, 0.0}, {{1.0}, {2.0}}, {{-10.0, 10.0}}, 0.0};
  RMat r = residuum_matrix(s);
  CHECK(r(0, 0) == doctest::Approx(-0.5));
  CHECK(r(0, 1) == doctest::Approx(-1.0));
  CHECK(r(1, 0) == doctest::Approx(-1.0));
  CHECK(r(1, 1) == doctest::Approx(-2.0));
}

TEST_CASE("residuum matrix: orthogonal channel columns give -(1/2) identity") {
  BandModelSpec s{2, 2, {0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}},
                  {{-1.0, 1.0}, {-1.0, 1.0}}, 0.0};
  RMat r = residuum_matrix(s);
  CHECK((r + 0.5 * RMat::Identity(2, 2)).norm() <= 1e-15);
}

TEST_CASE("build_heff_band: closed-system limit") {
  BandModelSpec s{2, 1, {0.5, 1.5}, {{0.0}, {0.0}}, {{0.0, 2.0}}, 1.0};
  Matrix h = build_heff_band(s);
  auto vals = eig_values(h);
  CHECK(std::abs(vals[0] - Complex(0.5, 0)) <= 1e-13);
  CHECK(std::abs(vals[1] - Complex(1.5, 0)) <= 1e-13);
}

TEST_CASE("build_heff_band: 1x1 case read off the defining equations") {
  double g = 0.7;
  BandModelSpec s{1, 1, {0.3}, {{g}}, {{0.0, 2.0}}, 1.5};
  Matrix h = build_heff_band(s);
  double shift = g * g * std::log(1.5 / 0.5) / (2.0 * M_PI);
  CHECK(std::abs(h.m(0, 0) - Complex(0.3 + shift, -0.5 * g * g)) <= 1e-14);
}

TEST_CASE("build_heff_band: N=2 eigenvalues match the 2x2 closed form") {
  BandModelSpec s{2, 1, {0.8, 1.2}, {{0.6}, {0.4}}, {{0.0, 2.0}}, 1.1};
  Matrix h = build_heff_band(s);
  auto vals = eig_values(h);
  auto [lo, hi] = two_level_closed_form(h.m(0, 0), h.m(1, 1), h.m(0, 1));
  if (detail::value_less(hi, lo)) std::swap(lo, hi);
  CHECK(std::abs(vals[0] - lo) <= 1e-12 * h.frobenius());
  CHECK(std::abs(vals[1] - hi) <= 1e-12 * h.frobenius());
}

TEST_CASE("toy chain width sum rule: -2 Im tr = alpha |v|^2") {
  for (double alpha : {0.1, 1.0, 5.0}) {
    ToyChainSpec s{4, {-1.5, -0.5, 0.5, 1.5},
                   {Complex(1, 0), Complex(0.5, 0), Complex(-0.5, 0), Complex(1, 0)},
                   alpha};
    Matrix m = build(s);
    double vnorm2 = 1.0 + 0.25 + 0.25 + 1.0;
    CHECK(-2.0 * m.m.trace().imag() == doctest::Approx(alpha * vnorm2).epsilon(1e-13));
    double gsum = 0;
    for (auto z : eig_values(m)) gsum += -2.0 * z.imag();
    CHECK(gsum == doctest::Approx(alpha * vnorm2).epsilon(1e-9));
  }
}

TEST_CASE("every built matrix is complex symmetric") {
  CHECK(build(TwoLevelSpec{rand_complex(), rand_complex(), rand_complex()}).symmetric);
  CHECK(build(PTSpec{0.1, 0.4, 0.2}).symmetric);
  CHECK(build(ThreeLevelSpec{{rand_complex(), rand_complex(), rand_complex()},
                             rand_complex(), rand_complex(), rand_complex()})
            .symmetric);
}

TEST_CASE("spin swap frequency") {
  CHECK(spin_swap_frequency(1.0, 0.0, 1.0) == Complex(1.0, 0.0));
  Complex f = spin_swap_frequency(0.3, 1.0, 2.0);
  CHECK(f.real() == doctest::Approx(0.0));
  CHECK(std::abs(f.imag()) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(std::abs(spin_swap_frequency(0.5, 1.0, 2.0)) <= 1e-15);
}

TEST_CASE("parameter overrides") {
  ModelSpec spec = TwoLevelSpec{Complex(0, 0), Complex(0, 0), Complex(0.5, 0)};
  Matrix m = build(spec, {{"eps1_im", 0.3}, {"omega_re", 0.7}});
  CHECK(m.m(0, 0) == Complex(0, 0.3));
  CHECK(m.m(0, 1) == Complex(0.7, 0));
  CHECK_THROWS_AS(build(spec, {{"bogus", 1.0}}), ConfigError);
}

TEST_CASE("coupling matrix consistency with the toy chain") {
  ToyChainSpec s{3, {-1, 0, 1}, {Complex(1, 0), Complex(1, 0), Complex(1, 0)}, 0.8};
  ModelSpec spec = s;
  RMat g = coupling_matrix(spec);
  Matrix h = build(spec);
  // imaginary part of H equals -(1/2) g g^T
  CMat im_part = 0.5 * (h.m - h.m.conjugate());
  CHECK((im_part - Complex(0, -0.5) * (g * g.transpose()).cast<Complex>()).norm() <= 1e-13);
}
