#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "eptrap/sweeps.hpp"
#include "test_support.hpp"

using namespace eptrap;
using namespace eptrap::test;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

// two-level model with an EP at omega_re = d (eps1 = id, eps2 = -id)
ModelSpec damped_pair(double d) {
  return TwoLevelSpec{Complex(0, d), Complex(0, -d), Complex(0, 0)};
}

}  // namespace

TEST_CASE("hungarian assignment: diagonal-dominant cost picks the diagonal") {
  RMat cost(3, 3);
  cost << 0.0, 5.0, 5.0, 5.0, 0.0, 5.0, 5.0, 5.0, 0.0;
  auto m = detail::min_cost_assignment(cost);
  for (int i = 0; i < 3; ++i) CHECK(m[i] == i);
}

TEST_CASE("hungarian assignment beats greedy on a crafted cost") {
  // greedy grabs (0,0)=0 then is forced into (1,1)=10; optimal total is 3
  RMat cost(2, 2);
  cost << 0.0, 1.0, 2.0, 10.0;
  auto m = detail::min_cost_assignment(cost);
  CHECK(m[0] == 1);
  CHECK(m[1] == 0);
}

TEST_CASE("hungarian assignment matches brute force on random 5x5 costs") {
  for (int rep = 0; rep < 50; ++rep) {
    RMat cost = RMat::Random(5, 5);
    auto m = detail::min_cost_assignment(cost);
    double got = 0;
    for (int i = 0; i < 5; ++i) got += cost(i, m[i]);
    std::vector<int> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double tot = 0;
      for (int i = 0; i < 5; ++i) tot += cost(i, perm[i]);
      best = std::min(best, tot);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("sweep: PT dimer eigenvalue branches match the closed form") {
  SweepGrid grid;
  grid.parameter = "gamma";
  grid.samples = linspace(0.1, 1.2, 60);  // well below the threshold at 2
  grid.model = PTSpec{0.0, 0.1, 1.0};
  auto branches = sweep(grid);
  REQUIRE(branches.size() == 2);
  for (std::size_t i = 0; i < grid.samples.size(); ++i) {
    double g = grid.samples[i];
    double z = std::sqrt(1.0 - 0.25 * g * g);
    // branch 0 starts at -z and must track it continuously
    CHECK(std::abs(branches[0].z[i] - Complex(-z, 0)) <= 1e-10);
    CHECK(std::abs(branches[1].z[i] - Complex(z, 0)) <= 1e-10);
    CHECK_FALSE(branches[0].ep_adjacent[i]);
  }
}

TEST_CASE("sweep: branches follow vectors, not eigenvalue ordering") {
  // diagonal crossing: values swap order at t = 0 but the vectors are
  // constant basis states, so each branch keeps its slope
  SweepGrid grid;
  grid.parameter = "eps1_re";
  grid.samples = linspace(-1.0, 1.0, 41);
  grid.model = TwoLevelSpec{Complex(0, 0), Complex(0, 0), Complex(0, 0)};
  auto branches = sweep(grid);
  // branch tracking eps1 moves linearly, the other stays at 0
  int moving = std::abs(branches[0].z.front().real() + 1.0) < 1e-12 ? 0 : 1;
  for (std::size_t i = 0; i < grid.samples.size(); ++i) {
    if (std::abs(grid.samples[i]) < 1e-12) continue;  // degenerate point
    CHECK(std::abs(branches[moving].z[i].real() - grid.samples[i]) <= 1e-10);
    CHECK(std::abs(branches[1 - moving].z[i].real()) <= 1e-10);
  }
}

TEST_CASE("sweep: gauge-aligned vectors vary continuously") {
  SweepGrid grid;
  grid.parameter = "omega_re";
  grid.samples = linspace(0.05, 0.45, 80);  // approaches the EP at 0.5
  grid.model = damped_pair(0.5);
  auto branches = sweep(grid);
  for (const auto& br : branches)
    for (std::size_t i = 1; i < br.vectors.size(); ++i)
      CHECK((br.vectors[i] - br.vectors[i - 1]).norm() < 0.2);
}

TEST_CASE("sweep: overlap collapse near the EP is flagged") {
  SweepGrid grid;
  grid.parameter = "omega_re";
  grid.samples = linspace(0.4, 0.6, 201);  // straight through the EP at 0.5
  grid.model = damped_pair(0.5);
  auto branches = sweep(grid);
  bool any = false;
  for (const auto& br : branches)
    for (bool f : br.ep_adjacent) any = any || f;
  CHECK(any);
}

TEST_CASE("sweep: rejects bad grids") {
  SweepGrid grid;
  grid.parameter = "omega_re";
  grid.model = damped_pair(0.5);
  grid.samples = {0.1};
  CHECK_THROWS_AS(sweep(grid), ConfigError);
  grid.samples = {0.1, 0.3, 0.2};
  CHECK_THROWS_AS(sweep(grid), ConfigError);
  grid.samples = {0.1, 0.2, 0.3};
  grid.parameter = "nonsense";
  CHECK_THROWS_AS(sweep(grid), ConfigError);
}

TEST_CASE("detect_avoided_crossings: repulsion vs width bifurcation") {
  // omega real and fixed, sweep eps1_re through eps2_re: energy repulsion
  SweepGrid grid;
  grid.parameter = "eps1_re";
  grid.samples = linspace(-1.0, 1.0, 201);
  grid.model = TwoLevelSpec{Complex(0, -0.05), Complex(0, -0.051), Complex(0.2, 0)};
  auto branches = sweep(grid);
  auto events = detect_avoided_crossings(branches, grid.samples, 0.5);
  REQUIRE(!events.empty());
  CHECK(events[0].energy_repulsion);
  CHECK(std::abs(events[0].parameter) < 0.05);
  CHECK(events[0].min_gap == doctest::Approx(0.4).epsilon(1e-2));

  // width bifurcation: widths repel, energies coincide at closest approach
  std::vector<Branch> b2(2);
  std::vector<double> t = linspace(-1.0, 1.0, 201);
  for (double x : t) {
    double s = std::sqrt(x * x + 0.01);
    b2[0].z.push_back(Complex(0.0, -0.5 - s));
    b2[1].z.push_back(Complex(0.0, -0.5 + s));
  }
  auto e2 = detect_avoided_crossings(b2, t, 1.5);
  REQUIRE(!e2.empty());
  CHECK_FALSE(e2[0].energy_repulsion);
  CHECK(e2[0].min_gap == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("locate_ep: recovers the analytic two-level EP to 1e-6") {
  double d = 0.5;
  ModelSpec model = damped_pair(d);
  EpSearchOptions opts;
  auto ep = locate_ep(model, "omega_re", "omega_im",
                      Eigen::Vector2d(0.4, 0.05), opts);
  CHECK(std::abs(ep.location[0] - d) <= 1e-6);
  CHECK(std::abs(ep.location[1]) <= 1e-6);
  CHECK(ep.gap <= opts.ep_gap_tol_rel * ep.scale);
  CHECK(ep.min_phase_rigidity_nearby < 0.2);
  REQUIRE(ep.jordan.has_value());
  CHECK(ep.jordan->defect_residual <= 1e-6);
}

TEST_CASE("locate_ep: 50 random two-level EPs recovered from offset guesses") {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int found = 0;
  for (int rep = 0; rep < 50; ++rep) {
    double d = 0.2 + 0.6 * std::abs(u(rng()));
    double e0 = 0.5 * u(rng());
    ModelSpec model =
        TwoLevelSpec{Complex(e0, d), Complex(e0, -d), Complex(0, 0)};
    Eigen::Vector2d truth(d, 0.0);
    Eigen::Vector2d guess = truth + 0.1 * Eigen::Vector2d(u(rng()), u(rng()));
    try {
      auto ep = locate_ep(model, "omega_re", "omega_im", guess);
      CHECK(std::abs(ep.location[0] - d) <= 1e-6);
      CHECK(std::abs(ep.location[1]) <= 1e-6);
      CHECK(ep.gap <= 1e-8 * ep.scale);
      ++found;
    } catch (const NoEpFoundError&) {
    }
  }
  CHECK(found == 50);
}

TEST_CASE("locate_ep: reports failure when no EP is reachable") {
  // real diagonals with fixed real coupling: the gap never drops below 2|w|
  ModelSpec model = TwoLevelSpec{Complex(-0.5, 0), Complex(0.5, 0), Complex(0.1, 0)};
  CHECK_THROWS_AS(
      locate_ep(model, "eps1_re", "eps2_re", Eigen::Vector2d(-0.4, 0.4)),
      NoEpFoundError);
}

TEST_CASE("locate_ep: a diabolic point is rejected as not an EP") {
  // uncoupled levels cross at eps1 = eps2 but stay diagonalizable
  ModelSpec model = TwoLevelSpec{Complex(0, 0), Complex(0.5, 0), Complex(0, 0)};
  CHECK_THROWS_AS(
      locate_ep(model, "eps1_re", "eps1_im", Eigen::Vector2d(0.4, 0.1)),
      NotAnEpError);
}

TEST_CASE("encircle_ep: one loop swaps the two eigenvalue branches") {
  ModelSpec model = damped_pair(0.5);
  auto rep = encircle_ep(model, "omega_re", "omega_im",
                         Eigen::Vector2d(0.5, 0.0), 0.1, 200, 1);
  REQUIRE(rep.permutation.size() == 1);
  CHECK(rep.permutation[0][0] == 1);
  CHECK(rep.permutation[0][1] == 0);
  CHECK(rep.loops_to_restore_values == 0);  // not restored in one loop
}

TEST_CASE("encircle_ep: values restore after 2 loops, vectors after 4") {
  ModelSpec model = damped_pair(0.5);
  auto rep = encircle_ep(model, "omega_re", "omega_im",
                         Eigen::Vector2d(0.5, 0.0), 0.1, 400, 4);
  REQUIRE(rep.permutation.size() == 4);
  CHECK(rep.loops_to_restore_values == 2);
  CHECK(rep.loops_to_restore_vectors == 4);
  // after 2 loops the vectors carry the geometric phase pi
  for (int k = 0; k < 2; ++k) {
    double ph = std::abs(rep.phases[1][k]);
    CHECK(std::abs(ph - M_PI) <= rep.phase_tol);
  }
}

TEST_CASE("encircle_ep: step doubling changes loop phases by < 1e-3") {
  ModelSpec model = damped_pair(0.5);
  auto coarse = encircle_ep(model, "omega_re", "omega_im",
                            Eigen::Vector2d(0.5, 0.0), 0.08, 400, 2);
  auto fine = encircle_ep(model, "omega_re", "omega_im",
                          Eigen::Vector2d(0.5, 0.0), 0.08, 800, 2);
  REQUIRE(coarse.permutation[1] == fine.permutation[1]);
  for (int k = 0; k < 2; ++k) {
    double d = std::abs(coarse.phases[1][k] - fine.phases[1][k]);
    d = std::min(d, 2.0 * M_PI - d);
    CHECK(d < 1e-3);
  }
}

TEST_CASE("encircle_ep: loop not containing the EP is trivial") {
  ModelSpec model = damped_pair(0.5);
  auto rep = encircle_ep(model, "omega_re", "omega_im",
                         Eigen::Vector2d(1.2, 0.0), 0.1, 150, 1);
  CHECK(rep.permutation[0][0] == 0);
  CHECK(rep.permutation[0][1] == 1);
  CHECK(rep.loops_to_restore_values == 1);
  CHECK(rep.loops_to_restore_vectors == 1);
}

TEST_CASE("encircle_ep: parameter validation") {
  ModelSpec model = damped_pair(0.5);
  CHECK_THROWS_AS(encircle_ep(model, "omega_re", "omega_im",
                              Eigen::Vector2d(0.5, 0.0), 0.1, 50, 1),
                  ConfigError);
  CHECK_THROWS_AS(encircle_ep(model, "omega_re", "omega_im",
                              Eigen::Vector2d(0.5, 0.0), 0.1, 200, 0),
                  ConfigError);
}
