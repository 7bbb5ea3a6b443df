#pragma once

// Parameter sweeps with eigenvalue branch continuation, avoided-crossing
// detection, exceptional-point location in a two-parameter plane, and EP
// encircling with permutation/phase bookkeeping.
//
// Branch matching uses eigenvector overlaps (c-product magnitudes), not
// eigenvalue proximity: near avoided crossings the values approach while
// the vectors stay distinguishable.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "eptrap/linalg.hpp"
#include "eptrap/models.hpp"
#include "eptrap/parallel.hpp"
#include "eptrap/spectra.hpp"

namespace eptrap {

struct SweepGrid {
  std::string parameter;
  std::vector<double> samples;  // strictly monotone
  ModelSpec model;
};

struct Branch {
  int label = 0;
  std::vector<Complex> z;          // eigenvalue per sample
  std::vector<CVec> vectors;       // gauge-aligned, unit Euclidean norm
  std::vector<double> r_k;         // phase rigidity per sample
  std::vector<double> a_k;         // 1/r_k
  std::vector<bool> ep_adjacent;   // overlap below floor or mode flagged

  double width(std::size_t i) const { return -2.0 * z[i].imag(); }
};

struct SweepOptions {
  SpectraOptions spectra;
  double overlap_floor = 0.5;
  double ambiguity_tol = 1e-6;
};

struct AvoidedCrossing {
  int branch_a = 0;
  int branch_b = 0;
  double parameter = 0.0;
  double min_gap = 0.0;
  bool energy_repulsion = true;  // false: width bifurcation dominates
};

struct EpCandidate {
  std::vector<std::string> parameters;
  std::vector<double> location;
  double gap = 0.0;
  double scale = 0.0;  // ||H||_F at the optimum
  double min_phase_rigidity_nearby = 1.0;
  std::optional<JordanSolve> jordan;
};

struct EpSearchOptions {
  double ep_gap_tol_rel = 1e-8;  // accepted gap, relative to ||H||_F
  int simplex_max_iters = 600;
  int newton_max_iters = 60;
  double jordan_tol = 1e-6;
};

struct CycleReport {
  std::vector<std::string> parameters;
  std::vector<double> center;
  double radius = 0.0;
  int steps = 0;
  int loops = 0;
  // cumulative permutation after each loop: entry [L][k] is the starting
  // branch whose eigenvalue branch k occupies after L+1 loops
  std::vector<std::vector<int>> permutation;
  // accumulated phase of each continued vector against the start vector of
  // the slot it occupies, per loop (radians, wrapped to (-pi, pi])
  std::vector<std::vector<double>> phases;
  int loops_to_restore_values = 0;   // 0 = not restored within the run
  int loops_to_restore_vectors = 0;
  double phase_tol = 1e-3;
};

namespace detail {

// Hungarian algorithm (min-cost assignment), O(n^3). Costs must be finite.
inline std::vector<int> min_cost_assignment(const RMat& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = -1;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> match(n);  // match[row] = column
  for (int j = 1; j <= n; ++j) match[p[j] - 1] = j - 1;
  return match;
}

// |<v_prev*|v_next>| matrix of c-product magnitudes.
inline RMat overlap_matrix(const std::vector<CVec>& prev,
                           const std::vector<CVec>& next) {
  const int n = static_cast<int>(prev.size());
  RMat o(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) o(i, j) = std::abs(c_dot(prev[i], next[j]));
  return o;
}

struct MatchResult {
  std::vector<int> assign;  // assign[i] = index in `next` matched to prev i
  double min_overlap = 1.0;
  bool ambiguous = false;
};

inline MatchResult match_by_overlap(const std::vector<CVec>& prev,
                                    const std::vector<CVec>& next,
                                    double overlap_floor, double ambiguity_tol) {
  const int n = static_cast<int>(prev.size());
  RMat o = overlap_matrix(prev, next);
  // greedy on the global maximum
  MatchResult res;
  res.assign.assign(n, -1);
  std::vector<char> rowdone(n, false), coldone(n, false);
  double total = 0.0;
  for (int pick = 0; pick < n; ++pick) {
    int bi = -1, bj = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      if (rowdone[i]) continue;
      for (int j = 0; j < n; ++j) {
        if (coldone[j]) continue;
        if (o(i, j) > best) {
          best = o(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    res.assign[bi] = bj;
    rowdone[bi] = coldone[bj] = true;
    total += best;
    res.min_overlap = std::min(res.min_overlap, best);
  }
  if (res.min_overlap < overlap_floor) {
    // optimal-assignment fallback (maximize total overlap)
    std::vector<int> opt = min_cost_assignment(-o);
    double opt_total = 0.0, opt_min = 1.0;
    for (int i = 0; i < n; ++i) {
      opt_total += o(i, opt[i]);
      opt_min = std::min(opt_min, o(i, opt[i]));
    }
    if (opt_total > total) {
      res.assign = opt;
      res.min_overlap = opt_min;
      total = opt_total;
    }
  }
  // ambiguity: a single swap of two assignments comes within tol of the total
  for (int i = 0; i < n && !res.ambiguous; ++i)
    for (int j = i + 1; j < n; ++j) {
      double cur = o(i, res.assign[i]) + o(j, res.assign[j]);
      double swapped = o(i, res.assign[j]) + o(j, res.assign[i]);
      if (std::abs(cur - swapped) < ambiguity_tol) {
        res.ambiguous = true;
        break;
      }
    }
  return res;
}

// Phase gauge: rotate `vec` so the c-product with `ref` is real positive.
inline void align_phase(const CVec& ref, CVec& vec) {
  Complex ov = c_dot(ref, vec);
  if (std::abs(ov) > 0.0) vec *= std::exp(Complex(0, -std::arg(ov)));
}

struct SampleSolve {
  std::vector<Complex> values;
  std::vector<CVec> vectors;  // unit Euclidean norm
  std::vector<double> r;
  std::vector<double> a;
  std::vector<bool> flagged;
};

inline SampleSolve solve_sample(const Matrix& mat, const SpectraOptions& opts) {
  ModeSet ms = solve_modes(mat, opts);
  SampleSolve s;
  const int n = ms.n();
  s.values.resize(n);
  s.vectors.resize(n);
  s.r.resize(n);
  s.a.resize(n);
  s.flagged.resize(n);
  for (int k = 0; k < n; ++k) {
    s.values[k] = ms.modes[k].value;
    s.vectors[k] = ms.modes[k].right.normalized();
    s.r[k] = ms.flagged[k] ? phase_rigidity(ms.modes[k]) : ms.r_k[k];
    s.a[k] = ms.flagged[k] ? (s.r[k] > 0 ? 1.0 / s.r[k]
                                         : std::numeric_limits<double>::infinity())
                           : ms.a_k[k];
    s.flagged[k] = ms.flagged[k];
  }
  return s;
}

}  // namespace detail

inline std::vector<Branch> sweep(const SweepGrid& grid,
                                 const SweepOptions& opts = {}) {
  if (grid.samples.size() < 2) throw ConfigError("sweep needs >= 2 samples");
  const bool increasing = grid.samples[1] > grid.samples[0];
  for (std::size_t i = 1; i < grid.samples.size(); ++i) {
    bool ok = increasing ? grid.samples[i] > grid.samples[i - 1]
                         : grid.samples[i] < grid.samples[i - 1];
    if (!ok) throw ConfigError("sweep samples must be strictly monotone");
  }

  const std::size_t ns = grid.samples.size();
  std::vector<detail::SampleSolve> solves(ns);
  std::vector<std::string> failures(ns);
  parallel_for(ns, [&](std::size_t i) {
    try {
      Matrix mat = build(grid.model, {{grid.parameter, grid.samples[i]}});
      solves[i] = detail::solve_sample(mat, opts.spectra);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < ns; ++i)
    if (!failures[i].empty())
      throw ConfigError("model build/solve failed at sample " +
                        std::to_string(grid.samples[i]) + ": " + failures[i]);

  const int n = static_cast<int>(solves[0].values.size());
  std::vector<Branch> branches(n);
  for (int k = 0; k < n; ++k) {
    branches[k].label = k;
    branches[k].z.reserve(ns);
    branches[k].vectors.reserve(ns);
  }
  auto push = [&](int k, const detail::SampleSolve& s, int idx, bool adjacent) {
    branches[k].z.push_back(s.values[idx]);
    branches[k].vectors.push_back(s.vectors[idx]);
    branches[k].r_k.push_back(s.r[idx]);
    branches[k].a_k.push_back(s.a[idx]);
    branches[k].ep_adjacent.push_back(adjacent || s.flagged[idx]);
  };
  for (int k = 0; k < n; ++k) push(k, solves[0], k, false);

  std::vector<int> slot(n);  // slot[k] = index in current sample for branch k
  std::iota(slot.begin(), slot.end(), 0);
  for (std::size_t i = 1; i < ns; ++i) {
    std::vector<CVec> prev(n);
    for (int k = 0; k < n; ++k) prev[k] = branches[k].vectors.back();
    auto match = detail::match_by_overlap(prev, solves[i].vectors,
                                          opts.overlap_floor, opts.ambiguity_tol);
    for (int k = 0; k < n; ++k) {
      int idx = match.assign[k];
      CVec aligned = solves[i].vectors[idx];
      detail::align_phase(prev[k], aligned);
      double ov = std::abs(c_dot(prev[k], aligned));
      branches[k].z.push_back(solves[i].values[idx]);
      branches[k].vectors.push_back(std::move(aligned));
      branches[k].r_k.push_back(solves[i].r[idx]);
      branches[k].a_k.push_back(solves[i].a[idx]);
      branches[k].ep_adjacent.push_back(ov < opts.overlap_floor ||
                                        solves[i].flagged[idx]);
    }
  }
  return branches;
}

inline std::vector<AvoidedCrossing> detect_avoided_crossings(
    const std::vector<Branch>& branches, const std::vector<double>& samples,
    double gap_threshold) {
  std::vector<AvoidedCrossing> events;
  const int n = static_cast<int>(branches.size());
  if (n < 2) return events;
  const std::size_t ns = samples.size();
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (std::size_t i = 1; i + 1 < ns; ++i) {
        double g0 = std::abs(branches[a].z[i - 1] - branches[b].z[i - 1]);
        double g1 = std::abs(branches[a].z[i] - branches[b].z[i]);
        double g2 = std::abs(branches[a].z[i + 1] - branches[b].z[i + 1]);
        if (g1 <= g0 && g1 <= g2 && g1 < gap_threshold) {
          Complex dz = branches[a].z[i] - branches[b].z[i];
          events.push_back({a, b, samples[i], g1,
                            std::abs(dz.real()) >= std::abs(dz.imag())});
        }
      }
    }
  }
  return events;
}

namespace detail {

// smallest eigenvalue gap of the model at a two-parameter point
inline double pair_gap(const ModelSpec& model, const std::string& p1,
                       const std::string& p2, double x, double y,
                       double* scale = nullptr) {
  Matrix mat = build(model, {{p1, x}, {p2, y}});
  if (scale) *scale = mat.frobenius();
  auto vals = eig_values(mat);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vals.size(); ++i)
    for (std::size_t j = i + 1; j < vals.size(); ++j)
      best = std::min(best, std::abs(vals[i] - vals[j]));
  return best;
}

// Nelder-Mead on f over two real parameters.
template <class F>
std::pair<Eigen::Vector2d, double> nelder_mead_2d(F f, Eigen::Vector2d start,
                                                  double step, int max_iters) {
  std::array<Eigen::Vector2d, 3> x{start, start + Eigen::Vector2d(step, 0),
                                   start + Eigen::Vector2d(0, step)};
  std::array<double, 3> fx{f(x[0]), f(x[1]), f(x[2])};
  auto order = [&] {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    std::array<Eigen::Vector2d, 3> nx{x[idx[0]], x[idx[1]], x[idx[2]]};
    std::array<double, 3> nf{fx[idx[0]], fx[idx[1]], fx[idx[2]]};
    x = nx;
    fx = nf;
  };
  for (int it = 0; it < max_iters; ++it) {
    order();
    if ((x[2] - x[0]).norm() < 1e-15 * (1.0 + x[0].norm())) break;
    Eigen::Vector2d centroid = 0.5 * (x[0] + x[1]);
    Eigen::Vector2d refl = centroid + (centroid - x[2]);
    double fr = f(refl);
    if (fr < fx[0]) {
      Eigen::Vector2d exp_pt = centroid + 2.0 * (centroid - x[2]);
      double fe = f(exp_pt);
      if (fe < fr) {
        x[2] = exp_pt;
        fx[2] = fe;
      } else {
        x[2] = refl;
        fx[2] = fr;
      }
    } else if (fr < fx[1]) {
      x[2] = refl;
      fx[2] = fr;
    } else {
      Eigen::Vector2d con = centroid + 0.5 * (x[2] - centroid);
      double fc = f(con);
      if (fc < fx[2]) {
        x[2] = con;
        fx[2] = fc;
      } else {
        x[1] = x[0] + 0.5 * (x[1] - x[0]);
        x[2] = x[0] + 0.5 * (x[2] - x[0]);
        fx[1] = f(x[1]);
        fx[2] = f(x[2]);
      }
    }
  }
  order();
  return {x[0], fx[0]};
}

// 2x2 discriminant (h11 - h22)^2 + 4 h12 h21; zero exactly at the EP.
inline Complex discriminant_2x2(const ModelSpec& model, const std::string& p1,
                                const std::string& p2, double x, double y) {
  Matrix mat = build(model, {{p1, x}, {p2, y}});
  const CMat& h = mat.m;
  Complex d = h(0, 0) - h(1, 1);
  return d * d + 4.0 * h(0, 1) * h(1, 0);
}

}  // namespace detail

// Locates an EP as the minimum of the smallest eigenvalue gap over two real
// parameters, seeded by derivative-free simplex descent and polished by
// Newton iteration on the 2x2 discriminant when the model is two-level.
inline EpCandidate locate_ep(const ModelSpec& model, const std::string& p1,
                             const std::string& p2,
                             const Eigen::Vector2d& guess,
                             const EpSearchOptions& opts = {}) {
  auto gap_fn = [&](const Eigen::Vector2d& p) {
    return detail::pair_gap(model, p1, p2, p(0), p(1));
  };
  double step = std::max(0.05, 0.05 * guess.norm());
  auto [best, fbest] =
      detail::nelder_mead_2d(gap_fn, guess, step, opts.simplex_max_iters);

  bool is_2x2 = build(model, {{p1, best(0)}, {p2, best(1)}}).n() == 2;
  if (is_2x2) {
    // Newton on (Re D, Im D) = 0 with a finite-difference Jacobian; the gap
    // scales like sqrt(distance), so the simplex alone cannot reach 1e-8
    auto newton = [&](Eigen::Vector2d p) {
      for (int it = 0; it < opts.newton_max_iters; ++it) {
        Complex d0 = detail::discriminant_2x2(model, p1, p2, p(0), p(1));
        if (std::abs(d0) == 0.0) break;
        double h = 1e-7 * (1.0 + p.norm());
        Complex dx =
            (detail::discriminant_2x2(model, p1, p2, p(0) + h, p(1)) - d0) / h;
        Complex dy =
            (detail::discriminant_2x2(model, p1, p2, p(0), p(1) + h) - d0) / h;
        Eigen::Matrix2d jac;
        jac << dx.real(), dy.real(), dx.imag(), dy.imag();
        Eigen::Vector2d rhs(-d0.real(), -d0.imag());
        if (std::abs(jac.determinant()) < 1e-30) break;
        Eigen::Vector2d delta = jac.colPivHouseholderQr().solve(rhs);
        p += delta;
        if (delta.norm() < 1e-14 * (1.0 + p.norm())) break;
      }
      return p;
    };
    // multi-start: the simplex can stall where the Jacobian degenerates
    double jitter = 0.02 * (1.0 + best.norm());
    const std::array<Eigen::Vector2d, 6> starts{
        best, guess, best + Eigen::Vector2d(jitter, 0),
        best + Eigen::Vector2d(-jitter, 0), best + Eigen::Vector2d(0, jitter),
        best + Eigen::Vector2d(0, -jitter)};
    for (const auto& s0 : starts) {
      Eigen::Vector2d p = newton(s0);
      double fp = gap_fn(p);
      if (fp < fbest) {
        best = p;
        fbest = fp;
      }
      if (fbest <= 1e-12 * (1.0 + best.norm())) break;
    }
  }

  double scale = 0.0;
  double gap = detail::pair_gap(model, p1, p2, best(0), best(1), &scale);
  double tol = opts.ep_gap_tol_rel * std::max(scale, 1e-300);
  if (!(gap <= tol))
    throw NoEpFoundError("gap " + std::to_string(gap) + " above tolerance " +
                         std::to_string(tol) + " at best point (" +
                         std::to_string(best(0)) + ", " +
                         std::to_string(best(1)) + ")");

  EpCandidate ep;
  ep.parameters = {p1, p2};
  ep.location = {best(0), best(1)};
  ep.gap = gap;
  ep.scale = scale;

  // probe phase rigidity slightly off the EP
  double probe = 1e-3 * (1.0 + best.norm());
  for (auto [ox, oy] : {std::pair{probe, 0.0}, {0.0, probe}, {-probe, 0.0},
                        {0.0, -probe}}) {
    try {
      Matrix mat = build(model, {{p1, best(0) + ox}, {p2, best(1) + oy}});
      ModeSet ms = solve_modes(mat);
      for (int k = 0; k < ms.n(); ++k)
        if (!ms.flagged[k])
          ep.min_phase_rigidity_nearby =
              std::min(ep.min_phase_rigidity_nearby, ms.r_k[k]);
    } catch (const Error&) {
    }
  }

  try {
    Matrix mat = build(model, {{p1, best(0)}, {p2, best(1)}});
    auto vals = eig_values(mat);
    // degenerate value: midpoint of the closest pair
    Complex eps0;
    double bestgap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vals.size(); ++i)
      for (std::size_t j = i + 1; j < vals.size(); ++j)
        if (std::abs(vals[i] - vals[j]) < bestgap) {
          bestgap = std::abs(vals[i] - vals[j]);
          eps0 = 0.5 * (vals[i] + vals[j]);
        }
    ep.jordan = jordan_chain(mat, eps0, opts.jordan_tol);
  } catch (const NotAnEpError&) {
    // degenerate but diagonalizable: a diabolic point, not an EP
    throw NotAnEpError("degeneracy at (" + std::to_string(best(0)) + ", " +
                       std::to_string(best(1)) +
                       ") is diagonalizable (diabolic point)");
  } catch (const Error&) {
    ep.jordan.reset();
  }
  return ep;
}

// Continuation around a closed circle in the two-parameter plane centered
// near an EP. Permutations and accumulated phases are recorded at every
// loop closure; a generic second-order EP restores eigenvalues after 2
// loops and eigenvectors after 4.
inline CycleReport encircle_ep(const ModelSpec& model, const std::string& p1,
                               const std::string& p2,
                               const Eigen::Vector2d& center, double radius,
                               int steps, int loops,
                               const SweepOptions& opts = {},
                               double phase_tol = 1e-3) {
  if (steps < 100) throw ConfigError("encircling needs >= 100 steps per loop");
  if (loops < 1) throw ConfigError("encircling needs >= 1 loop");

  auto solve_at = [&](double theta) {
    Matrix mat = build(model, {{p1, center(0) + radius * std::cos(theta)},
                               {p2, center(1) + radius * std::sin(theta)}});
    return detail::solve_sample(mat, opts.spectra);
  };

  detail::SampleSolve start = solve_at(0.0);
  const int n = static_cast<int>(start.values.size());
  std::vector<CVec> current = start.vectors;
  std::vector<Complex> curvals = start.values;

  CycleReport rep;
  rep.parameters = {p1, p2};
  rep.center = {center(0), center(1)};
  rep.radius = radius;
  rep.steps = steps;
  rep.loops = loops;
  rep.phase_tol = phase_tol;

  const long total = static_cast<long>(steps) * loops;
  for (long t = 1; t <= total; ++t) {
    double theta = 2.0 * M_PI * static_cast<double>(t) / steps;
    detail::SampleSolve s = solve_at(theta);
    auto match = detail::match_by_overlap(current, s.vectors,
                                          opts.overlap_floor, opts.ambiguity_tol);
    if (match.min_overlap < opts.overlap_floor)
      throw StepSizeError("continuation overlap " +
                          std::to_string(match.min_overlap) +
                          " below floor at step " + std::to_string(t) +
                          "; increase steps per loop");
    std::vector<CVec> next(n);
    std::vector<Complex> nextvals(n);
    for (int k = 0; k < n; ++k) {
      next[k] = s.vectors[match.assign[k]];
      detail::align_phase(current[k], next[k]);
      nextvals[k] = s.values[match.assign[k]];
    }
    current = std::move(next);
    curvals = std::move(nextvals);

    if (t % steps == 0) {
      // which starting slot does each continued branch occupy now?
      std::vector<int> perm(n);
      std::vector<double> phase(n);
      RMat ov = detail::overlap_matrix(start.vectors, current);
      std::vector<int> occupied = detail::min_cost_assignment(-ov.transpose());
      for (int k = 0; k < n; ++k) {
        int slot = occupied[k];
        perm[k] = slot;
        Complex f = c_dot(start.vectors[slot], current[k]);
        phase[k] = std::arg(f);
      }
      rep.permutation.push_back(perm);
      rep.phases.push_back(phase);
    }
  }

  auto wrapped_zero = [&](double ph) {
    double m = std::fmod(std::abs(ph), 2.0 * M_PI);
    return std::min(m, 2.0 * M_PI - m) <= phase_tol;
  };
  for (int L = 0; L < loops; ++L) {
    bool identity = true;
    for (int k = 0; k < n; ++k)
      if (rep.permutation[L][k] != k) identity = false;
    if (identity && rep.loops_to_restore_values == 0)
      rep.loops_to_restore_values = L + 1;
    if (identity && rep.loops_to_restore_vectors == 0) {
      bool zero = true;
      for (int k = 0; k < n; ++k)
        if (!wrapped_zero(rep.phases[L][k])) zero = false;
      if (zero) rep.loops_to_restore_vectors = L + 1;
    }
  }
  return rep;
}

}  // namespace eptrap
