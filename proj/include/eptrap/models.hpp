#pragma once

// Model Hamiltonian families: two-level, toy chain, band-coupling with
// principal-value self-energy, PT-symmetric pair, three-level observer.
// All builders return complex symmetric matrices in model units (hbar = 1).
//
// Sign convention: widths obey z = E - (i/2) Gamma with Gamma >= 0, so the
// toy chain is built as diag(h0) - (i/2) alpha v v^T.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "eptrap/linalg.hpp"

namespace eptrap {

struct TwoLevelSpec {
  Complex eps1{0, 0};
  Complex eps2{0, 0};
  Complex omega{0, 0};
};

struct ToyChainSpec {
  int n = 2;
  std::vector<double> h0_diag;   // unperturbed energies
  std::vector<Complex> v;        // coupling vector to the single channel
  double alpha = 0.0;            // coupling strength, >= 0
};

struct BandModelSpec {
  int n = 1;
  int channels = 1;
  std::vector<double> e_b;                         // basis energies E_k^B
  std::vector<std::vector<double>> gamma0;         // n x channels amplitudes
  std::vector<std::pair<double, double>> bands;    // channel windows
  double energy = 0.0;                             // evaluation energy E
  bool wide_band = false;  // drop the PV shift, energy-independent coupling
};

struct PTSpec {
  double e = 0.0;      // common level energy
  double gamma = 0.0;  // gain/loss rate, >= 0
  double omega = 0.0;  // coupling
};

struct ThreeLevelSpec {
  TwoLevelSpec two_level;
  Complex eps3{0, 0};
  Complex w13{0, 0};
  Complex w23{0, 0};
};

using ModelSpec =
    std::variant<TwoLevelSpec, ToyChainSpec, BandModelSpec, PTSpec, ThreeLevelSpec>;

namespace detail {

inline void validate(const ToyChainSpec& s) {
  if (s.n < 2) throw ConfigError("toy chain needs n >= 2");
  if (s.alpha < 0) throw ConfigError("toy chain needs alpha >= 0");
  if (static_cast<int>(s.h0_diag.size()) != s.n ||
      static_cast<int>(s.v.size()) != s.n)
    throw ConfigError("toy chain h0/v length must equal n");
}

inline void validate(const BandModelSpec& s) {
  if (s.n < 1 || s.channels < 1) throw ConfigError("band model needs n, channels >= 1");
  if (static_cast<int>(s.e_b.size()) != s.n)
    throw ConfigError("band model e_b length must equal n");
  if (static_cast<int>(s.gamma0.size()) != s.n)
    throw ConfigError("band model gamma0 must have n rows");
  for (const auto& row : s.gamma0)
    if (static_cast<int>(row.size()) != s.channels)
      throw ConfigError("band model gamma0 rows must have one entry per channel");
  if (!s.wide_band) {
    if (static_cast<int>(s.bands.size()) != s.channels)
      throw ConfigError("band model needs one band per channel");
    for (const auto& [lo, hi] : s.bands)
      if (!(lo < hi)) throw ConfigError("band window must satisfy lo < hi");
  }
}

inline void validate(const PTSpec& s) {
  if (s.gamma < 0) throw ConfigError("PT model needs gamma >= 0");
}

}  // namespace detail

// Principal value of int_a^b f(x) / (E - x) dx by two-sided subtraction:
// the symmetric window [E-eta, E+eta] is folded into
// int_0^eta (f(E-s) - f(E+s)) / s ds and the remainder integrated directly,
// all with adaptive Simpson refinement to abs_tol.
inline double pv_quadrature(const std::function<double(double)>& f, double a,
                            double b, double e, double abs_tol = 1e-9) {
  if (!(a < e && e < b))
    throw DomainError("PV evaluation point must lie strictly inside the band");
  struct Simpson {
    double tol;
    int depth_limit = 48;
    double run(const std::function<double(double)>& g, double lo, double hi,
               double flo, double fmid, double fhi, double whole, double tol_,
               int depth) const {
      double mid = 0.5 * (lo + hi);
      double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
      double fl = g(lmid), fr = g(rmid);
      double left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid);
      double right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi);
      if (depth >= depth_limit || std::abs(left + right - whole) <= 15.0 * tol_)
        return left + right + (left + right - whole) / 15.0;
      return run(g, lo, mid, flo, fl, fmid, left, 0.5 * tol_, depth + 1) +
             run(g, mid, hi, fmid, fr, fhi, right, 0.5 * tol_, depth + 1);
    }
    double integrate(const std::function<double(double)>& g, double lo,
                     double hi) const {
      if (lo >= hi) return 0.0;
      double mid = 0.5 * (lo + hi);
      double flo = g(lo), fmid = g(mid), fhi = g(hi);
      double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
      return run(g, lo, hi, flo, fmid, fhi, whole, tol, 0);
    }
  } simpson{abs_tol};

  double eta = std::min(e - a, b - e);
  // antisymmetric fold over [E-eta, E+eta]; integrand is regular at s = 0
  auto folded = [&](double s) {
    if (s == 0.0) s = 1e-300;
    return (f(e - s) - f(e + s)) / s;
  };
  double core = simpson.integrate(folded, 0.0, eta);
  // remainder lies entirely on one side of the singularity
  auto tail = [&](double x) { return f(x) / (e - x); };
  double rest = simpson.integrate(tail, a, e - eta) +
                simpson.integrate(tail, e + eta, b);
  return core + rest;
}

// Closed-form box-profile PV self-energy matrix element (Re part of H_eff):
// (1/2pi) sum_c gamma0_ic gamma0_jc ln((E - eps_c)/(eps_c' - E)).
inline double pv_self_energy(const BandModelSpec& spec, int i, int j) {
  detail::validate(spec);
  if (i < 0 || j < 0 || i >= spec.n || j >= spec.n)
    throw ConfigError("pv_self_energy index out of range");
  if (spec.wide_band) return 0.0;
  double sum = 0.0;
  for (int c = 0; c < spec.channels; ++c) {
    double g = spec.gamma0[i][c] * spec.gamma0[j][c];
    if (g == 0.0) continue;
    auto [lo, hi] = spec.bands[c];
    if (!(lo < spec.energy && spec.energy < hi))
      throw DomainError("evaluation energy outside the open band (" +
                        std::to_string(lo) + ", " + std::to_string(hi) +
                        "): discrete-state regime is not supported");
    sum += g * std::log((spec.energy - lo) / (hi - spec.energy));
  }
  return sum / (2.0 * M_PI);
}

// Anti-Hermitian part of H_eff: entries -(1/2) sum_c gamma0_ic gamma0_jc.
// Rank <= channels; attached as the imaginary part of H_eff.
inline RMat residuum_matrix(const BandModelSpec& spec) {
  detail::validate(spec);
  RMat r = RMat::Zero(spec.n, spec.n);
  for (int i = 0; i < spec.n; ++i)
    for (int j = 0; j < spec.n; ++j)
      for (int c = 0; c < spec.channels; ++c)
        r(i, j) -= 0.5 * spec.gamma0[i][c] * spec.gamma0[j][c];
  return r;
}

inline Matrix build_heff_band(const BandModelSpec& spec) {
  detail::validate(spec);
  CMat h = CMat::Zero(spec.n, spec.n);
  RMat res = residuum_matrix(spec);
  for (int i = 0; i < spec.n; ++i) {
    for (int j = 0; j < spec.n; ++j) {
      double shift = spec.wide_band ? 0.0 : pv_self_energy(spec, i, j);
      h(i, j) = Complex((i == j ? spec.e_b[i] : 0.0) + shift, res(i, j));
    }
  }
  return Matrix(h, true);
}

inline Matrix build(const TwoLevelSpec& s) {
  CMat h(2, 2);
  h << s.eps1, s.omega, s.omega, s.eps2;
  return Matrix(h, true);
}

inline Matrix build(const ToyChainSpec& s) {
  detail::validate(s);
  CMat h = CMat::Zero(s.n, s.n);
  for (int i = 0; i < s.n; ++i) h(i, i) = s.h0_diag[i];
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j)
      h(i, j) -= Complex(0, 0.5) * s.alpha * s.v[i] * s.v[j];
  return Matrix(h, true);
}

inline Matrix build(const BandModelSpec& s) { return build_heff_band(s); }

inline Matrix build(const PTSpec& s) {
  detail::validate(s);
  CMat h(2, 2);
  h << Complex(s.e, 0.5 * s.gamma), Complex(s.omega, 0), Complex(s.omega, 0),
      Complex(s.e, -0.5 * s.gamma);
  return Matrix(h, true);
}

inline Matrix build(const ThreeLevelSpec& s) {
  CMat h(3, 3);
  h << s.two_level.eps1, s.two_level.omega, s.w13,
       s.two_level.omega, s.two_level.eps2, s.w23,
       s.w13, s.w23, s.eps3;
  return Matrix(h, true);
}

inline Matrix build(const ModelSpec& spec) {
  return std::visit([](const auto& s) { return build(s); }, spec);
}

// Named real parameters, the handles used by sweeps and EP searches.
inline void set_param(ModelSpec& spec, const std::string& name, double value) {
  auto re = [&](Complex& c) { c = Complex(value, c.imag()); };
  auto im = [&](Complex& c) { c = Complex(c.real(), value); };
  bool ok = std::visit(
      [&](auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, TwoLevelSpec>) {
          if (name == "eps1_re") { re(s.eps1); return true; }
          if (name == "eps1_im") { im(s.eps1); return true; }
          if (name == "eps2_re") { re(s.eps2); return true; }
          if (name == "eps2_im") { im(s.eps2); return true; }
          if (name == "omega_re") { re(s.omega); return true; }
          if (name == "omega_im") { im(s.omega); return true; }
          return false;
        } else if constexpr (std::is_same_v<T, ToyChainSpec>) {
          if (name == "alpha") { s.alpha = value; return true; }
          return false;
        } else if constexpr (std::is_same_v<T, BandModelSpec>) {
          if (name == "energy") { s.energy = value; return true; }
          return false;
        } else if constexpr (std::is_same_v<T, PTSpec>) {
          if (name == "e") { s.e = value; return true; }
          if (name == "gamma") { s.gamma = value; return true; }
          if (name == "omega") { s.omega = value; return true; }
          return false;
        } else {
          static_assert(std::is_same_v<T, ThreeLevelSpec>);
          if (name == "eps1_re") { re(s.two_level.eps1); return true; }
          if (name == "eps1_im") { im(s.two_level.eps1); return true; }
          if (name == "eps2_re") { re(s.two_level.eps2); return true; }
          if (name == "eps2_im") { im(s.two_level.eps2); return true; }
          if (name == "omega_re") { re(s.two_level.omega); return true; }
          if (name == "omega_im") { im(s.two_level.omega); return true; }
          if (name == "eps3_re") { re(s.eps3); return true; }
          if (name == "eps3_im") { im(s.eps3); return true; }
          if (name == "w13_re") { re(s.w13); return true; }
          if (name == "w13_im") { im(s.w13); return true; }
          if (name == "w23_re") { re(s.w23); return true; }
          if (name == "w23_im") { im(s.w23); return true; }
          return false;
        }
      },
      spec);
  if (!ok) throw ConfigError("unknown model parameter '" + name + "'");
}

inline Matrix build(const ModelSpec& spec,
                    const std::map<std::string, double>& overrides) {
  ModelSpec local = spec;
  for (const auto& [k, v] : overrides) set_param(local, k, v);
  return build(local);
}

// Channel coupling amplitudes gamma_kc consistent with the built H_eff
// (same gamma0 in the residuum and in the scattering vertex).
inline RMat coupling_matrix(const ModelSpec& spec) {
  if (const auto* toy = std::get_if<ToyChainSpec>(&spec)) {
    detail::validate(*toy);
    RMat g(toy->n, 1);
    for (int i = 0; i < toy->n; ++i) {
      if (toy->v[i].imag() != 0.0)
        throw ConfigError("scattering vertex needs a real coupling vector");
      g(i, 0) = std::sqrt(toy->alpha) * toy->v[i].real();
    }
    return g;
  }
  if (const auto* band = std::get_if<BandModelSpec>(&spec)) {
    detail::validate(*band);
    RMat g(band->n, band->channels);
    for (int i = 0; i < band->n; ++i)
      for (int c = 0; c < band->channels; ++c) g(i, c) = band->gamma0[i][c];
    return g;
  }
  throw ConfigError("model family has no channel couplings");
}

// Spin-swap frequency sqrt(b^2 - (k/tau_SE)^2) with hbar = 1; a purely
// imaginary result signals the frozen phase.
inline Complex spin_swap_frequency(double b, double k_aniso, double tau_se) {
  if (!(tau_se > 0)) throw ConfigError("tau_se must be positive");
  if (k_aniso < 0 || k_aniso > 1) throw ConfigError("k_aniso must be in [0,1]");
  double ratio = k_aniso / tau_se;
  return std::sqrt(Complex(b * b - ratio * ratio, 0.0));
}

inline std::string family_name(const ModelSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, TwoLevelSpec>) return "two_level";
        else if constexpr (std::is_same_v<T, ToyChainSpec>) return "toy_chain";
        else if constexpr (std::is_same_v<T, BandModelSpec>) return "band";
        else if constexpr (std::is_same_v<T, PTSpec>) return "pt";
        else return "three_level";
      },
      spec);
}

}  // namespace eptrap
