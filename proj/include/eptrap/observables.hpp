#pragma once

// Scattering and decay observables on top of the effective-Hamiltonian
// machinery: S-matrix and Wigner-Smith time delay, transmission phase
// lapses, internal wavefunction and its phase rigidity, the decay rate
// k_gr(t), average-rate saturation, and the trapping order parameter.
// Units: hbar = 1, widths Gamma_k = -2 Im z_k.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "eptrap/linalg.hpp"
#include "eptrap/parallel.hpp"
#include "eptrap/spectra.hpp"
#include "eptrap/sweeps.hpp"

namespace eptrap {

struct ScatteringSeries {
  std::vector<double> energies;
  std::vector<CMat> s;                  // C x C per sample
  std::vector<Complex> transmission;    // amplitude between first and last channel
  std::vector<double> theta;            // unwrapped phase of det S (filled by time_delay)
  std::vector<double> tau_w;            // Wigner-Smith delay (filled by time_delay)
  double max_unitarity_defect = 0.0;    // max ||S^dag S - I|| over the grid
};

struct LapseEvent {
  double peak_left = 0.0;    // bracketing transmission-peak energies
  double peak_right = 0.0;
  double valley = 0.0;       // energy of the transmission minimum between them
  double phase_step = 0.0;   // accumulated downward phase run (negative)
};

struct DecaySeries {
  std::vector<double> times;
  std::vector<double> population;  // sum c_k^2 exp(-Gamma_k t)
  std::vector<double> rate;        // k_gr(t)
  RVec weights;
};

struct AverageRateSeries {
  std::vector<double> alphas;
  std::vector<double> gamma_av;  // mean width of the N-1 narrow branches
  std::optional<double> saturation_alpha;  // onset of d(gamma_av)/d(alpha) <= 0
};

struct OrderParameterSeries {
  std::vector<double> alphas;
  std::vector<double> gamma0_over_n;  // largest width / N
  std::vector<double> derivative;     // forward differences, last repeated
  std::optional<double> alpha_cr;
  double jump_tol = 0.0;   // threshold actually used (3x median heuristic)
  double jump_size = 0.0;  // largest successive derivative difference
  double post_fit_slope = 0.0;
  double post_fit_intercept = 0.0;
  double post_fit_r2 = 0.0;  // linear fit of gamma0_over_n beyond alpha_cr
  bool conclusive = false;
};

// S(E) = I - i gamma^T (E - H_eff)^{-1} gamma for real channel amplitudes
// gamma (N x C). Unitary when the anti-Hermitian part of H_eff is exactly
// -(i/2) gamma gamma^T.
inline CMat s_matrix(const Matrix& heff, const RMat& gamma, double E) {
  if (gamma.rows() != heff.n())
    throw DimensionError("coupling rows must match the Hamiltonian dimension");
  const Eigen::Index c = gamma.cols();
  if (gamma.norm() == 0.0) return CMat::Identity(c, c);  // decoupled: S = I
  CMat a = Complex(E, 0) * CMat::Identity(heff.n(), heff.n()) - heff.m;
  Eigen::PartialPivLU<CMat> lu(a);
  // rcond() is unreliable on exactly singular input; inspect the pivots
  double pmin = std::numeric_limits<double>::infinity(), pmax = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double p = std::abs(lu.matrixLU()(i, i));
    pmin = std::min(pmin, p);
    pmax = std::max(pmax, p);
  }
  if (!(pmin >= 1e-14 * pmax))
    throw PoleError("resolvent singular at E = " + std::to_string(E));
  CMat x = lu.solve(gamma.cast<Complex>());
  return CMat::Identity(c, c) -
         Complex(0, 1) * (gamma.transpose().cast<Complex>() * x);
}

namespace detail {

inline double principal(double ph) {
  while (ph > M_PI) ph -= 2.0 * M_PI;
  while (ph <= -M_PI) ph += 2.0 * M_PI;
  return ph;
}

// unwrap principal phases; a single step at (or beyond) pi is ambiguous
inline std::vector<double> unwrap(const std::vector<double>& raw,
                                  bool reject_ambiguous) {
  std::vector<double> out(raw.size());
  if (raw.empty()) return out;
  out[0] = raw[0];
  for (std::size_t i = 1; i < raw.size(); ++i) {
    double d = principal(raw[i] - raw[i - 1]);
    if (reject_ambiguous && std::abs(d) >= M_PI * 0.999)
      throw GridError("phase step " + std::to_string(d) + " at sample " +
                      std::to_string(i) + " is unwrap-ambiguous; refine the grid");
    out[i] = out[i - 1] + d;
  }
  return out;
}

inline std::pair<double, double> linear_fit_r2(const std::vector<double>& x,
                                               const std::vector<double>& y,
                                               double* r2) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0, ybar = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double fit = slope * x[i] + intercept;
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  if (r2) *r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return {slope, intercept};
}

}  // namespace detail

inline ScatteringSeries scattering_series(const Matrix& heff, const RMat& gamma,
                                          const std::vector<double>& energies) {
  if (energies.size() < 3) throw ConfigError("scattering grid needs >= 3 energies");
  ScatteringSeries ser;
  ser.energies = energies;
  ser.s.resize(energies.size());
  ser.transmission.resize(energies.size());
  std::vector<double> defect(energies.size(), 0.0);
  std::vector<std::string> failures(energies.size());
  const bool decoupled = gamma.norm() == 0.0;
  parallel_for(energies.size(), [&](std::size_t i) {
    try {
      CMat s = s_matrix(heff, gamma, energies[i]);
      const Eigen::Index c = s.rows();
      defect[i] = (s.adjoint() * s - CMat::Identity(c, c)).norm();
      if (decoupled) {
        ser.transmission[i] = Complex(0, 0);
      } else {
        ser.transmission[i] =
            (gamma.transpose().cast<Complex>() *
             Eigen::PartialPivLU<CMat>(Complex(energies[i], 0) *
                                           CMat::Identity(heff.n(), heff.n()) -
                                       heff.m)
                 .solve(gamma.cast<Complex>()))(0, c - 1);
      }
      ser.s[i] = std::move(s);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < energies.size(); ++i)
    if (!failures[i].empty())
      throw PoleError("sample E = " + std::to_string(energies[i]) + ": " +
                      failures[i]);
  ser.max_unitarity_defect = *std::max_element(defect.begin(), defect.end());
  return ser;
}

// Wigner-Smith delay tau_w = dTheta/dE from the unwrapped phase of det S,
// central differences inside, one-sided at the ends. Fills ser.theta and
// ser.tau_w and returns the delay.
inline const std::vector<double>& time_delay(ScatteringSeries& ser) {
  const std::size_t n = ser.s.size();
  if (n < 3) throw ConfigError("time delay needs >= 3 samples");
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i)
    raw[i] = std::arg(ser.s[i].determinant());
  ser.theta = detail::unwrap(raw, true);
  ser.tau_w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i == 0 ? 0 : i - 1;
    std::size_t hi = i + 1 == n ? i : i + 1;
    ser.tau_w[i] = (ser.theta[hi] - ser.theta[lo]) /
                   (ser.energies[hi] - ser.energies[lo]);
  }
  return ser.tau_w;
}

// Downward-pi lapses of the transmission phase between successive |t| peaks.
// The phase step is measured across a narrow window around the transmission
// minimum (where |t| recovers to 10x its valley value) and wrapped to the
// downward convention: a +pi swing is the same event modulo 2 pi.
inline std::vector<LapseEvent> phase_lapse_scan(const ScatteringSeries& ser,
                                                double lapse_tol = 0.1) {
  std::vector<LapseEvent> events;
  const std::size_t n = ser.transmission.size();
  if (n < 5) return events;
  std::vector<double> mag(n), raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    mag[i] = std::abs(ser.transmission[i]);
    raw[i] = std::arg(ser.transmission[i]);
  }
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (mag[i] > mag[i - 1] && mag[i] >= mag[i + 1]) peaks.push_back(i);
  for (std::size_t p = 0; p + 1 < peaks.size(); ++p) {
    std::size_t a = peaks[p], b = peaks[p + 1];
    std::size_t v = a + 1;
    for (std::size_t i = a + 1; i < b; ++i)
      if (mag[i] < mag[v]) v = i;
    double recover = std::min(10.0 * mag[v], 0.5 * std::min(mag[a], mag[b]));
    std::size_t wl = v, wr = v;
    while (wl > a + 1 && mag[wl] < recover) --wl;
    while (wr + 1 < b && mag[wr] < recover) ++wr;
    if (wl == v) --wl;
    if (wr == v) ++wr;
    double delta = detail::principal(raw[wr] - raw[wl]);
    if (delta > 0) delta -= 2.0 * M_PI;
    if (std::abs(delta + M_PI) <= lapse_tol)
      events.push_back({ser.energies[a], ser.energies[b], ser.energies[v],
                        delta});
  }
  return events;
}

// Internal wavefunction at energy E for one channel: the biorthogonal mode
// expansion sum_k <phi_k^*|gamma_c> / (E - z_k) phi_k. Equals the direct
// resolvent solve (E - H)^{-1} gamma_c by completeness.
inline CVec internal_wavefunction(const ModeSet& ms, const RMat& gamma,
                                  int channel, double E) {
  if (channel < 0 || channel >= gamma.cols())
    throw ConfigError("channel index out of range");
  if (gamma.rows() != ms.n())
    throw DimensionError("coupling rows must match the mode dimension");
  for (int k = 0; k < ms.n(); ++k)
    if (ms.flagged[k])
      throw IllConditionedError(
          "mode expansion undefined with a near-degenerate pair");
  CVec gc = gamma.col(channel).cast<Complex>();
  CVec psi = CVec::Zero(ms.n());
  const double scale = std::max(ms.matrix_norm, 1e-300);
  for (int k = 0; k < ms.n(); ++k) {
    Complex d = Complex(E, 0) - ms.modes[k].value;
    if (std::abs(d) < 1e-12 * scale)
      throw PoleError("E within 1e-12 of pole z_" + std::to_string(k));
    psi += (c_dot(ms.modes[k].left, gc) / d) * ms.modes[k].right;
  }
  return psi;
}

// Phase rigidity of a scattering wavefunction: rotate psi by the angle that
// zeroes sum Re(psi') Im(psi'), then take the normalized Re/Im imbalance.
// Equivalent closed form: |psi^T psi| / ||psi||^2, in [0, 1].
inline double rho_phase_rigidity(const CVec& psi) {
  double norm2 = psi.squaredNorm();
  if (norm2 == 0.0) throw DomainError("phase rigidity of a zero vector");
  return std::abs(c_dot(psi, psi)) / norm2;
}

// k_gr(t) = sum Gamma_k c_k^2 exp(-Gamma_k t) / sum c_k^2 exp(-Gamma_k t),
// evaluated with the smallest participating width factored out so large
// times never underflow to 0/0.
inline DecaySeries decay_rate(const ModeSet& ms, const RVec& weights,
                              const std::vector<double>& times) {
  if (weights.size() != ms.n())
    throw DimensionError("one weight per mode required");
  double wmax = 0.0;
  double gmin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < ms.n(); ++k) {
    double g = ms.width(k);
    if (g < -1e-12 * std::max(ms.matrix_norm, 1.0))
      throw DomainError("negative width Gamma_" + std::to_string(k));
    if (weights(k) != 0.0) gmin = std::min(gmin, g);
    wmax = std::max(wmax, std::abs(weights(k)));
  }
  if (wmax == 0.0) throw DomainError("all decay weights are zero");
  DecaySeries out;
  out.times = times;
  out.weights = weights;
  out.population.resize(times.size());
  out.rate.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    double t = times[i];
    double num = 0.0, den = 0.0, pop = 0.0;
    for (int k = 0; k < ms.n(); ++k) {
      double c2 = weights(k) * weights(k);
      if (c2 == 0.0) continue;
      double g = std::max(ms.width(k), 0.0);
      double w = c2 * std::exp(-(g - gmin) * t);
      num += g * w;
      den += w;
      pop += c2 * std::exp(-g * t);
    }
    out.population[i] = pop;
    out.rate[i] = num / den;
  }
  return out;
}

// Mean width of the N-1 narrow branches per alpha (the broadest branch at
// each sample excluded), with the saturation onset: the first alpha beyond
// which the mean width never increases again.
inline AverageRateSeries average_rate_vs_alpha(
    const std::vector<Branch>& branches, const std::vector<double>& alphas) {
  if (branches.size() < 2) throw ConfigError("need >= 2 branches");
  AverageRateSeries out;
  out.alphas = alphas;
  out.gamma_av.resize(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    double broad = 0.0, sum = 0.0;
    for (const auto& br : branches) {
      double g = br.width(i);
      broad = std::max(broad, g);
      sum += g;
    }
    out.gamma_av[i] = (sum - broad) / static_cast<double>(branches.size() - 1);
  }
  for (std::size_t i = 1; i < alphas.size(); ++i) {
    bool sat = true;
    for (std::size_t j = i; j + 1 < alphas.size() && sat; ++j)
      if (out.gamma_av[j + 1] > out.gamma_av[j] * (1.0 + 1e-12)) sat = false;
    if (sat) {
      out.saturation_alpha = alphas[i - 1];
      break;
    }
  }
  return out;
}

// Order parameter Gamma_0/N (largest width over system size) with break
// point detection: alpha_cr sits at the largest jump of the first
// finite-difference derivative, accepted when it exceeds 3x the median
// absolute successive derivative difference. Beyond alpha_cr the series is
// fit to a straight line; too-coarse sweeps yield conclusive = false.
inline OrderParameterSeries order_parameter(const std::vector<Branch>& branches,
                                            const std::vector<double>& alphas) {
  if (alphas.size() < 8) throw ConfigError("order parameter needs >= 8 samples");
  OrderParameterSeries out;
  out.alphas = alphas;
  const double n = static_cast<double>(branches[0].vectors.empty()
                                           ? branches.size()
                                           : branches[0].vectors[0].size());
  out.gamma0_over_n.resize(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    double broad = 0.0;
    for (const auto& br : branches) broad = std::max(broad, br.width(i));
    out.gamma0_over_n[i] = broad / n;
  }
  out.derivative.resize(alphas.size());
  for (std::size_t i = 0; i + 1 < alphas.size(); ++i)
    out.derivative[i] = (out.gamma0_over_n[i + 1] - out.gamma0_over_n[i]) /
                        (alphas[i + 1] - alphas[i]);
  out.derivative.back() = out.derivative[alphas.size() - 2];

  std::vector<double> jumps(alphas.size() - 2);
  for (std::size_t i = 0; i + 2 < alphas.size(); ++i)
    jumps[i] = std::abs(out.derivative[i + 1] - out.derivative[i]);
  std::vector<double> sorted = jumps;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                   sorted.end());
  double median = sorted[sorted.size() / 2];
  double dmax = 0.0;
  for (double d : out.derivative) dmax = std::max(dmax, std::abs(d));
  // absolute floor keeps pure rounding noise on smooth segments from firing
  out.jump_tol = std::max(3.0 * median, 1e-6 * dmax);
  std::size_t imax = std::max_element(jumps.begin(), jumps.end()) - jumps.begin();
  out.jump_size = jumps[imax];
  if (out.jump_size > out.jump_tol) {
    out.alpha_cr = alphas[imax + 1];
    std::vector<double> xs, ys;
    for (std::size_t i = imax + 1; i < alphas.size(); ++i) {
      xs.push_back(alphas[i]);
      ys.push_back(out.gamma0_over_n[i]);
    }
    if (xs.size() >= 4) {
      auto [slope, intercept] =
          detail::linear_fit_r2(xs, ys, &out.post_fit_r2);
      out.post_fit_slope = slope;
      out.post_fit_intercept = intercept;
      out.conclusive = true;
    }
  }
  return out;
}

}  // namespace eptrap
