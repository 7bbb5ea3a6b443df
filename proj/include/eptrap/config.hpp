#pragma once

// JSON configuration: one document with `model`, `grid`, `observables`,
// `tolerances` (and optional `ep`) sections. Complex numbers are written
// as [re, im]; plain numbers are accepted as purely real.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eptrap/models.hpp"
#include "eptrap/observables.hpp"
#include "eptrap/sweeps.hpp"

namespace eptrap {

struct GridConfig {
  std::string parameter;
  std::vector<double> samples;
};

struct EpConfig {
  std::string p1 = "omega_re";
  std::string p2 = "omega_im";
  Eigen::Vector2d guess{0, 0};
  Eigen::Vector2d center{0, 0};
  double radius = 0.1;
  int steps = 200;
  int loops = 4;
};

struct ObserveConfig {
  std::vector<double> energies;
  int channel = 0;
  std::vector<std::string> series;  // e.g. time_delay, transmission, rho
  std::vector<double> times;
  std::vector<double> weights;  // decay weights, one per mode
};

struct ToleranceConfig {
  SweepOptions sweep;
  EpSearchOptions ep_search;
  double unitarity_tol = 1e-8;
  double lapse_tol = 0.1;
  double nl_tol = 1e-10;
  double phase_tol = 1e-3;
};

struct Config {
  ModelSpec model;
  std::optional<GridConfig> grid;
  std::optional<EpConfig> ep;
  ObserveConfig observe;
  ToleranceConfig tol;
};

namespace detail {

using Json = nlohmann::json;

inline Complex parse_complex(const Json& j, const std::string& what) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex(j[0].get<double>(), j[1].get<double>());
  throw ConfigError(what + " must be a number or [re, im]");
}

inline std::vector<double> parse_axis(const Json& j, const std::string& what) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (!j.is_object())
    throw ConfigError(what + " must be a list or {from, to, samples}");
  double from = j.at("from").get<double>();
  double to = j.at("to").get<double>();
  int n = j.at("samples").get<int>();
  if (n < 2) throw ConfigError(what + " needs >= 2 samples");
  bool log_scale = j.value("scale", std::string("linear")) == "log";
  if (log_scale && !(from > 0 && to > 0))
    throw ConfigError(what + ": log scale needs positive endpoints");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / (n - 1);
    out[i] = log_scale ? from * std::pow(to / from, t) : from + (to - from) * t;
  }
  return out;
}

inline ModelSpec parse_model(const Json& m) {
  std::string family = m.at("family").get<std::string>();
  if (family == "two_level") {
    return TwoLevelSpec{parse_complex(m.at("eps1"), "eps1"),
                        parse_complex(m.at("eps2"), "eps2"),
                        parse_complex(m.at("omega"), "omega")};
  }
  if (family == "toy_chain") {
    ToyChainSpec s;
    s.h0_diag = m.at("h0_diag").get<std::vector<double>>();
    s.n = static_cast<int>(s.h0_diag.size());
    if (m.contains("v"))
      for (const auto& e : m.at("v")) s.v.push_back(parse_complex(e, "v entry"));
    else
      s.v.assign(s.n, Complex(1, 0));
    s.alpha = m.value("alpha", 0.0);
    return s;
  }
  if (family == "band") {
    BandModelSpec s;
    s.e_b = m.at("e_b").get<std::vector<double>>();
    s.n = static_cast<int>(s.e_b.size());
    s.gamma0 = m.at("gamma0").get<std::vector<std::vector<double>>>();
    s.channels = s.gamma0.empty() ? 1 : static_cast<int>(s.gamma0[0].size());
    s.wide_band = m.value("wide_band", false);
    if (m.contains("bands"))
      for (const auto& b : m.at("bands"))
        s.bands.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
    s.energy = m.value("energy", 0.0);
    return s;
  }
  if (family == "pt") {
    return PTSpec{m.value("e", 0.0), m.at("gamma").get<double>(),
                  m.at("omega").get<double>()};
  }
  if (family == "three_level") {
    ThreeLevelSpec s;
    s.two_level = TwoLevelSpec{parse_complex(m.at("eps1"), "eps1"),
                               parse_complex(m.at("eps2"), "eps2"),
                               parse_complex(m.at("omega"), "omega")};
    s.eps3 = parse_complex(m.at("eps3"), "eps3");
    s.w13 = parse_complex(m.at("w13"), "w13");
    s.w23 = parse_complex(m.at("w23"), "w23");
    return s;
  }
  throw ConfigError("unknown model family '" + family + "'");
}

}  // namespace detail

inline Config parse_config(const std::string& text) {
  detail::Json doc;
  try {
    doc = detail::Json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  try {
    Config cfg;
    cfg.model = detail::parse_model(doc.at("model"));
    if (doc.contains("grid")) {
      GridConfig g;
      g.parameter = doc.at("grid").at("parameter").get<std::string>();
      g.samples = detail::parse_axis(doc.at("grid"), "grid");
      cfg.grid = g;
    }
    if (doc.contains("ep")) {
      const auto& e = doc.at("ep");
      EpConfig ep;
      ep.p1 = e.value("p1", ep.p1);
      ep.p2 = e.value("p2", ep.p2);
      if (e.contains("guess"))
        ep.guess = {e.at("guess").at(0).get<double>(),
                    e.at("guess").at(1).get<double>()};
      if (e.contains("center"))
        ep.center = {e.at("center").at(0).get<double>(),
                     e.at("center").at(1).get<double>()};
      ep.radius = e.value("radius", ep.radius);
      ep.steps = e.value("steps", ep.steps);
      ep.loops = e.value("loops", ep.loops);
      cfg.ep = ep;
    }
    if (doc.contains("observables")) {
      const auto& o = doc.at("observables");
      if (o.contains("energies"))
        cfg.observe.energies = detail::parse_axis(o.at("energies"), "energies");
      if (o.contains("times"))
        cfg.observe.times = detail::parse_axis(o.at("times"), "times");
      cfg.observe.channel = o.value("channel", 0);
      if (o.contains("series"))
        cfg.observe.series = o.at("series").get<std::vector<std::string>>();
      if (o.contains("weights"))
        cfg.observe.weights = o.at("weights").get<std::vector<double>>();
    }
    if (doc.contains("tolerances")) {
      const auto& t = doc.at("tolerances");
      auto& tol = cfg.tol;
      tol.sweep.spectra.eig.eig_tol =
          t.value("eig_tol", tol.sweep.spectra.eig.eig_tol);
      tol.sweep.spectra.degeneracy_gap_rel =
          t.value("degeneracy_gap_rel", tol.sweep.spectra.degeneracy_gap_rel);
      tol.sweep.overlap_floor = t.value("overlap_floor", tol.sweep.overlap_floor);
      tol.ep_search.ep_gap_tol_rel =
          t.value("ep_gap_tol_rel", tol.ep_search.ep_gap_tol_rel);
      tol.ep_search.jordan_tol = t.value("jordan_tol", tol.ep_search.jordan_tol);
      tol.unitarity_tol = t.value("unitarity_tol", tol.unitarity_tol);
      tol.lapse_tol = t.value("lapse_tol", tol.lapse_tol);
      tol.nl_tol = t.value("nl_tol", tol.nl_tol);
      tol.phase_tol = t.value("phase_tol", tol.phase_tol);
    }
    return cfg;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace eptrap
