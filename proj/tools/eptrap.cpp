// eptrap: spectra, EP searches, scattering observables, and canned scenarios
// for non-Hermitian effective Hamiltonians, driven by a JSON config.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eptrap/config.hpp"
#include "eptrap/io.hpp"
#include "eptrap/nonlinear.hpp"
#include "eptrap/observables.hpp"
#include "eptrap/scenarios.hpp"
#include "eptrap/selftest.hpp"
#include "eptrap/spectra.hpp"
#include "eptrap/sweeps.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eptrap;

namespace {

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    write_text_atomic(out_path, text);
}

int cmd_eig(const std::string& config_path) {
  Config cfg = load_config(config_path);
  ModeSet ms = solve_modes(build(cfg.model), cfg.tol.sweep.spectra);
  json out;
  out["family"] = family_name(cfg.model);
  out["n"] = ms.n();
  for (int k = 0; k < ms.n(); ++k) {
    json mode;
    mode["z"] = complex_json(ms.modes[k].value);
    mode["energy"] = ms.energy(k);
    mode["gamma"] = ms.width(k);
    mode["a_k"] = ms.a_k[k];
    mode["r_k"] = ms.r_k[k];
    mode["flagged"] = static_cast<bool>(ms.flagged[k]);
    mode["residual"] = ms.modes[k].residual;
    out["modes"].push_back(mode);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_path,
              bool svg) {
  Config cfg = load_config(config_path);
  if (!cfg.grid) throw ConfigError("sweep needs a grid section");
  SweepGrid grid{cfg.grid->parameter, cfg.grid->samples, cfg.model};
  auto branches = sweep(grid, cfg.tol.sweep);
  emit(csv_branches(branches, grid.samples), out_path);
  if (svg) {
    if (out_path.empty())
      throw ConfigError("--svg needs an output file (-o) to sit next to");
    fs::path base(out_path);
    for (const auto& br : branches) {
      std::vector<double> widths(grid.samples.size());
      for (std::size_t i = 0; i < widths.size(); ++i) widths[i] = br.width(i);
      fs::path p = base.parent_path() /
                   (base.stem().string() + "_branch" +
                    std::to_string(br.label) + ".svg");
      write_text_atomic(p, svg_plot("gamma, branch " +
                                        std::to_string(br.label),
                                    grid.samples, widths));
    }
  }
  return 0;
}

int cmd_ep_find(const std::string& config_path) {
  Config cfg = load_config(config_path);
  if (!cfg.ep) throw ConfigError("ep-find needs an ep section");
  auto ep = locate_ep(cfg.model, cfg.ep->p1, cfg.ep->p2, cfg.ep->guess,
                      cfg.tol.ep_search);
  json out;
  out["parameters"] = ep.parameters;
  out["location"] = ep.location;
  out["gap"] = ep.gap;
  out["scale"] = ep.scale;
  out["min_phase_rigidity_nearby"] = ep.min_phase_rigidity_nearby;
  if (ep.jordan) {
    json j;
    j["eigenvalue"] = complex_json(ep.jordan->eigenvalue);
    j["defect_residual"] = ep.jordan->defect_residual;
    j["eigen_residual"] = ep.jordan->eigen_residual;
    out["jordan"] = j;
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_ep_cycle(const std::string& config_path) {
  Config cfg = load_config(config_path);
  if (!cfg.ep) throw ConfigError("ep-cycle needs an ep section");
  SweepOptions opts = cfg.tol.sweep;
  auto rep = encircle_ep(cfg.model, cfg.ep->p1, cfg.ep->p2, cfg.ep->center,
                         cfg.ep->radius, cfg.ep->steps, cfg.ep->loops, opts,
                         cfg.tol.phase_tol);
  json out;
  out["parameters"] = rep.parameters;
  out["center"] = rep.center;
  out["radius"] = rep.radius;
  out["steps"] = rep.steps;
  out["loops"] = rep.loops;
  out["permutation"] = rep.permutation;
  out["phases"] = rep.phases;
  out["loops_to_restore_values"] = rep.loops_to_restore_values;
  out["loops_to_restore_vectors"] = rep.loops_to_restore_vectors;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_observe(const std::string& config_path, const std::string& out_dir,
                bool svg) {
  Config cfg = load_config(config_path);
  if (cfg.observe.series.empty())
    throw ConfigError("observe needs observables.series");
  fs::path dir(out_dir);

  auto needs_scattering = [](const std::string& s) {
    return s == "transmission" || s == "time_delay" || s == "theta" ||
           s == "rho";
  };
  bool scattering = false, decay = false;
  for (const auto& s : cfg.observe.series) {
    if (needs_scattering(s))
      scattering = true;
    else if (s == "decay_rate" || s == "population")
      decay = true;
    else
      throw ConfigError("unknown series '" + s + "'");
  }

  ScatteringSeries ser;
  ModeSet ms;
  RMat gamma;
  if (scattering) {
    if (cfg.observe.energies.empty())
      throw ConfigError("scattering series need observables.energies");
    Matrix h = build(cfg.model);
    gamma = coupling_matrix(cfg.model);
    ser = scattering_series(h, gamma, cfg.observe.energies);
    time_delay(ser);
    ms = solve_modes(h, cfg.tol.sweep.spectra);
  }
  DecaySeries ds;
  if (decay) {
    if (cfg.observe.times.empty())
      throw ConfigError("decay series need observables.times");
    Matrix h = build(cfg.model);
    ModeSet dm = solve_modes(h, cfg.tol.sweep.spectra);
    RVec w;
    if (cfg.observe.weights.empty())
      w = RVec::Ones(dm.n());
    else
      w = Eigen::Map<const RVec>(cfg.observe.weights.data(),
                                 static_cast<Eigen::Index>(
                                     cfg.observe.weights.size()));
    ds = decay_rate(dm, w, cfg.observe.times);
  }

  auto put = [&](const std::string& name, const std::vector<double>& x,
                 const std::vector<double>& y) {
    write_text_atomic(dir / (name + ".csv"), csv_series(name, x, y));
    if (svg) write_text_atomic(dir / (name + ".svg"), svg_plot(name, x, y));
  };
  for (const auto& s : cfg.observe.series) {
    if (s == "transmission") {
      std::vector<double> mag(ser.transmission.size());
      for (std::size_t i = 0; i < mag.size(); ++i)
        mag[i] = std::abs(ser.transmission[i]);
      put(s, ser.energies, mag);
    } else if (s == "time_delay") {
      put(s, ser.energies, ser.tau_w);
    } else if (s == "theta") {
      put(s, ser.energies, ser.theta);
    } else if (s == "rho") {
      std::vector<double> rho(ser.energies.size());
      for (std::size_t i = 0; i < rho.size(); ++i)
        rho[i] = rho_phase_rigidity(internal_wavefunction(
            ms, gamma, cfg.observe.channel, ser.energies[i]));
      put(s, ser.energies, rho);
    } else if (s == "decay_rate") {
      put(s, ds.times, ds.rate);
    } else if (s == "population") {
      put(s, ds.times, ds.population);
    }
  }
  return 0;
}

std::map<std::string, double> parse_overrides(
    const std::vector<std::string>& sets) {
  std::map<std::string, double> out;
  for (const auto& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    try {
      out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("--set value for '" + kv.substr(0, eq) +
                        "' is not a number");
    }
  }
  return out;
}

int cmd_scenario(const std::string& name,
                 const std::vector<std::string>& sets,
                 std::string out_dir, bool svg) {
  auto res = run_scenario(name, parse_overrides(sets));
  if (out_dir.empty()) out_dir = "scenario_" + res.name;
  write_bundle(res, out_dir, svg);
  for (const auto& a : res.assertions)
    std::cout << (a.passed ? "PASS " : "FAIL ") << a.name
              << (a.detail.empty() ? "" : " -- " + a.detail) << "\n";
  std::cout << "bundle written to " << out_dir << "\n";
  if (!res.passed()) {
    for (const auto& a : res.assertions)
      if (!a.passed)
        throw ScenarioAssertionError(res.name + ": " + a.name);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"non-Hermitian effective Hamiltonians: spectra, exceptional "
               "points, resonance trapping, scattering observables"};
  app.require_subcommand(1);

  std::string config_path, out_path, out_dir, scenario_name;
  std::vector<std::string> sets;
  bool svg = false;

  auto* eig_cmd = app.add_subcommand("eig", "biorthogonal mode set (JSON)");
  eig_cmd->add_option("config", config_path, "JSON config")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "branch-continued sweep (CSV)");
  sweep_cmd->add_option("config", config_path, "JSON config")->required();
  sweep_cmd->add_option("-o,--out", out_path, "output CSV (default stdout)");
  sweep_cmd->add_flag("--svg", svg, "also write per-branch width plots");

  auto* find_cmd = app.add_subcommand("ep-find", "locate an EP (JSON)");
  find_cmd->add_option("config", config_path, "JSON config")->required();

  auto* cycle_cmd = app.add_subcommand("ep-cycle", "encircle an EP (JSON)");
  cycle_cmd->add_option("config", config_path, "JSON config")->required();

  auto* obs_cmd = app.add_subcommand("observe", "requested series (CSV files)");
  obs_cmd->add_option("config", config_path, "JSON config")->required();
  obs_cmd->add_option("-o,--out", out_dir, "output directory")
      ->default_val("observe_out");
  obs_cmd->add_flag("--svg", svg, "also write one plot per series");

  auto* scen_cmd = app.add_subcommand("scenario", "run a canned scenario");
  scen_cmd->add_option("name", scenario_name,
                       "trapping | three-resonance | phase-lapse | spin-swap "
                       "| pt | observer")
      ->required();
  scen_cmd->add_option("--set", sets, "override, key=value (repeatable)");
  scen_cmd->add_option("-o,--out", out_dir, "bundle directory");
  scen_cmd->add_flag("--svg", svg, "also write one plot per series");

  auto* self_cmd = app.add_subcommand("selftest", "run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*eig_cmd) return cmd_eig(config_path);
    if (*sweep_cmd) return cmd_sweep(config_path, out_path, svg);
    if (*find_cmd) return cmd_ep_find(config_path);
    if (*cycle_cmd) return cmd_ep_cycle(config_path);
    if (*obs_cmd) return cmd_observe(config_path, out_dir, svg);
    if (*scen_cmd) return cmd_scenario(scenario_name, sets, out_dir, svg);
    if (*self_cmd) return selftest_main(std::cout) == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const ScenarioAssertionError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
