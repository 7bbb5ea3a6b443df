#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "eptrap/scenarios.hpp"

using namespace eptrap;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path = fs::temp_directory_path() /
           ("eptrap_test_" + std::to_string(stamp) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("trapping: width bifurcation with a single critical coupling") {
  auto res = run_scenario("trapping");
  REQUIRE(res.passed());
  CHECK(res.parameters.at("n") == 10.0);
  CHECK(!res.branches_csv.empty());
  bool found = false;
  for (const auto& s : res.series)
    if (s.name == "gamma0_over_n") {
      found = true;
      CHECK(s.x.size() == s.y.size());
      CHECK(s.y.front() < s.y.back());  // broad width grows with alpha
    }
  CHECK(found);
}

TEST_CASE("three-resonance: trapped delay peaks sharpen with coupling") {
  auto res = run_scenario("three-resonance");
  CHECK(res.passed());
  // hyphen and underscore spellings dispatch to the same scenario
  auto alias = run_scenario("three_resonance");
  CHECK(alias.name == res.name);
}

TEST_CASE("phase-lapse: a -pi lapse between every pair of peaks") {
  auto res = run_scenario("phase-lapse");
  CHECK(res.passed());
}

TEST_CASE("spin-swap: frequency turns imaginary past the boundary") {
  auto res = run_scenario("spin-swap");
  CHECK(res.passed());
}

TEST_CASE("pt: threshold sits at gamma = 2|omega|") {
  auto res = run_scenario("pt");
  CHECK(res.passed());
}

TEST_CASE("observer: symmetric coupling balances the observer overlaps") {
  auto res = run_scenario("observer");
  CHECK(res.passed());
}

TEST_CASE("scenarios are deterministic across repeated runs") {
  auto a = run_scenario("pt");
  auto b = run_scenario("pt");
  REQUIRE(a.series.size() == b.series.size());
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    CHECK(a.series[i].x == b.series[i].x);
    CHECK(a.series[i].y == b.series[i].y);
  }
  CHECK(a.branches_csv == b.branches_csv);
}

TEST_CASE("overrides reshape the grid and unknown keys are rejected") {
  auto res = run_scenario("pt", {{"samples", 81.0}, {"gamma_max", 3.0}});
  CHECK(res.parameters.at("samples") == 81.0);
  CHECK(res.passed());
  CHECK_THROWS_AS(run_scenario("pt", {{"bogus", 1.0}}), ConfigError);
  CHECK_THROWS_AS(run_scenario("no-such-scenario"), ConfigError);
}

TEST_CASE("write_bundle: manifest, series, branches, assertion report") {
  TempDir tmp;
  auto res = run_scenario("pt");
  write_bundle(res, tmp.path, true);

  auto manifest = nlohmann::json::parse(slurp(tmp.path / "manifest.json"));
  CHECK(manifest.at("scenario") == "pt");
  CHECK(manifest.at("parameters").at("omega") == 1.0);
  for (const auto& f : manifest.at("files")) {
    CHECK(fs::exists(tmp.path / f.get<std::string>()));
  }
  auto report = nlohmann::json::parse(slurp(tmp.path / "assertions.json"));
  CHECK(report.at("passed") == true);
  CHECK(report.at("assertions").size() == res.assertions.size());

  for (const auto& s : res.series) {
    std::string csv = slurp(tmp.path / (s.name + ".csv"));
    CHECK(csv.find("x, value") != std::string::npos);
    // header comment + column header + one row per sample
    CHECK(std::count(csv.begin(), csv.end(), '\n') ==
          static_cast<long>(2 + s.x.size()));
    std::string svg = slurp(tmp.path / (s.name + ".svg"));
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("polyline") != std::string::npos);
  }
  CHECK(!fs::exists(tmp.path / "manifest.json.tmp"));
}

TEST_CASE("write_bundle: branch table carries every sweep sample") {
  TempDir tmp;
  auto res = run_scenario("trapping", {{"samples", 50.0}});
  write_bundle(res, tmp.path);
  std::string csv = slurp(tmp.path / "branches.csv");
  CHECK(csv.find("param, branch, re_z, im_z, gamma, a_k, r_k") == 0);
  // header + 50 samples x 10 branches
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 50 * 10);
}
