#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "athom/experiment.hpp"

using namespace athom;
namespace fs = std::filesystem;

namespace {

Json laminate_surface() {
  return Json::parse(R"({"id": "lam", "field": {"type": "laminate", "axis": 0, "values": [1, 4]}})");
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("athom_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream is(p);
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.push_back("");
    rows.push_back(f);
  }
  return rows;
}

std::string config_error_path(const Json& doc) {
  try {
    ExperimentConfig::from_json(doc);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

SurfaceDensityResult result_at(double angle, double value) {
  SurfaceDensityResult r;
  r.nu = Direction<2>::from_angle(angle).vec();
  r.value = value;
  return r;
}

}  // namespace

TEST(Config, IntegrandParsing) {
  auto h = parse_surface<2>(laminate_surface(), "surface");
  EXPECT_DOUBLE_EQ(h.c3, 1.0);
  EXPECT_DOUBLE_EQ(h.c4, 4.0);
  EXPECT_EQ(h.id, "lam");
  EXPECT_DOUBLE_EQ(h.coefficient.value({0.75, 0.1}, {1.0, 0.0}), 4.0);

  auto q = parse_surface<2>(Json::parse(R"({"form": "quadratic", "terms": [
      {"field": {"type": "constant", "value": 1}, "matrix": [[2, 0], [0, 1]]}]})"),
                            "surface");
  EXPECT_NEAR(q.c3, 1.0, 1e-12);
  EXPECT_NEAR(q.c4, 2.0, 1e-12);

  auto t = parse_bulk<1>(Json::parse(R"({"field": {"type": "trigonometric", "mean": 2,
      "modes": [{"k": [1], "cos": 0.5}]}})"),
                         "bulk");
  EXPECT_NEAR(t.coefficient.value({0.0}, {1.0}), 2.5, 1e-14);
  EXPECT_NEAR(t.c1, 1.5, 1e-14);
}

TEST(Config, ErrorsCarryFieldPath) {
  EXPECT_EQ(config_error_path(Json::parse(R"({})")), "task");
  EXPECT_EQ(config_error_path(Json::parse(R"({"task": "nope"})")), "task");
  EXPECT_EQ(config_error_path(Json::parse(R"({"task": "g0_sweep", "bogus": 1})")), "bogus");
  EXPECT_EQ(config_error_path(Json::parse(R"({"task": "g0_sweep"})")), "surface");
  Json d = {{"task", "g0_sweep"}, {"surface", laminate_surface()}};
  d["knobs"] = {{"spacing", -1.0}};
  EXPECT_EQ(config_error_path(d), "knobs.spacing");
  d["knobs"] = {{"stencil", 12}};
  EXPECT_EQ(config_error_path(d), "knobs.stencil");
  d["knobs"] = {{"directions", 2.5}};
  EXPECT_EQ(config_error_path(d), "knobs.directions");
  d["knobs"] = {{"typo", 1}};
  EXPECT_EQ(config_error_path(d), "knobs.typo");
  d.erase("knobs");
  d["surface"]["field"]["values"] = {1, -4};
  EXPECT_EQ(config_error_path(d), "surface.field");
  d["surface"]["field"] = {{"type", "laminate"}};
  EXPECT_EQ(config_error_path(d), "surface.field.values");
  d["surface"] = laminate_surface();
  d["surface"]["constants"] = {{"c4", 2.0}};
  EXPECT_EQ(config_error_path(d), "surface.constants");
  Json q = {{"task", "h_hom_table"}, {"surface", {{"form", "quadratic"}, {"terms", {{{"field", {{"type", "constant"}, {"value", 1}}}, {"matrix", {{1, 2}, {0, 1}}}}}}}}};
  EXPECT_EQ(config_error_path(q), "surface.terms");
  Json at = {{"task", "at_convergence"}, {"regime", {{"eta", {{"exponent", 0.5}}}}}};
  EXPECT_EQ(config_error_path(at), "regime");
  Json at2 = {{"task", "at_convergence"}, {"dimension", 2}};
  EXPECT_EQ(config_error_path(at2), "dimension");
  Json at3 = {{"task", "at_convergence"}, {"datum", {{"type", "ramp"}, {"from", 0.8}, {"to", 0.2}}}};
  EXPECT_EQ(config_error_path(at3), "datum");
}

TEST(Config, OverridesAndHash) {
  Json d = {{"task", "g_inf_sweep"}, {"surface", laminate_surface()}};
  apply_override(d, "knobs.N=32");
  apply_override(d, "knobs.angles=[0, 1.5]");
  apply_override(d, "surface.id=renamed");
  EXPECT_EQ(d["knobs"]["N"], 32);
  EXPECT_EQ(d["knobs"]["angles"].size(), 2u);
  EXPECT_EQ(d["surface"]["id"], "renamed");
  EXPECT_THROW(apply_override(d, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(d, "a..b=1"), ConfigError);

  auto c1 = ExperimentConfig::from_json(d);
  Json d2 = d;
  d2["workers"] = 4;
  d2["output_dir"] = "/elsewhere";
  EXPECT_EQ(c1.hash(), ExperimentConfig::from_json(d2).hash());
  d2["seed"] = 3;
  EXPECT_NE(c1.hash(), ExperimentConfig::from_json(d2).hash());
  EXPECT_EQ(c1.hash().size(), 16u);
}

TEST(PolarData, Examples) {
  auto one = emit_polar_data({result_at(1.0, 2.0)});
  EXPECT_EQ(std::count(one.begin(), one.end(), '\n'), 2);  // header + one line

  std::vector<SurfaceDensityResult> sweep;
  for (int k = 15; k >= 0; --k) sweep.push_back(result_at(2.0 * kPi * k / 16, 2.0));
  std::stringstream ss(emit_polar_data(sweep));
  std::string line;
  std::getline(ss, line);
  double prev = -1.0;
  int n = 0;
  while (std::getline(ss, line)) {
    std::stringstream ls(line);
    double a, v, e;
    ls >> a >> v >> e;
    EXPECT_GT(a, prev);
    EXPECT_EQ(v, 2.0);
    prev = a;
    ++n;
  }
  EXPECT_EQ(n, 16);
  EXPECT_THROW(emit_polar_data({}), InputError);
}

TEST(PolarData, LaminateSweepHasPeriodPi) {
  auto h = parse_surface<2>(laminate_surface(), "surface");
  std::vector<SurfaceDensityResult> rs;
  for (int k = 0; k < 8; ++k) rs.push_back(g0_hom(h, Direction<2>::from_angle(2.0 * kPi * k / 8), {4.0, 8.0}, 1.0 / 16));
  std::stringstream ss(emit_polar_data(rs));
  std::string line;
  std::getline(ss, line);
  std::vector<double> v;
  while (std::getline(ss, line)) {
    std::stringstream ls(line);
    double a, val;
    ls >> a >> val;
    v.push_back(val);
  }
  ASSERT_EQ(v.size(), 8u);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(v[k], v[k + 4], 0.01 * v[k]) << k;
}

TEST(RunExperiment, HHomConstantThreeEqualRows) {
  Json d = {{"task", "h_hom_table"}, {"output_dir", scratch("hhom").string()}};
  d["surface"] = Json::parse(R"({"field": {"type": "constant", "value": 3}})");
  d["knobs"] = Json::parse(R"({"vectors": [[1, 0], [0, 1], [0.6, 0.8]], "N": 16})");
  auto m = run_experiment(ExperimentConfig::from_json(d));
  EXPECT_EQ(m.failed_rows, 0u);
  auto rows = read_csv(fs::path(d["output_dir"].get<std::string>()) / "h_hom_table.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0][0], "config_hash");
  for (int i = 1; i <= 3; ++i) {
    EXPECT_EQ(rows[i][0], m.config_hash);
    EXPECT_NEAR(std::stod(rows[i][4]), 3.0, 1e-9);
  }
}

TEST(RunExperiment, GInfSweepWithinGrowthBounds) {
  Json d = {{"task", "g_inf_sweep"}, {"output_dir", scratch("ginf").string()}, {"surface", laminate_surface()}};
  d["knobs"] = {{"directions", 16}, {"N", 32}};
  auto m = run_experiment(ExperimentConfig::from_json(d));
  fs::path dir = d["output_dir"].get<std::string>();
  auto rows = read_csv(dir / "g_inf_sweep.csv");
  ASSERT_EQ(rows.size(), 17u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double v = std::stod(rows[i][5]);
    EXPECT_GE(v, 2.0 * std::sqrt(1.0));
    EXPECT_LE(v, 2.0 * std::sqrt(4.0));
  }
  // every listed file exists
  for (const auto& [task, files] : m.files)
    for (const auto& f : files) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_TRUE(fs::exists(dir / "g_inf_sweep_polar.dat"));
}

TEST(RunExperiment, AtConvergenceEndsWithLimitRow) {
  Json d = {{"task", "at_convergence"}, {"output_dir", scratch("at").string()}};
  d["knobs"] = {{"cells", 2000}, {"limit_grid", 256}};
  auto m = run_experiment(ExperimentConfig::from_json(d));
  EXPECT_EQ(m.failed_rows, 0u);
  fs::path dir = d["output_dir"].get<std::string>();
  auto rows = read_csv(dir / "at_convergence.csv");
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[1][1], "0.1");
  EXPECT_EQ(rows[4][1], "0.0125");
  EXPECT_EQ(rows[5][1], "limit");
  EXPECT_NEAR(std::stod(rows[5][4]), 2.0, 1e-9);
  double prev_gap = INFINITY;
  for (int i = 1; i <= 4; ++i) {
    double gap = std::stod(rows[i][5]);
    EXPECT_LE(gap, prev_gap);
    prev_gap = gap;
  }
  auto lim = read_csv(dir / "limit_solver.csv");
  ASSERT_EQ(lim.size(), 3u);
  EXPECT_EQ(lim[2][5], "0.5");
}

TEST(RunExperiment, SolverFailuresAreRecordedPerRow) {
  // r = 3.0625 with spacing 1/16 gives an odd cell count: that row fails, the others run.
  Json d = {{"task", "g0_sweep"}, {"output_dir", scratch("fail").string()}, {"surface", laminate_surface()}};
  d["knobs"] = {{"angles", {0.0, 1.0}}, {"r_list", {3.0625, 4.0}}, {"spacing", 0.0625}};
  auto m = run_experiment(ExperimentConfig::from_json(d));
  EXPECT_EQ(m.failed_rows, 2u);
  auto rows = read_csv(fs::path(d["output_dir"].get<std::string>()) / "g0_sweep.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][8], "failed");
}

TEST(RunExperiment, DeterministicOutputs) {
  Json d = {{"task", "g_ell_sweep"}, {"surface", laminate_surface()}, {"workers", 2}};
  d["knobs"] = {{"directions", 3}, {"r_list", {4.0, 8.0}}, {"family_size", 3}};
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  d["output_dir"] = a.string();
  auto ma = run_experiment(ExperimentConfig::from_json(d));
  d["output_dir"] = b.string();
  d["workers"] = 1;
  auto mb = run_experiment(ExperimentConfig::from_json(d));
  Json ja = ma.to_json(), jb = mb.to_json();
  ja.erase("timings");
  jb.erase("timings");
  EXPECT_EQ(ja, jb);
  for (const auto& f : ma.files.at("g_ell_sweep")) {
    if (f == "manifest.json") continue;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(RandomQuadraticSurface, DeclaredBoundsAreExact) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    auto h = random_quadratic_surface(s);
    auto [lo, hi] = coefficient_bounds<2>(h.coefficient);
    EXPECT_NEAR(h.c3, lo, 1e-12);
    EXPECT_NEAR(h.c4, hi, 1e-12);
    EXPECT_GT(h.c3, 0.0);
  }
}

#ifdef ATHOM_CLI_PATH
namespace {
int run_cli(const std::string& args) {
  std::string cmd = std::string(ATHOM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST(Cli, ExitCodes) {
  fs::path dir = scratch("cli");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "ok.json");
    os << R"({"task": "h_hom_table", "surface": {"field": {"type": "constant", "value": 1}}, "knobs": {"N": 8}})";
  }
  EXPECT_EQ(run_cli("--config " + (dir / "ok.json").string() + " --out " + (dir / "o").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "manifest.json"));
  EXPECT_EQ(run_cli("--config " + (dir / "ok.json").string() + " --out " + (dir / "o").string() +
                    " --override knobs.N=-3"),
            1);
  EXPECT_EQ(run_cli("--task g0_sweep --out " + (dir / "o2").string() +
                    " --override 'surface={\"field\":{\"type\":\"constant\",\"value\":1}}'" +
                    " --override 'knobs={\"angles\":[0],\"r_list\":[3.0625]}'"),
            2);
}

TEST(Cli, EnvironmentOutputDirectory) {
  fs::path dir = scratch("cli_env");
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "ok.json");
    os << R"({"task": "h_hom_table", "surface": {"field": {"type": "constant", "value": 1}}, "knobs": {"N": 8}})";
  }
  std::string cmd = "ATHOM_OUT_DIR=" + (dir / "env_out").string() + " " + ATHOM_CLI_PATH + " --config " +
                    (dir / "ok.json").string() + " > /dev/null 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir / "env_out" / "h_hom_table.csv"));
}
#endif
