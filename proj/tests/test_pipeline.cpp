#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "starwave/pipeline.hpp"
#include "starwave/toml.hpp"
#include "test_util.hpp"

using namespace starwave;
using nlohmann::json;

namespace {

std::string cube_config(const std::string& name, const std::string& extra = "") {
  return "name = \"" + name + "\"\n"
         "[mesh]\nkind = \"cube\"\nn = 2\norder = 2\n"
         "[background]\nkind = \"constant\"\n"
         "[physics]\nomega = [2.0]\nattenuation_uhz = 0.0\n"
         "[[source]]\nr = 0.3\nlat_deg = 20.0\nlon_deg = 40.0\nsigma_r = 0.2\nsigma_theta = 0.5\nsigma_phi = 0.5\n"
         "[solver]\neps_blr = \"full_rank\"\ntile_size = 16\n"
         "[output]\ndirectory = \"out_" + name + "\"\nformats = [\"csv\"]\nloci = [\"plane\"]\n"
         "[output.plane]\nhalf_width = 0.5\nnx = 11\nnz = 11\n" + extra;
}

RunConfig cube_run(const std::string& name, const std::vector<std::string>& overrides = {}) {
  const auto path = testutil::write_temp(name + ".toml", cube_config(name));
  std::filesystem::remove_all(testutil::temp_dir() / ("out_" + name));
  return load_run_config(path, overrides);
}

void strip_timings(json& j) {
  if (j.is_object()) {
    j.erase("timings");
    for (auto& [k, v] : j.items()) strip_timings(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip_timings(v);
  }
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Toml, TablesArraysAndValueTypes) {
  const json d = parse_toml(
      "# comment\n"
      "name = \"a # b\"\n"
      "lit = 'c:\\path'\n"
      "[mesh]\n"
      "n = 4  # trailing\n"
      "radii = [0.35, 0.7,\n  1.0]\n"
      "a.b = true\n"
      "[[source]]\nsigma = inf\n"
      "[[source]]\nsigma = -1.5e-2\n"
      "[out]\nplane = { nx = 3, w = 'x' }\n");
  EXPECT_EQ(d["name"], "a # b");
  EXPECT_EQ(d["lit"], "c:\\path");
  EXPECT_TRUE(d["mesh"]["n"].is_number_integer());
  EXPECT_EQ(d["mesh"]["n"], 4);
  EXPECT_EQ(d["mesh"]["radii"].size(), 3u);
  EXPECT_EQ(d["mesh"]["a"]["b"], true);
  ASSERT_EQ(d["source"].size(), 2u);
  EXPECT_TRUE(std::isinf(d["source"][0]["sigma"].get<double>()));
  EXPECT_DOUBLE_EQ(d["source"][1]["sigma"].get<double>(), -1.5e-2);
  EXPECT_EQ(d["out"]["plane"]["nx"], 3);
}

TEST(Toml, ErrorsCarryOriginAndLine) {
  try {
    parse_toml("a = 1\n\nb = [1, 2 }\nc = 3\n", "cfg.toml");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg.toml:3:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_toml("a = 1\na = 2\n"), InputError);
  EXPECT_THROW(parse_toml("a = \"open\n"), InputError);
  EXPECT_THROW(parse_toml("a = 1x\n"), InputError);
}

TEST(Toml, OverrideValues) {
  EXPECT_EQ(parse_toml_value("32"), 32);
  EXPECT_EQ(parse_toml_value("\"nd\""), "nd");
  EXPECT_EQ(parse_toml_value("nd"), "nd");
  EXPECT_EQ(parse_toml_value("[1e-5, 1e-7]").size(), 2u);
}

TEST(Config, UnknownKeysAreRejectedByName) {
  const auto path = testutil::write_temp("unknown.toml", cube_config("unknown", "[solver2]\nx = 1\n"));
  try {
    load_run_config(path);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("solver2"), std::string::npos) << e.what();
  }
  const auto typo = testutil::write_temp("typo.toml", "[solver]\ntile = 3\n");
  try {
    load_run_config(typo);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("tile"), std::string::npos) << e.what();
  }
}

TEST(Config, DefaultsOverridesAndRelativePaths) {
  const RunConfig c = cube_run("defaults", {"solver.tile_size=32", "solver.eps_blr=1e-9", "mesh.n=3"});
  EXPECT_EQ(c.solver.tile_size, 32);
  ASSERT_TRUE(c.solver.eps.has_value());
  EXPECT_DOUBLE_EQ(*c.solver.eps, 1e-9);
  EXPECT_EQ(c.mesh.cube_n, 3);
  EXPECT_EQ(c.solver.ordering, OrderingMethod::nested_dissection);
  EXPECT_EQ(c.output.directory, (testutil::temp_dir() / "out_defaults").string());
  EXPECT_EQ(c.num_frequencies(), 1u);
  EXPECT_DOUBLE_EQ(c.solver_config(0).omega, 2.0);
  EXPECT_THROW(cube_run("bad_override", {"solver.tile_size"}), InputError);
}

TEST(Config, ValidateRejectsMissingPhysics) {
  EXPECT_THROW(cube_run("no_omega", {"physics.omega=[]"}), InputError);
  EXPECT_THROW(cube_run("neg_omega", {"physics.omega=[-1.0]"}), InputError);
  EXPECT_THROW(cube_run("bad_kind", {"mesh.kind=\"torus\""}), InputError);
}

TEST(Config, MissingBackgroundFileNamesThePath) {
  const RunConfig c = cube_run("missing_bg", {"background.kind=\"file\"", "background.path=\"no_such_profile.csv\""});
  try {
    build_setup(c);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("no_such_profile.csv"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, ConstantCubeMatchesDenseSolve) {
  const RunConfig cfg = cube_run("cube_dense");
  const SolveRun run = run_solve(cfg);
  ASSERT_EQ(run.frequencies.size(), 1u);
  EXPECT_LE(run.frequencies[0].stats["solver"]["bwd"].get<double>(), 1e-10);

  const CondensedSystem sys = assemble_global(run.setup->mesh, run.setup->background, run.setup->perturbation,
                                              cfg.solver_config(0), cfg.sources, run.discretizations[0]);
  const MatrixXc x_dense = sys.K.to_dense().fullPivLu().solve(sys.S);
  const SolveResult res = solve_system(sys.K, sys.S, cfg.solver, false);
  EXPECT_LE((res.x - x_dense).norm(), 1e-10 * x_dense.norm());
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(cfg.output.directory) / "stats.json"));
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(cfg.output.directory) / "f0_source0_plane.csv"));
}

TEST(Pipeline, OneFactorizationPerFrequencyForAllSources) {
  auto cfg = cube_run("multi", {"physics.omega=[2.0, 3.0]"});
  cfg.sources.push_back(cfg.sources[0]);
  cfg.sources.back().center.phi += 1.0;
  cfg.sources.push_back(cfg.sources[0]);
  cfg.sources.back().amplitude = 2.0;
  const long before = pipeline_factorizations();
  const SolveRun run = run_solve(cfg);
  EXPECT_EQ(pipeline_factorizations() - before, 2);
  EXPECT_EQ(run.factorizations, 2);
  ASSERT_EQ(run.frequencies.size(), 2u);
  for (const auto& f : run.frequencies) EXPECT_EQ(f.fields.size(), 3u);
  // Linearity in the amplitude: source 2 is twice source 0.
  const auto& f0 = run.frequencies[0].fields;
  for (std::size_t e = 0; e < f0[0].volume.size(); ++e)
    EXPECT_LE((f0[2].volume[e] - 2.0 * f0[0].volume[e]).norm(), 1e-12 * (1.0 + f0[0].volume[e].norm()));
}

TEST(Pipeline, StatsJsonReproducibleApartFromTimings) {
  const RunConfig cfg = cube_run("repro", {"solver.eps_blr=1e-7"});
  run_solve(cfg);
  json a = json::parse(slurp(std::filesystem::path(cfg.output.directory) / "stats.json"));
  run_solve(cfg);
  json b = json::parse(slurp(std::filesystem::path(cfg.output.directory) / "stats.json"));
  strip_timings(a);
  strip_timings(b);
  EXPECT_EQ(a, b);
  for (const char* key : {"n_op_pct", "n_entries_pct", "n_entries_pct_mp", "cond", "bwd"})
    EXPECT_TRUE(a["runs"][0]["solver"].contains(key)) << key;
}

TEST(Pipeline, CompareReusesCachedFields) {
  const RunConfig a = cube_run("cache_a");
  const RunConfig b = cube_run("cache_b", {"background.c=1.1"});
  run_solve(a);
  const long before = pipeline_factorizations();
  const CompareRun cmp = run_compare(a, b);
  EXPECT_EQ(pipeline_factorizations() - before, 1);  // only b is solved
  const long again = pipeline_factorizations();
  run_compare(a, b);
  EXPECT_EQ(pipeline_factorizations(), again);
  ASSERT_EQ(cmp.maps.size(), 1u);
  EXPECT_GT(cmp.maps[0].max(), 0.0);
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(a.output.directory) / "compare_cache_b" / "compare.json"));

  // Self-comparison is exactly zero.
  const CompareRun self = run_compare(a, a);
  EXPECT_EQ(self.maps[0].max(), 0.0);
}

TEST(Pipeline, StatsSweepOrdersCompression) {
  RunConfig cfg = cube_run("sweep", {"mesh.n=3", "solver.eps_blr=1e-7", "solver.mixed_precision=true"});
  const auto rows = run_stats(cfg);
  ASSERT_EQ(rows.size(), 7u);  // full rank, then (BLR, BLR + MP) per eps
  EXPECT_FALSE(rows[0].eps.has_value());
  EXPECT_DOUBLE_EQ(rows[0].stats.factor.n_op_pct(), 100.0);
  auto find = [&](double eps, bool mp) {
    for (const auto& r : rows)
      if (r.eps && *r.eps == eps && r.mixed_precision == mp) return r;
    ADD_FAILURE() << "missing row " << eps;
    return rows[0];
  };
  EXPECT_LE(find(1e-7, false).stats.factor.n_op_pct(), find(1e-9, false).stats.factor.n_op_pct());
  EXPECT_LE(find(1e-5, false).stats.factor.n_entries_pct(), find(1e-9, false).stats.factor.n_entries_pct());
  for (double eps : {1e-5, 1e-7, 1e-9}) {
    EXPECT_LE(find(eps, false).stats.bwd, 100 * eps);
    EXPECT_EQ(find(eps, true).stats.factor.lowrank_tiles, find(eps, false).stats.factor.lowrank_tiles);
  }
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(cfg.output.directory) / "stats.csv"));
}

#ifdef STARWAVE_CLI
TEST(Cli, MissingBackgroundFileExitsNonzeroAndNamesIt) {
  const auto path = testutil::write_temp("cli_missing.toml", cube_config("cli_missing"));
  const auto err = testutil::temp_dir() / "cli_missing.err";
  const std::string cmd = std::string(STARWAVE_CLI) + " solve -c " + path +
                          " --set background.kind=file --set background.path=absent_profile.csv 2> " + err.string();
  const int status = std::system(cmd.c_str());
  EXPECT_NE(status, 0);
  const std::string msg = slurp(err);
  EXPECT_NE(msg.find("absent_profile.csv"), std::string::npos) << msg;
  EXPECT_NE(msg.find("starwave: error:"), std::string::npos) << msg;
}

TEST(Cli, SolveWritesStats) {
  const auto path = testutil::write_temp("cli_ok.toml", cube_config("cli_ok"));
  const std::string cmd = std::string(STARWAVE_CLI) + " solve -c " + path + " --eps 1e-7 > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  const json s = json::parse(slurp(testutil::temp_dir() / "out_cli_ok" / "stats.json"));
  EXPECT_DOUBLE_EQ(s["runs"][0]["solver"]["eps_blr"].get<double>(), 1e-7);
}
#endif
