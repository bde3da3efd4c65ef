// starwave command-line driver: mesh, solve, compare, stats.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "starwave/ordering.hpp"
#include "starwave/pipeline.hpp"

using namespace starwave;

namespace {

struct CommonFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string output;
  std::string eps;
  bool mixed = false;
  std::string ordering;
  int tile = 0;
};

void add_overrides(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--set", f.sets, "Override a config key, e.g. --set solver.tile_size=32")->type_name("KEY=VALUE");
  cmd->add_option("-o,--output", f.output, "Output directory (output.directory)");
  cmd->add_option("--eps", f.eps, "BLR threshold or full_rank (solver.eps_blr)");
  cmd->add_flag("--mixed-precision", f.mixed, "Mixed-precision factor storage (solver.mixed_precision)");
  cmd->add_option("--ordering", f.ordering, "natural, amd or nd (solver.ordering)");
  cmd->add_option("--tile-size", f.tile, "BLR tile size (solver.tile_size)");
}

std::vector<std::string> overrides(const CommonFlags& f) {
  std::vector<std::string> o = f.sets;
  if (!f.output.empty()) o.push_back("output.directory=\"" + std::filesystem::absolute(f.output).string() + "\"");
  if (!f.eps.empty()) o.push_back(f.eps == "full_rank" ? "solver.eps_blr=\"full_rank\"" : "solver.eps_blr=" + f.eps);
  if (f.mixed) o.push_back("solver.mixed_precision=true");
  if (!f.ordering.empty()) o.push_back("solver.ordering=\"" + f.ordering + "\"");
  if (f.tile > 0) o.push_back("solver.tile_size=" + std::to_string(f.tile));
  return o;
}

void print_run(const nlohmann::json& r) {
  const auto& s = r["solver"];
  std::printf("  omega %.6g  n %ld  ordering %s  eps %s\n", r["omega"].get<double>(), s["n"].get<long>(),
              s["ordering"].get<std::string>().c_str(), s["eps_blr"].dump().c_str());
  std::printf("  n_op_pct %.2f  n_entries_pct %.2f  n_entries_pct_mp %.2f  bwd %.3e  cond %.3e\n",
              s["n_op_pct"].get<double>(), s["n_entries_pct"].get<double>(), s["n_entries_pct_mp"].get<double>(),
              s["bwd"].get<double>(), s["cond"].get<double>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"starwave: HDG wave solver with a block low-rank direct solver"};
  app.require_subcommand(1);

  CommonFlags mesh_f, solve_f, stats_f, cmp_f;
  std::string mesh_out, config_b;

  auto* mesh_cmd = app.add_subcommand("mesh", "Build the mesh and report its size");
  mesh_cmd->add_option("-c,--config", mesh_f.config, "Run configuration")->required()->check(CLI::ExistingFile);
  mesh_cmd->add_option("--msh", mesh_out, "Write the mesh as Gmsh 2.2");
  add_overrides(mesh_cmd, mesh_f);

  auto* solve_cmd = app.add_subcommand("solve", "Assemble, factorize and solve every frequency and source");
  solve_cmd->add_option("-c,--config", solve_f.config, "Run configuration")->required()->check(CLI::ExistingFile);
  bool use_cache = false;
  solve_cmd->add_flag("--use-cache", use_cache, "Load cached fields for identical settings");
  add_overrides(solve_cmd, solve_f);

  auto* cmp_cmd = app.add_subcommand("compare", "Relative-difference maps of run B against reference run A");
  cmp_cmd->add_option("-a,--reference", cmp_f.config, "Reference configuration")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("-b,--test", config_b, "Test configuration")->required()->check(CLI::ExistingFile);
  add_overrides(cmp_cmd, cmp_f);

  auto* stats_cmd = app.add_subcommand("stats", "Sweep eps_blr and tabulate compression and accuracy");
  stats_cmd->add_option("-c,--config", stats_f.config, "Run configuration")->required()->check(CLI::ExistingFile);
  add_overrides(stats_cmd, stats_f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (mesh_cmd->parsed()) {
      const RunConfig cfg = load_run_config(mesh_f.config, overrides(mesh_f));
      const ProblemSetup setup = build_setup(cfg);
      const Discretization disc = build_discretization(cfg, setup, 0);
      const auto summary = mesh_summary(setup.mesh, disc);
      std::vector<int> sizes(setup.mesh.num_faces());
      for (std::size_t f = 0; f < sizes.size(); ++f) sizes[f] = disc.face_dofs(f);
      const BlockGraph g = build_block_graph(BlockSparseMatrix(sizes, face_adjacency(setup.mesh)));
      std::cout << summary.dump(2) << '\n';
      std::printf("block graph: %d nodes, %ld edges (scalar graph %ld edges)\n", g.num_nodes(), g.num_edges(), g.scalar_edges());
      if (!mesh_out.empty()) export_msh(setup.mesh, mesh_out);
    } else if (solve_cmd->parsed()) {
      const RunConfig cfg = load_run_config(solve_f.config, overrides(solve_f));
      const SolveRun run = run_solve(cfg, use_cache);
      std::printf("%s: %zu frequencies, %zu sources, %ld factorizations\n", cfg.name.c_str(), run.frequencies.size(),
                  cfg.sources.size(), run.factorizations);
      for (const auto& f : run.frequencies) print_run(f.stats);
      std::printf("stats: %s\n", (std::filesystem::path(cfg.output.directory) / "stats.json").c_str());
    } else if (cmp_cmd->parsed()) {
      const RunConfig a = load_run_config(cmp_f.config, overrides(cmp_f));
      const RunConfig b = load_run_config(config_b, cmp_f.sets);
      const CompareRun cmp = run_compare(a, b);
      for (const auto& m : cmp.summary["maps"])
        std::printf("f%zu source %zu %-6s max e %.4e\n", m["frequency"].get<std::size_t>(), m["source"].get<std::size_t>(),
                    m["locus"].get<std::string>().c_str(), m["max_e"].get<double>());
    } else if (stats_cmd->parsed()) {
      const RunConfig cfg = load_run_config(stats_f.config, overrides(stats_f));
      const auto rows = run_stats(cfg);
      std::printf("%-10s %-3s %10s %10s %10s %11s %11s %11s\n", "eps", "mp", "n_op_pct", "n_ent_pct", "n_ent_mp",
                  "bwd", "cond", "rel_diff");
      for (const auto& r : rows) {
        const auto& s = r.stats;
        std::printf("%-10s %-3s %10.2f %10.2f %10.2f %11.3e %11.3e %11.3e\n",
                    r.eps ? nlohmann::json(*r.eps).dump().c_str() : "full_rank", r.mixed_precision ? "yes" : "no",
                    s.factor.n_op_pct(), s.factor.n_entries_pct(), s.factor.n_entries_pct_mp(), s.bwd, s.cond,
                    r.rel_diff);
      }
      std::printf("table: %s\n", (std::filesystem::path(cfg.output.directory) / "stats.csv").c_str());
    }
  } catch (const starwave::Error& e) {
    std::fprintf(stderr, "starwave: error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "starwave: unexpected error: %s\n", e.what());
    return 2;
  }
  return 0;
}
