#include "starwave/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "starwave/ordering.hpp"

namespace starwave {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::atomic<long> g_factorizations{0};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << std::setw(2) << j << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  return json::parse(in);
}

SampledField locus_of(const OutputConfig& out, Locus l) {
  switch (l) {
    case Locus::plane: return make_locus(out.plane);
    case Locus::arc: return make_locus(out.arc);
    case Locus::sphere: return make_locus(out.sphere);
  }
  return {};
}

fs::path cache_dir(const RunConfig& cfg, const std::string& key) { return fs::path(cfg.output.directory) / "fields" / key; }

std::string frequency_tag(std::size_t f) { return "f" + std::to_string(f); }

/// Loads cached fields if the manifest matches the digest.
bool load_cached(const RunConfig& cfg, const ProblemSetup& setup, const json& digest, const std::string& key,
                 FrequencyRun& run) {
  const fs::path dir = cache_dir(cfg, key);
  if (!fs::exists(dir / "manifest.json")) return false;
  const json manifest = read_json(dir / "manifest.json");
  if (manifest.value("digest", json()) != digest) return false;
  if (manifest.value("cells", 0L) != static_cast<long>(setup.mesh.num_cells())) return false;
  run.stats = manifest.at("stats");
  for (const auto& file : manifest.at("fields")) {
    run.field_files.push_back((dir / file.get<std::string>()).string());
    run.fields.push_back(read_vtk(setup.mesh, run.field_files.back()));
  }
  run.from_cache = true;
  return true;
}

}  // namespace

long pipeline_factorizations() { return g_factorizations.load(); }

ProblemSetup build_setup(const RunConfig& cfg) {
  ProblemSetup s;
  const auto& m = cfg.mesh;
  if (m.kind == "layered_ball") {
    s.mesh = build_layered_ball(m.layers);
  } else if (m.kind == "cube") {
    s.mesh = build_cube(m.cube_n);
  } else {
    s.mesh = import_msh(m.path);
  }
  const auto& b = cfg.background;
  if (b.kind == "toy") {
    s.background = toy_star(b.r_max, b.rho_decay, b.c_center, b.c_drop, b.g);
  } else if (b.kind == "constant") {
    double r_mesh = 0.0;
    for (const Vec3& v : s.mesh.vertices()) r_mesh = std::max(r_mesh, v.norm());
    s.background = RadialBackground::constant(b.rho, b.c, std::max(b.r_max, 1.001 * r_mesh));
  } else {
    s.background = load_radial_profile(b.path, b.length_scale);
  }
  const auto& p = cfg.perturbation;
  if (p.kind == "active_region") {
    s.perturbation = PerturbationField::active_region(load_surface_map(p.path), p.r_center, p.variance, p.alpha);
  } else if (p.kind == "volumetric") {
    s.perturbation = PerturbationField::volumetric(load_volume_table(p.path), p.alpha);
  }
  return s;
}

Discretization build_discretization(const RunConfig& cfg, const ProblemSetup& setup, std::size_t frequency) {
  if (!cfg.mesh.adaptive) return Discretization::uniform(setup.mesh, cfg.mesh.order);
  return Discretization::adaptive(setup.mesh, setup.background, setup.perturbation, cfg.solver_config(frequency),
                                  cfg.mesh.p_min, cfg.mesh.p_max);
}

json mesh_summary(const Mesh& mesh, const Discretization& disc) {
  json j;
  j["cells"] = mesh.num_cells();
  j["faces"] = mesh.num_faces();
  j["boundary_faces"] = mesh.num_boundary_faces();
  j["vertices"] = mesh.num_vertices();
  j["trace_dofs"] = disc.num_trace_dofs();
  j["volume_dofs"] = disc.total_volume_dofs();
  j["trace_ratio"] = static_cast<double>(disc.num_trace_dofs()) / static_cast<double>(disc.total_volume_dofs());
  int lo = max_order, hi = 0;
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    lo = std::min(lo, disc.cell_order(e));
    hi = std::max(hi, disc.cell_order(e));
  }
  j["order_min"] = lo;
  j["order_max"] = hi;
  return j;
}

SolveRun run_solve(const RunConfig& cfg, bool use_cache) {
  SolveRun out;
  out.setup = std::make_shared<const ProblemSetup>(build_setup(cfg));
  const ProblemSetup& setup = *out.setup;
  const fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  out.stats = {{"name", cfg.name}, {"config", cfg.origin}, {"runs", json::array()}};

  for (std::size_t f = 0; f < cfg.num_frequencies(); ++f) {
    const SolverConfig scfg = cfg.solver_config(f);
    out.discretizations.push_back(build_discretization(cfg, setup, f));
    const Discretization& disc = out.discretizations.back();
    const json digest = physics_digest(cfg, f);
    const std::string key = fnv1a_hex(digest.dump());

    FrequencyRun run;
    run.frequency_mhz = cfg.omegas.empty() ? cfg.frequencies_mhz[f] : 0.0;
    run.omega = scfg.omega;
    if (use_cache && cfg.output.cache && load_cached(cfg, setup, digest, key, run)) {
      out.stats["runs"].push_back(run.stats);
      out.frequencies.push_back(std::move(run));
      continue;
    }

    auto t0 = std::chrono::steady_clock::now();
    const CondensedSystem sys = assemble_global(setup.mesh, setup.background, setup.perturbation, scfg, cfg.sources, disc);
    const double t_assembly = seconds_since(t0);
    const SolveResult res = solve_system(sys.K, sys.S, cfg.solver, cfg.estimate_condition);
    ++g_factorizations;
    ++out.factorizations;
    t0 = std::chrono::steady_clock::now();
    for (int j = 0; j < static_cast<int>(cfg.sources.size()); ++j)
      run.fields.push_back(reconstruct_volume(sys, res.x.col(j), j));
    const double t_reconstruct = seconds_since(t0);

    json r;
    r["frequency_mhz"] = run.frequency_mhz;
    r["omega"] = scfg.omega;
    r["gamma_att"] = scfg.gamma_att;
    r["formulation"] = to_string(cfg.formulation);
    r["sources"] = cfg.sources.size();
    r["factorizations"] = 1;
    r["mesh"] = mesh_summary(setup.mesh, disc);
    r["assembly"] = {{"floored_faces", sys.report.floored_faces},
                     {"dirichlet_fallback_faces", sys.report.dirichlet_fallback_faces},
                     {"warnings", sys.report.warnings}};
    r["solver"] = res.stats.to_json();
    r["solver"]["timings"]["assembly"] = t_assembly;
    r["solver"]["timings"]["reconstruction"] = t_reconstruct;
    run.stats = r;

    if (cfg.output.vtk || cfg.output.cache) {
      const fs::path cdir = cache_dir(cfg, key);
      fs::create_directories(cdir);
      json files = json::array();
      for (std::size_t j = 0; j < run.fields.size(); ++j) {
        const std::string name = "source" + std::to_string(j) + ".vtk";
        write_vtk(run.fields[j], (cdir / name).string(), cfg.name + " " + frequency_tag(f) + " source " + std::to_string(j));
        files.push_back(name);
        run.field_files.push_back((cdir / name).string());
      }
      write_json({{"digest", digest}, {"key", key}, {"cells", setup.mesh.num_cells()}, {"fields", files}, {"stats", r}},
                 cdir / "manifest.json");
    }
    out.stats["runs"].push_back(r);
    out.frequencies.push_back(std::move(run));
  }

  if (cfg.output.csv) {
    const PointLocator locator(setup.mesh);
    for (std::size_t f = 0; f < out.frequencies.size(); ++f)
      for (std::size_t j = 0; j < out.frequencies[f].fields.size(); ++j)
        for (Locus l : cfg.output.loci) {
          const auto s = sample_field(out.frequencies[f].fields[j], locator, locus_of(cfg.output, l));
          write_csv(s, (dir / (frequency_tag(f) + "_source" + std::to_string(j) + "_" + to_string(l) + ".csv")).string());
        }
  }
  write_json(out.stats, dir / "stats.json");
  return out;
}

CompareRun run_compare(const RunConfig& a, const RunConfig& b) {
  const SolveRun ra = run_solve(a, true);
  const SolveRun rb = run_solve(b, true);
  if (ra.frequencies.size() != rb.frequencies.size())
    throw InputError("compared configs have different numbers of frequencies");
  if (a.sources.size() != b.sources.size()) throw InputError("compared configs have different numbers of sources");

  CompareRun out;
  const fs::path dir = fs::path(a.output.directory) / ("compare_" + b.name);
  fs::create_directories(dir);
  out.summary = {{"reference", a.name}, {"test", b.name}, {"maps", json::array()}};
  const PointLocator la(ra.setup->mesh), lb(rb.setup->mesh);
  for (std::size_t f = 0; f < ra.frequencies.size(); ++f)
    for (std::size_t j = 0; j < a.sources.size(); ++j)
      for (Locus l : a.output.loci) {
        const SampledField locus = locus_of(a.output, l);
        const auto sa = sample_field(ra.frequencies[f].fields[j], la, locus);
        const auto sb = sample_field(rb.frequencies[f].fields[j], lb, locus);
        DifferenceMap m = relative_difference(sa, sb);
        const std::string stem = frequency_tag(f) + "_source" + std::to_string(j) + "_" + to_string(l);
        if (a.output.csv) write_csv(m, (dir / (stem + ".csv")).string());
        const std::size_t k = m.argmax();
        json entry = {{"frequency", f},
                      {"source", j},
                      {"locus", to_string(l)},
                      {"max_e", m.max()},
                      {"ref_norm", m.ref_norm},
                      {"argmax", {m.points[k].x(), m.points[k].y(), m.points[k].z()}}};
        if (l == Locus::sphere) {
          const auto cols = static_cast<std::size_t>(m.cols);
          entry["argmax_lat_deg"] = m.axis_rows[k / cols] * 180.0 / pi;
          entry["argmax_lon_deg"] = m.axis_cols[k % cols] * 180.0 / pi;
        }
        out.summary["maps"].push_back(entry);
        out.maps.push_back(std::move(m));
      }
  write_json(out.summary, dir / "compare.json");
  return out;
}

std::vector<StatsRow> run_stats(const RunConfig& cfg) {
  const ProblemSetup setup = build_setup(cfg);
  const fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  std::vector<StatsRow> rows;
  for (std::size_t f = 0; f < cfg.num_frequencies(); ++f) {
    const SolverConfig scfg = cfg.solver_config(f);
    const Discretization disc = build_discretization(cfg, setup, f);
    const CondensedSystem sys = assemble_global(setup.mesh, setup.background, setup.perturbation, scfg, cfg.sources, disc);
    const double fmhz = cfg.omegas.empty() ? cfg.frequencies_mhz[f] : 0.0;

    std::vector<std::pair<std::optional<double>, bool>> runs{{std::nullopt, false}};
    for (double e : cfg.stats_eps) {
      runs.emplace_back(e, false);
      if (cfg.solver.mixed_precision) runs.emplace_back(e, true);
    }
    MatrixXc reference;
    for (const auto& [eps, mp] : runs) {
      BlrOptions opt = cfg.solver;
      opt.eps = eps;
      opt.mixed_precision = mp;
      SolveResult res = solve_system(sys.K, sys.S, opt, cfg.estimate_condition);
      ++g_factorizations;
      StatsRow row;
      row.frequency_mhz = fmhz;
      row.omega = scfg.omega;
      row.eps = eps;
      row.mixed_precision = mp;
      row.stats = res.stats;
      if (!eps) reference = res.x;
      row.rel_diff = (res.x - reference).norm() / reference.norm();
      rows.push_back(row);
    }
  }

  std::ofstream csv(dir / "stats.csv");
  if (!csv) throw InputError("cannot write " + (dir / "stats.csv").string());
  csv << std::setprecision(10);
  csv << "frequency_mhz,omega,eps_blr,mixed_precision,n,n_op_pct,n_entries_pct,n_entries_pct_mp,bwd,cond,rel_diff,"
         "analysis_s,factorization_s,solve_s\n";
  json sweep = json::array();
  for (const auto& r : rows) {
    const auto& fsx = r.stats.factor;
    csv << r.frequency_mhz << ',' << r.omega << ',' << (r.eps ? json(*r.eps).dump() : std::string("full_rank")) << ','
        << (r.mixed_precision ? 1 : 0) << ',' << r.stats.n << ',' << fsx.n_op_pct() << ',' << fsx.n_entries_pct() << ','
        << fsx.n_entries_pct_mp() << ',' << r.stats.bwd << ',' << r.stats.cond << ',' << r.rel_diff << ','
        << fsx.analysis_seconds << ',' << fsx.factor_seconds << ',' << r.stats.solve_seconds << '\n';
    json j = r.stats.to_json();
    j["frequency_mhz"] = r.frequency_mhz;
    j["omega"] = r.omega;
    j["rel_diff"] = r.rel_diff;
    sweep.push_back(j);
  }
  write_json({{"name", cfg.name}, {"rows", sweep}}, dir / "stats_sweep.json");
  return rows;
}

}  // namespace starwave
