// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "starwave/pipeline.hpp"
#include "test_util.hpp"

using namespace starwave;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

LayerSpec ball(int angular_resolution) {
  LayerSpec s;
  s.interior_radii = {0.35, 0.7};
  s.surface_radii = {0.8, 0.9, 1.001};
  s.angular_resolution = angular_resolution;
  return s;
}

// 1. Condensed solve plus reconstruction against the monolithic solve.
Outcome condensation() {
  const Mesh mesh = build_cube(1);
  GaussianSource src;
  src.center = to_spherical(Vec3(0.5, 0.5, 0.5));
  src.sigma_r = 0.3;
  SolverConfig cfg;
  cfg.formulation = Formulation::liouville;
  cfg.omega = 3.0;
  cfg.gamma_att = 0.05;
  const auto problem = make_problem(toy_star(2.0, 20.0, 1.0, 0.2, 1.0), PerturbationField::none(), cfg, {src});
  const auto disc = Discretization::uniform(mesh, 2);
  const auto sys = assemble_system(mesh, disc, problem);
  const auto res = solve_system(sys.K, sys.S, BlrOptions{}, false);
  const auto field = reconstruct_volume(sys, res.x.col(0));
  const auto ref = oracle::monolithic_solve(mesh, disc, problem);
  double err = (field.trace - ref.trace).norm() / ref.trace.norm();
  for (std::size_t e = 0; e < mesh.num_cells(); ++e)
    err = std::max(err, (field.volume[e] - ref.volume[e]).norm() / ref.volume[e].norm());
  return {mesh.num_cells() == 6 && err <= 1e-8,
          {fmt("%zu cells, %ld trace dofs, max relative error %.2e (bound 1e-8)", mesh.num_cells(),
               static_cast<long>(sys.K.rows()), err)}};
}

// 2. Manufactured Helmholtz solution under refinement.
Outcome convergence() {
  const oracle::Manufactured mf;
  const auto problem = mf.problem();
  Outcome out{true, {}};
  for (int p : {1, 2, 3}) {
    std::vector<double> err;
    for (int n : {2, 4, 8}) {
      const Mesh mesh = build_cube(n);
      const auto sys = assemble_system(mesh, Discretization::uniform(mesh, p), problem);
      const auto res = solve_system(sys.K, sys.S, BlrOptions{}, false);
      const auto field = reconstruct_volume(sys, res.x.col(0));
      err.push_back(oracle::l2_error_w(field, [&](const Vec3& x) { return mf.w(x); }));
    }
    const double r1 = std::log2(err[0] / err[1]), r2 = std::log2(err[1] / err[2]);
    const bool ok = r2 >= p - 0.2;
    out.pass = out.pass && ok;
    out.details.push_back(fmt("p=%d: L2 errors %.3e %.3e %.3e, rates %.2f (2->4) %.2f (4->8), need >= %.1f", p,
                              err[0], err[1], err[2], r1, r2, p - 0.2));
  }
  return out;
}

// 3. Condition numbers of the three formulations on a stratified ball.
Outcome conditioning() {
  const Mesh mesh = build_layered_ball(ball(1));
  const auto bg = toy_star(1.001, 20.0, 1.0, 0.3, 1.0);
  GaussianSource src;
  src.center = Spherical{0.5, 0.3, 0.2};
  src.sigma_r = 0.1;
  const auto disc = Discretization::uniform(mesh, 2);
  double cond[3], cb[3];
  const Formulation forms[3] = {Formulation::original, Formulation::liouville, Formulation::liouville_c};
  Outcome out;
  for (int i = 0; i < 3; ++i) {
    SolverConfig cfg;
    cfg.omega = 3.0;
    cfg.gamma_att = 0.03;
    cfg.formulation = forms[i];
    const auto sys = assemble_global(mesh, bg, PerturbationField::none(), cfg, {src}, disc);
    const auto r = solve_system(sys.K, sys.S, BlrOptions{}, true);
    cond[i] = r.stats.cond;
    cb[i] = r.stats.cond * r.stats.bwd;
    out.details.push_back(fmt("%-12s n=%ld cond %.3e bwd %.2e cond*bwd %.3e", to_string(forms[i]).c_str(),
                              static_cast<long>(sys.K.rows()), cond[i], r.stats.bwd, cb[i]));
  }
  out.pass = cond[0] >= 10.0 * cond[1] && cb[1] <= cb[2] && cb[2] <= cb[0];
  out.details.push_back(fmt("cond(original)/cond(liouville) = %.2e (need >= 10)", cond[0] / cond[1]));
  return out;
}

// Manufactured Dirichlet problem on the n = 8 cube, p = 2: the desk system.
struct Desk {
  Mesh mesh = build_cube(8);
  CondensedSystem sys;
  SolveResult fr;
  double fr_seconds = 0.0;
  Desk() {
    oracle::Manufactured mf;
    mf.omega = 2.0;
    sys = assemble_system(mesh, Discretization::uniform(mesh, 2), mf.problem());
    const auto t0 = Clock::now();
    fr = solve_system(sys.K, sys.S, BlrOptions{}, false);
    fr_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  }
  SolveResult blr(double eps, int tile, bool mp) const {
    BlrOptions o;
    o.eps = eps;
    o.tile_size = tile;
    o.mixed_precision = mp;
    return solve_system(sys.K, sys.S, o, false);
  }
  double diff(const SolveResult& r) const { return (r.x - fr.x).norm() / fr.x.norm(); }
};

constexpr double desk_eps[3] = {1e-5, 1e-7, 1e-9};
constexpr int desk_tile = 16;

// 4 and 5 share the sweep.
std::vector<SolveResult> desk_sweep(const Desk& d, double* seconds) {
  std::vector<SolveResult> r;
  const auto t0 = Clock::now();
  for (double eps : desk_eps) r.push_back(d.blr(eps, desk_tile, false));
  *seconds = d.fr_seconds + std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

Outcome tradeoff(const Desk& d, const std::vector<SolveResult>& r, double seconds) {
  Outcome out;
  out.details.push_back(fmt("%ld dofs, tile %d, full-rank factorization %.1f s", static_cast<long>(d.sys.K.rows()),
                            desk_tile, d.fr.stats.factor.factor_seconds));
  bool ok = d.sys.K.rows() >= 30000 && seconds < 300.0;
  for (int i = 0; i < 3; ++i) {
    const auto& f = r[static_cast<std::size_t>(i)].stats.factor;
    out.details.push_back(fmt("eps %.0e: n_op_pct %.2f  n_entries_pct %.2f  rel diff %.3e", desk_eps[i], f.n_op_pct(),
                              f.n_entries_pct(), d.diff(r[static_cast<std::size_t>(i)])));
    ok = ok && f.n_op_pct() < 100.0 && f.n_entries_pct() < 100.0;
    if (i > 0) {
      const auto& g = r[static_cast<std::size_t>(i - 1)];
      ok = ok && f.n_op_pct() > g.stats.factor.n_op_pct() && f.n_entries_pct() > g.stats.factor.n_entries_pct() &&
           d.diff(r[static_cast<std::size_t>(i)]) < d.diff(g);
    }
  }
  out.details.push_back(fmt("runtime %.1f s (limit 300 s)", seconds));
  out.pass = ok;
  return out;
}

Outcome stability(const std::vector<SolveResult>& r) {
  Outcome out{true, {}};
  for (int i = 0; i < 3; ++i) {
    const double bwd = r[static_cast<std::size_t>(i)].stats.bwd;
    out.pass = out.pass && bwd <= 100.0 * desk_eps[i];
    out.details.push_back(fmt("eps %.0e: bwd %.3e = %.2f eps (bound 100 eps)", desk_eps[i], bwd, bwd / desk_eps[i]));
  }
  return out;
}

// 6. Mixed-precision storage at eps = 1e-7, default tile size; tile 16 reported.
Outcome mixed_precision(const Desk& d, const SolveResult& blr16) {
  Outcome out;
  auto line = [&](int tile, const SolveResult& base, const SolveResult& mp) {
    const double ratio = mp.stats.bwd / base.stats.bwd;
    out.details.push_back(fmt("tile %d: n_entries_pct_mp %.2f  bwd %.3e -> %.3e (x%.2f)  low-rank tiles %ld/%ld", tile,
                              mp.stats.factor.n_entries_pct_mp(), base.stats.bwd, mp.stats.bwd, ratio,
                              base.stats.factor.lowrank_tiles, mp.stats.factor.lowrank_tiles));
    return mp.stats.factor.n_entries_pct_mp() <= 95.0 && ratio <= 10.0 &&
           mp.stats.factor.lowrank_tiles == base.stats.factor.lowrank_tiles;
  };
  const int tile = BlrOptions{}.tile_size;
  const auto base = d.blr(1e-7, tile, false);
  const auto mp = d.blr(1e-7, tile, true);
  out.pass = line(tile, base, mp);
  const bool small = line(desk_tile, blr16, d.blr(1e-7, desk_tile, true));
  out.details.push_back(fmt("tile %d alone %s", desk_tile, small ? "meets both bounds" : "stays above the 95% bound"));
  return out;
}

// 7. Quotient graph size on a uniform p = 2 mesh.
Outcome block_graph() {
  const Mesh mesh = build_layered_ball(ball(1));
  const auto disc = Discretization::uniform(mesh, 2);
  std::vector<int> sizes(mesh.num_faces());
  for (std::size_t f = 0; f < sizes.size(); ++f) sizes[f] = disc.face_dofs(f);
  const BlockGraph g = build_block_graph(BlockSparseMatrix(sizes, face_adjacency(mesh)));
  const long dofs = disc.num_trace_dofs();
  const double pct = 100.0 * static_cast<double>(g.num_edges()) / static_cast<double>(g.scalar_edges());
  return {g.num_nodes() * 6 == dofs && pct < 5.0,
          {fmt("%ld dofs, %d block nodes (dofs/6 = %ld), %ld block edges vs %ld scalar edges = %.2f%% (bound 5%%)",
               dofs, g.num_nodes(), dofs / 6, g.num_edges(), g.scalar_edges(), pct)}};
}

// 8. Trace to volume dof ratio for p = 2..6 on a fixed mesh.
Outcome trace_reduction() {
  const Mesh mesh = build_layered_ball(ball(1));
  Outcome out{true, {}};
  std::string line = "dim(trace)/dim(volume):";
  double prev = 1.0;
  for (int p = 2; p <= 6; ++p) {
    const auto disc = Discretization::uniform(mesh, p);
    const double ratio = static_cast<double>(disc.num_trace_dofs()) / static_cast<double>(disc.total_volume_dofs());
    line += fmt(" p%d %.4f", p, ratio);
    out.pass = out.pass && ratio < prev && (p != 2 || ratio < 0.5);
    prev = ratio;
  }
  out.details.push_back(line);
  return out;
}

RunConfig ball_config(const std::string& name, int angular_resolution) {
  RunConfig c;
  c.name = name;
  c.mesh.layers = ball(angular_resolution);
  c.mesh.order = 2;
  c.background.rho_decay = 6.0;
  c.background.c_drop = 0.3;
  c.omegas = {3.0};
  c.solver.eps.reset();
  c.estimate_condition = false;
  c.output.vtk = false;
  c.output.csv = false;
  c.output.cache = false;
  c.output.directory = (testutil::temp_dir() / ("acceptance_" + name)).string();
  return c;
}

// 9. Axisymmetric source in a radial background.
Outcome symmetry() {
  RunConfig c = ball_config("symmetry", 2);
  GaussianSource src;
  src.center = Spherical{0.5, pi / 2, 0.0};
  src.sigma_r = 0.3;
  src.sigma_theta = 1.0;
  src.sigma_phi = std::numeric_limits<double>::infinity();
  c.sources = {src};
  const SolveRun run = run_solve(c);
  const PointLocator loc(run.setup->mesh);
  Outcome out;
  std::string profile = "asymmetry by radius:";
  for (double r : {0.3, 0.5, 0.7, 0.9}) {
    SphereSpec sp;
    sp.radius = r;
    sp.ntheta = 91;
    sp.nphi = 181;
    const double a = rotational_asymmetry(sample_field(run.frequencies[0].fields[0], loc, make_locus(sp), false));
    profile += fmt(" r=%.1f %.2f%%", r, 100.0 * a);
    if (r == 0.5) {
      out.pass = a <= 0.02;
      out.details.push_back(fmt("sphere r = 0.5 (source radius): max |w - <w>_phi| / max |w| = %.3f%% (bound 2%%)",
                                100.0 * a));
    }
  }
  out.details.push_back(profile);
  return out;
}

// 10. Active-region perturbation at two amplitudes against the unperturbed run.
Outcome linearity() {
  RunConfig ref = ball_config("linearity", 1);
  GaussianSource src;  // isotropic, centred: no direction is favoured
  src.center = Spherical{0.0, 0.0, 0.0};
  src.sigma_r = 0.3;
  src.sigma_theta = std::numeric_limits<double>::infinity();
  src.sigma_phi = std::numeric_limits<double>::infinity();
  ref.sources = {src};
  const std::string map = STARWAVE_SOURCE_DIR "/configs/data/active_region_map.csv";
  const SphericalTable table = load_surface_map(map);
  const SolveRun r0 = run_solve(ref);
  const PointLocator loc(r0.setup->mesh);
  RunConfig pert = ref;
  pert.perturbation.kind = "active_region";
  pert.perturbation.path = map;
  pert.perturbation.r_center = 0.95;
  pert.perturbation.variance = 2e-3;
  SphereSpec sp;
  sp.radius = pert.perturbation.r_center;
  sp.ntheta = 61;
  sp.nphi = 121;
  const auto locus = make_locus(sp);
  const SampledField s0 = sample_field(r0.frequencies[0].fields[0], loc, locus, false);
  double dmax = 0.0;
  for (double v : table.values()) dmax = std::max(dmax, std::abs(v));

  Outcome out{true, {}};
  double e[2];
  const double alphas[2] = {0.1, 0.2};
  for (int i = 0; i < 2; ++i) {
    pert.perturbation.alpha = alphas[i];
    const SolveRun ra = run_solve(pert);
    const DifferenceMap dm = relative_difference(s0, sample_field(ra.frequencies[0].fields[0], loc, locus, false));
    e[i] = dm.max();
    const Vec3 x = locus.points[dm.argmax()];
    const double lat = std::asin(std::clamp(x.z() / x.norm(), -1.0, 1.0)), lon = std::atan2(x.y(), x.x());
    const double delta = std::abs(table.lookup(lat, lon));
    const bool in_region = delta >= 0.5 * dmax;
    out.pass = out.pass && in_region;
    out.details.push_back(fmt("alpha %.1f: max e %.4e at lat %.0f lon %.0f, |delta| there %.2f of max (%s)", alphas[i],
                              e[i], lat * 180 / pi, lon * 180 / pi, delta / dmax,
                              in_region ? "inside the max-|delta| region" : "outside the max-|delta| region"));
  }
  const double gap = std::abs(e[1] / 0.2 - e[0] / 0.1), bound = 0.25 * e[0] / 0.1;
  out.pass = out.pass && gap <= bound;
  out.details.push_back(fmt("|e(0.2)/0.2 - e(0.1)/0.1| = %.4f (bound %.4f)", gap, bound));
  return out;
}

}  // namespace

int main() {
  int failed = 0;
  // limit: runtime bound in seconds, 0 when the criterion has none.
  auto report = [&](int id, const char* name, double limit, const std::function<Outcome()>& fn) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.details.push_back(std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (limit > 0) {
      o.details.push_back(fmt("runtime %.1f s (limit %.0f s)", s, limit));
      o.pass = o.pass && s < limit;
    }
    std::printf("%s  %2d %-28s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, s);
    for (const auto& d : o.details) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };

  report(1, "static condensation", 5, condensation);
  report(2, "manufactured convergence", 120, convergence);
  report(3, "conditioning ordering", 120, conditioning);
  {
    std::unique_ptr<Desk> desk;
    std::vector<SolveResult> sweep;
    double seconds = 0.0;
    report(4, "BLR trade-off ordering", 0, [&] {
      desk = std::make_unique<Desk>();
      sweep = desk_sweep(*desk, &seconds);
      return tradeoff(*desk, sweep, seconds);
    });
    report(5, "BLR backward stability", 0, [&] { return desk ? stability(sweep) : Outcome{false, {"no desk run"}}; });
    report(6, "mixed-precision storage", 0,
           [&] { return desk ? mixed_precision(*desk, sweep[1]) : Outcome{false, {"no desk run"}}; });
  }
  report(7, "analysis by block", 0, block_graph);
  report(8, "trace reduction", 0, trace_reduction);
  report(9, "rotational symmetry", 0, symmetry);
  report(10, "perturbation linearity", 600, linearity);
  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return failed;
}
