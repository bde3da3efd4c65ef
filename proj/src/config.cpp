#include "starwave/config.hpp"

#include <charconv>

#include <filesystem>
#include <set>

#include "starwave/toml.hpp"

namespace starwave {

namespace {

using json = nlohmann::json;

/// View of one table that remembers which keys were read.
class Section {
 public:
  Section(const json& doc, std::string name, std::string origin)
      : name_(std::move(name)), origin_(std::move(origin)) {
    if (doc.is_null()) {
      node_ = json::object();
    } else if (!doc.is_object()) {
      fail("", "must be a table");
    } else {
      node_ = doc;
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::string where = name_.empty() ? key : key.empty() ? name_ : name_ + "." + key;
    throw InputError(origin_ + ": " + where + " " + what);
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return node_.contains(key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return node_.at(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) fail(key, "must be a number");
    return v.get<double>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) fail(key, "must be a number or an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail(key, "must contain numbers only");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    if (!v.is_array()) fail(key, "must be a string or an array of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) fail(key, "must contain strings only");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  Section sub(const std::string& key) {
    used_.insert(key);
    return Section(node_.contains(key) ? node_.at(key) : json(), name_.empty() ? key : name_ + "." + key, origin_);
  }

  /// Rejects keys that were never read.
  void finish() const {
    for (const auto& item : node_.items())
      if (!used_.count(item.key())) fail(item.key(), "is not a recognized key");
  }

 private:
  json node_;
  std::string name_;
  std::string origin_;
  std::set<std::string> used_;
};

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty() || base.empty()) return path;
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base) / p).lexically_normal().string();
}

Locus parse_locus(const std::string& name, Section& sec) {
  if (name == "plane") return Locus::plane;
  if (name == "arc") return Locus::arc;
  if (name == "sphere") return Locus::sphere;
  sec.fail("loci", "has unknown locus '" + name + "' (plane, arc, sphere)");
}

}  // namespace

std::size_t RunConfig::num_frequencies() const {
  return omegas.empty() ? frequencies_mhz.size() : omegas.size();
}

SolverConfig RunConfig::solver_config(std::size_t frequency) const {
  SolverConfig c = SolverConfig::from_physical(omegas.empty() ? frequencies_mhz.at(frequency) : 1.0,
                                               attenuation_uhz, formulation);
  if (!omegas.empty()) c.omega = omegas.at(frequency);
  c.tau_scale = tau_scale;
  c.eps_blr = solver.eps;
  c.mixed_precision = solver.mixed_precision;
  return c;
}

void RunConfig::validate() const {
  const std::string where = origin.empty() ? "config" : origin;
  if (num_frequencies() == 0) throw InputError(where + ": at least one frequency is required");
  for (double f : frequencies_mhz)
    if (!(f > 0.0)) throw InputError(where + ": frequencies must be positive");
  for (double w : omegas)
    if (!(w > 0.0)) throw InputError(where + ": angular frequencies must be positive");
  if (attenuation_uhz < 0.0) throw InputError(where + ": attenuation must be non-negative");
  if (sources.empty()) throw InputError(where + ": at least one [[source]] is required");
  for (const auto& s : sources)
    if (!(s.sigma_r > 0.0 && s.sigma_theta > 0.0 && s.sigma_phi > 0.0))
      throw InputError(where + ": source widths must be positive");
  if (mesh.kind != "layered_ball" && mesh.kind != "cube" && mesh.kind != "file")
    throw InputError(where + ": mesh.kind must be layered_ball, cube or file");
  if (mesh.kind == "file" && mesh.path.empty()) throw InputError(where + ": mesh.path is required for kind = file");
  if (mesh.kind == "cube" && mesh.cube_n < 1) throw InputError(where + ": mesh.n must be >= 1");
  if (mesh.kind == "layered_ball") mesh.layers.validate();
  if (mesh.order < 1 || mesh.order > max_order || mesh.p_min < 1 || mesh.p_max > max_order || mesh.p_min > mesh.p_max)
    throw InputError(where + ": polynomial orders must lie in [1, " + std::to_string(max_order) + "]");
  if (background.kind != "toy" && background.kind != "constant" && background.kind != "file")
    throw InputError(where + ": background.kind must be toy, constant or file");
  if (background.kind == "file" && background.path.empty())
    throw InputError(where + ": background.path is required for kind = file");
  if (perturbation.kind != "none" && perturbation.kind != "active_region" && perturbation.kind != "volumetric")
    throw InputError(where + ": perturbation.kind must be none, active_region or volumetric");
  if (perturbation.kind != "none" && perturbation.path.empty())
    throw InputError(where + ": perturbation.path is required for kind = " + perturbation.kind);
  if (solver.eps && !(*solver.eps > 0.0 && *solver.eps < 1.0))
    throw InputError(where + ": solver.eps_blr must lie in (0, 1) or be \"full_rank\"");
  if (solver.mixed_precision && !solver.eps)
    throw InputError(where + ": solver.mixed_precision requires a numeric eps_blr");
  if (solver.tile_size < 1) throw InputError(where + ": solver.tile_size must be positive");
  for (double e : stats_eps)
    if (!(e > 0.0 && e < 1.0)) throw InputError(where + ": stats.eps values must lie in (0, 1)");
}

RunConfig parse_run_config(const json& doc, const std::string& origin) {
  RunConfig cfg;
  cfg.origin = origin;
  const std::string base =
      origin.empty() || origin.front() == '<' ? std::string() : std::filesystem::path(origin).parent_path().string();
  Section top(doc, "", origin);
  cfg.name = top.string("name", cfg.name);

  Section m = top.sub("mesh");
  cfg.mesh.kind = m.string("kind", cfg.mesh.kind);
  cfg.mesh.layers.interior_radii = m.numbers("interior_radii", {0.35, 0.7});
  cfg.mesh.layers.surface_radii = m.numbers("surface_radii", {0.8, 0.9, 1.001});
  cfg.mesh.layers.angular_resolution = m.integer("angular_resolution", 1);
  cfg.mesh.cube_n = m.integer("n", cfg.mesh.cube_n);
  cfg.mesh.path = resolve(m.string("path", ""), base);
  if (m.has("order")) {
    const json& o = m.raw("order");
    if (o.is_string() && o.get<std::string>() == "adaptive") {
      cfg.mesh.adaptive = true;
    } else if (o.is_number_integer()) {
      cfg.mesh.order = o.get<int>();
    } else {
      m.fail("order", "must be an integer or \"adaptive\"");
    }
  }
  cfg.mesh.p_min = m.integer("p_min", cfg.mesh.p_min);
  cfg.mesh.p_max = m.integer("p_max", cfg.mesh.p_max);
  m.finish();

  Section b = top.sub("background");
  cfg.background.kind = b.string("kind", cfg.background.kind);
  cfg.background.path = resolve(b.string("path", ""), base);
  cfg.background.length_scale = b.number("length_scale", cfg.background.length_scale);
  cfg.background.r_max = b.number("r_max", cfg.background.r_max);
  cfg.background.rho_decay = b.number("rho_decay", cfg.background.rho_decay);
  cfg.background.c_center = b.number("c_center", cfg.background.c_center);
  cfg.background.c_drop = b.number("c_drop", cfg.background.c_drop);
  cfg.background.g = b.number("g", cfg.background.g);
  cfg.background.rho = b.number("rho", cfg.background.rho);
  cfg.background.c = b.number("c", cfg.background.c);
  b.finish();

  Section pz = top.sub("perturbation");
  cfg.perturbation.kind = pz.string("kind", cfg.perturbation.kind);
  cfg.perturbation.path = resolve(pz.string("path", ""), base);
  cfg.perturbation.r_center = pz.number("r_center", cfg.perturbation.r_center);
  cfg.perturbation.variance = pz.number("variance", cfg.perturbation.variance);
  cfg.perturbation.alpha = pz.number("alpha", cfg.perturbation.alpha);
  pz.finish();

  Section ph = top.sub("physics");
  cfg.formulation = parse_formulation(ph.string("formulation", to_string(cfg.formulation)));
  cfg.frequencies_mhz = ph.numbers("frequencies_mhz", {});
  cfg.omegas = ph.numbers("omega", {});
  cfg.attenuation_uhz = ph.number("attenuation_uhz", cfg.attenuation_uhz);
  cfg.tau_scale = ph.number("tau_scale", cfg.tau_scale);
  ph.finish();

  if (top.has("source")) {
    const json& list = top.raw("source");
    if (!list.is_array()) top.fail("source", "must be an array of tables ([[source]])");
    for (std::size_t k = 0; k < list.size(); ++k) {
      Section s(list[k], "source[" + std::to_string(k) + "]", origin);
      GaussianSource g;
      g.center.r = s.number("r", 0.5);
      g.center.theta = s.number("lat_deg", 0.0) * pi / 180.0;
      g.center.phi = s.number("lon_deg", 0.0) * pi / 180.0;
      g.sigma_r = s.number("sigma_r", g.sigma_r);
      g.sigma_theta = s.number("sigma_theta", g.sigma_theta);
      g.sigma_phi = s.number("sigma_phi", g.sigma_phi);
      g.amplitude = s.number("amplitude", g.amplitude);
      s.finish();
      cfg.sources.push_back(g);
    }
  }

  Section sv = top.sub("solver");
  if (sv.has("eps_blr")) {
    const json& e = sv.raw("eps_blr");
    if (e.is_string() && e.get<std::string>() == "full_rank") {
      cfg.solver.eps.reset();
    } else if (e.is_number()) {
      cfg.solver.eps = e.get<double>();
    } else {
      sv.fail("eps_blr", "must be a number or \"full_rank\"");
    }
  }
  cfg.solver.mixed_precision = sv.boolean("mixed_precision", false);
  cfg.solver.ordering = parse_ordering(sv.string("ordering", to_string(cfg.solver.ordering)));
  cfg.solver.tile_size = sv.integer("tile_size", cfg.solver.tile_size);
  cfg.solver.nemin = sv.integer("nemin", cfg.solver.nemin);
  cfg.solver.min_blr_front = sv.integer("min_blr_front", cfg.solver.min_blr_front);
  cfg.solver.pivot_threshold = sv.number("pivot_threshold", cfg.solver.pivot_threshold);
  cfg.solver.scaling = sv.boolean("scaling", cfg.solver.scaling);
  cfg.estimate_condition = sv.boolean("condition", cfg.estimate_condition);
  sv.finish();

  Section st = top.sub("stats");
  cfg.stats_eps = st.numbers("eps", cfg.stats_eps);
  st.finish();

  Section out = top.sub("output");
  cfg.output.directory = resolve(out.string("directory", cfg.output.directory), base);
  if (out.has("formats")) {
    const auto formats = out.strings("formats", {});
    cfg.output.vtk = cfg.output.csv = false;
    for (const auto& f : formats) {
      if (f == "vtk") {
        cfg.output.vtk = true;
      } else if (f == "csv") {
        cfg.output.csv = true;
      } else {
        out.fail("formats", "has unknown format '" + f + "' (vtk, csv)");
      }
    }
  }
  if (out.has("loci")) {
    cfg.output.loci.clear();
    for (const auto& l : out.strings("loci", {})) cfg.output.loci.push_back(parse_locus(l, out));
  }
  cfg.output.cache = out.boolean("cache", cfg.output.cache);
  Section pl = out.sub("plane");
  cfg.output.plane.half_width = pl.number("half_width", cfg.output.plane.half_width);
  cfg.output.plane.nx = pl.integer("nx", cfg.output.plane.nx);
  cfg.output.plane.nz = pl.integer("nz", cfg.output.plane.nz);
  pl.finish();
  Section ar = out.sub("arc");
  cfg.output.arc.radius = ar.number("radius", cfg.output.arc.radius);
  cfg.output.arc.n = ar.integer("n", cfg.output.arc.n);
  ar.finish();
  Section sp = out.sub("sphere");
  cfg.output.sphere.radius = sp.number("radius", cfg.output.sphere.radius);
  cfg.output.sphere.ntheta = sp.integer("ntheta", cfg.output.sphere.ntheta);
  cfg.output.sphere.nphi = sp.integer("nphi", cfg.output.sphere.nphi);
  sp.finish();
  out.finish();

  top.finish();
  cfg.validate();
  return cfg;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw InputError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw InputError("override '" + assignment + "' has an empty key");
    json* next = nullptr;
    if (node->is_array()) {
      // Arrays of tables are addressed by index, e.g. source.0.r=0.5.
      std::size_t idx = 0;
      const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), idx);
      if (ec != std::errc() || end != part.data() + part.size() || idx >= node->size())
        throw InputError("override '" + assignment + "': no element " + part);
      next = &(*node)[idx];
    } else if (dot == std::string::npos) {
      (*node)[part] = parse_toml_value(assignment.substr(eq + 1));
      return;
    } else {
      next = &(*node)[part];
      if (next->is_null()) *next = json::object();
    }
    if (dot == std::string::npos) {
      *next = parse_toml_value(assignment.substr(eq + 1));
      return;
    }
    if (!next->is_object() && !next->is_array())
      throw InputError("override '" + assignment + "': " + part + " is not a table");
    node = next;
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  json doc = load_toml(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_run_config(doc, path);
}

json physics_digest(const RunConfig& cfg, std::size_t frequency) {
  json d;
  const auto& m = cfg.mesh;
  d["mesh"] = {{"kind", m.kind},
               {"interior_radii", m.layers.interior_radii},
               {"surface_radii", m.layers.surface_radii},
               {"angular_resolution", m.layers.angular_resolution},
               {"n", m.cube_n},
               {"path", m.path},
               {"adaptive", m.adaptive},
               {"order", m.order},
               {"p_min", m.p_min},
               {"p_max", m.p_max}};
  const auto& b = cfg.background;
  d["background"] = {{"kind", b.kind}, {"path", b.path},         {"length_scale", b.length_scale},
                     {"r_max", b.r_max}, {"rho_decay", b.rho_decay}, {"c_center", b.c_center},
                     {"c_drop", b.c_drop}, {"g", b.g},               {"rho", b.rho},
                     {"c", b.c}};
  const auto& p = cfg.perturbation;
  d["perturbation"] = {{"kind", p.kind}, {"path", p.path}, {"r_center", p.r_center}, {"variance", p.variance}, {"alpha", p.alpha}};
  const SolverConfig sc = cfg.solver_config(frequency);
  d["formulation"] = to_string(cfg.formulation);
  d["omega"] = sc.omega;
  d["gamma_att"] = sc.gamma_att;
  d["tau_scale"] = cfg.tau_scale;
  for (const auto& s : cfg.sources)
    d["sources"].push_back({s.center.r, s.center.theta, s.center.phi, s.sigma_r, s.sigma_theta,
                            std::isinf(s.sigma_phi) ? -1.0 : s.sigma_phi, s.amplitude});
  d["eps_blr"] = cfg.solver.eps ? json(*cfg.solver.eps) : json("full_rank");
  d["mixed_precision"] = cfg.solver.mixed_precision;
  d["ordering"] = to_string(cfg.solver.ordering);
  d["tile_size"] = cfg.solver.tile_size;
  return d;
}

}  // namespace starwave
