#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "starwave/background.hpp"
#include "starwave/blr.hpp"
#include "starwave/mesh.hpp"
#include "starwave/postproc.hpp"

namespace starwave {

struct MeshConfig {
  std::string kind = "layered_ball";  ///< layered_ball, cube or file
  LayerSpec layers;
  int cube_n = 4;
  std::string path;  ///< Gmsh file for kind = file
  bool adaptive = false;
  int order = 2;  ///< uniform order when not adaptive
  int p_min = 1;
  int p_max = max_order;
};

struct BackgroundConfig {
  std::string kind = "toy";  ///< toy, constant or file
  std::string path;
  double length_scale = 1.0;
  double r_max = 1.001;
  double rho_decay = 20.0;
  double c_center = 1.0;
  double c_drop = 0.0;
  double g = 1.0;
  double rho = 1.0;  ///< constant background
  double c = 1.0;
};

struct PerturbationConfig {
  std::string kind = "none";  ///< none, active_region or volumetric
  std::string path;
  double r_center = 0.995;
  double variance = 8.5e-4;
  double alpha = 0.0;
};

struct OutputConfig {
  std::string directory = "starwave-out";
  bool vtk = true;
  bool csv = true;
  std::vector<Locus> loci{Locus::plane, Locus::sphere};
  PlaneSpec plane;
  ArcSpec arc;
  SphereSpec sphere;
  bool cache = true;
};

/// Everything a run needs, read from a TOML-style file.
struct RunConfig {
  std::string name = "run";
  MeshConfig mesh;
  BackgroundConfig background;
  PerturbationConfig perturbation;
  Formulation formulation = Formulation::liouville;
  std::vector<double> frequencies_mhz;
  /// Angular frequencies in rad/s, used instead of frequencies_mhz when set.
  std::vector<double> omegas;
  double attenuation_uhz = 10.0;
  double tau_scale = 1e6;
  std::vector<GaussianSource> sources;
  BlrOptions solver;
  bool estimate_condition = true;
  std::vector<double> stats_eps{1e-5, 1e-7, 1e-9};
  OutputConfig output;
  std::string origin;  ///< file the config came from

  /// Physical solver settings for one entry of the frequency list.
  SolverConfig solver_config(std::size_t frequency) const;
  std::size_t num_frequencies() const;
  /// Throws InputError: frequency > 0, at least one source, valid ranges.
  void validate() const;
};

/// Keys are checked: unknown keys raise InputError naming the key.
RunConfig parse_run_config(const nlohmann::json& doc, const std::string& origin = "<config>");

/// Reads a config file; overrides are "section.key=value" strings applied
/// before interpretation. Relative paths inside the file resolve against the
/// file's directory.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Applies one "a.b.c=value" override to a parsed document.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Canonical JSON of the settings that determine the solution of one
/// frequency (output settings excluded).
nlohmann::json physics_digest(const RunConfig& cfg, std::size_t frequency);

}  // namespace starwave
