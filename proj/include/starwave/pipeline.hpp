#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "starwave/config.hpp"
#include "starwave/hdg.hpp"

namespace starwave {

/// Mesh, background and perturbation built from a config.
struct ProblemSetup {
  Mesh mesh;
  RadialBackground background;
  PerturbationField perturbation;
};

ProblemSetup build_setup(const RunConfig& cfg);
Discretization build_discretization(const RunConfig& cfg, const ProblemSetup& setup, std::size_t frequency);

/// Mesh statistics and the trace-to-volume dof ratio.
nlohmann::json mesh_summary(const Mesh& mesh, const Discretization& disc);

struct FrequencyRun {
  double frequency_mhz = 0.0;  ///< 0 when the config gives omega directly
  double omega = 0.0;
  nlohmann::json stats;
  std::vector<WaveField> fields;  ///< one per source
  std::vector<std::string> field_files;
  bool from_cache = false;
};

struct SolveRun {
  std::shared_ptr<const ProblemSetup> setup;  ///< fields point into its mesh
  std::vector<Discretization> discretizations;
  std::vector<FrequencyRun> frequencies;
  nlohmann::json stats;  ///< also written to <output>/stats.json
  long factorizations = 0;
};

/// Per frequency: assemble, factorize once, solve every source, reconstruct,
/// sample and export. With use_cache, fields already cached for an identical
/// physics digest are loaded instead of solved.
SolveRun run_solve(const RunConfig& cfg, bool use_cache = false);

struct CompareRun {
  nlohmann::json summary;  ///< also written to <output>/compare.json
  std::vector<DifferenceMap> maps;
};

/// Difference maps of b against reference a on a's output loci, per frequency
/// and source. Fields come from the cache when available.
CompareRun run_compare(const RunConfig& a, const RunConfig& b);

struct StatsRow {
  double frequency_mhz = 0.0;
  double omega = 0.0;
  std::optional<double> eps;
  bool mixed_precision = false;
  SolveStats stats;
  double rel_diff = 0.0;  ///< relative 2-norm difference to the full-rank trace
};

/// Full-rank reference plus one BLR factorization per eps (and per eps with
/// mixed precision when the config enables it). Writes stats.csv and
/// stats_sweep.json.
std::vector<StatsRow> run_stats(const RunConfig& cfg);

/// Number of numerical factorizations performed by the pipeline so far.
long pipeline_factorizations();

}  // namespace starwave
