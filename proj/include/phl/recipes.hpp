#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phl/config.hpp"
#include "phl/lindblad.hpp"
#include "phl/meanfield.hpp"
#include "phl/observables.hpp"
#include "phl/sweep.hpp"

namespace phl {

const std::vector<std::string>& recipe_names();

/// Parameters transcribed from the matching figure, plus integration settings sized for it.
RunConfig recipe_defaults(const std::string& name);

/// Builds every generator the recipe would run and checks the step ceilings; no time stepping.
void check_recipe(const std::string& name, const RunConfig& config, Warnings* warnings = nullptr);

struct RecipeResult {
  std::vector<std::filesystem::path> files;
  nlohmann::json summary = nlohmann::json::object();
  bool truncated = false;
};

/// Runs the recipe and writes its CSV files into `out_dir`.
RecipeResult run_recipe(const std::string& name, const RunConfig& config, const std::filesystem::path& out_dir,
                        unsigned threads = 1, Warnings* warnings = nullptr);

// Building blocks shared by the recipes, the Python module and the acceptance checks.

struct MinimalDynamics {
  FullVsEffective runs;
  int n_max = 0;
  bool truncated = false;
};

/// Full and effective runs of a minimal chain, retried once at n_max + escalation when the
/// full run leaves the truncation-safe region.
MinimalDynamics minimal_dynamics(const RunConfig& config, ResonanceCase which, Warnings* warnings = nullptr);

/// Sweep plan behind fig2-omega-scan, fig2-threshold and figS3-localdrive.
SweepPlan scan_plan(const std::string& name, const RunConfig& config);

struct SpectrumPoint {
  double value = 0.0;
  double n_ss = 0.0;
  int n_max = 0;
  bool truncated = false;
  std::optional<SpectrumResult> spectrum;
  std::optional<std::string> error;
};

/// Effective-model steady state and emission spectrum for every J in recipe.values.
std::vector<SpectrumPoint> spectrum_scan(const RunConfig& config, unsigned threads = 1, Warnings* warnings = nullptr);

struct OscillatorPortrait {
  WignerGrid grid;
  std::optional<double> ring_score;
  cplx b_mean = 0.0;
  double n_mean = 0.0;
};

/// Wigner map and first moments of the oscillator on `site` in a chain state.
OscillatorPortrait oscillator_portrait(const DensityMatrix& state, const ChainConfig& config, std::size_t site,
                                       int grid_points = 201, Warnings* warnings = nullptr);

/// Mean-field run of an array recipe.
MeanFieldRecord array_run(const RunConfig& config, Warnings* warnings = nullptr);

struct LocalDriveDynamics {
  TrajectoryRecord full;
  TrajectoryRecord effective;
  LocalDriveParams drive;
};

/// Time evolution under the local drive at recipe.nu, with the period-averaged Case I generator alongside.
LocalDriveDynamics local_drive_dynamics(const RunConfig& config, Warnings* warnings = nullptr);

/// A sweep file: {"experiment", "target", "values", optional "base" recipe whose defaults seed the
/// configuration, optional "config" overlay, and plan options (see docs/config.md).
struct SweepJob {
  SweepPlan plan;
  RunConfig config;
  std::string base;
  std::filesystem::path out_dir;
  unsigned threads = 1;
};

SweepJob parse_sweep_job(const nlohmann::json& doc, const std::filesystem::path& relative_to = {});

/// Runs the plan and writes sweep.csv into the job's output directory.
RecipeResult run_sweep_job(const SweepJob& job, Warnings* warnings = nullptr);

/// Writes rows of numbers with a header line; 12 significant digits, NaN as "nan".
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_number(double v);

}  // namespace phl
