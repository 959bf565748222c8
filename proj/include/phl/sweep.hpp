#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "phl/errors.hpp"
#include "phl/lindblad.hpp"
#include "phl/model.hpp"
#include "phl/observables.hpp"

namespace phl {

enum class Experiment { MinimalCase1, MinimalCase2, LocalDrive, MeanFieldArray };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

struct SweepPlan {
  /// e.g. "bonds[0].big_omega", "bonds[0].j_amp", "sites[1].delta", "gamma_mech", "drive.nu".
  std::string target;
  std::vector<double> values;
  Experiment experiment = Experiment::MinimalCase1;
  IntegrationSpec spec;

  /// Shrink dt per point to the ceiling of that point's generator, keeping the sample spacing.
  bool fit_step = false;
  /// Minimal-chain experiments: evolve the effective generator instead of the full one.
  bool effective = false;
  /// Oscillator truncation for the first attempt; 0 keeps the config's values.
  int n_max = 0;
  int n_max_escalation = 20;

  /// Steady state = mean over the final fraction of the run; converged when the spread there is
  /// within steady_tol of the mean.
  double steady_fraction = 0.1;
  double steady_tol = 0.02;
  std::size_t observe_site = 0;

  /// Local-drive base parameters; with eps0_follows_nu, ε0 is reset from ν at every point.
  LocalDriveParams drive{0.0, 2.0};
  bool eps0_follows_nu = true;

  /// Minimal chains only: also compute the emission linewidth from the effective steady state.
  bool spectrum = false;
  SpectrumWindow window;

  void validate() const;
};

struct PointResult {
  double n_ss = 0.0;
  std::optional<double> g2_ss;
  bool converged = false;
  bool truncated = false;
  int n_max = 0;
  std::optional<double> fwhm;
  std::optional<std::string> error;
};

struct SweepResult {
  std::vector<double> values;
  std::vector<PointResult> points;

  /// n_ss, g2_ss, converged, truncated, n_max and fwhm as columns; undefined entries are NaN.
  std::map<std::string, std::vector<double>> outputs() const;
};

/// Writes `value` into the parameter addressed by `target`.
void apply_target(const std::string& target, double value, ChainConfig& config, LocalDriveParams& drive);

/// One independent simulation at the plan's `value`.
PointResult run_point(const SweepPlan& plan, const ChainConfig& base, double value, Warnings* warnings = nullptr);

/// Points run on up to `threads` workers (0: hardware concurrency); results are assembled in plan order.
SweepResult run_sweep(const SweepPlan& plan, const ChainConfig& base, unsigned threads = 0,
                      Warnings* warnings = nullptr);

/// Runs f(i) for i in [0, n) on up to `threads` workers (0: hardware concurrency).
/// Each index is visited exactly once; callers store results by index.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
  };
  if (threads <= 1) return worker();
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

/// Same spec with dt reduced to fit the ceiling for `f_max` while keeping the sample spacing.
IntegrationSpec fit_step(const IntegrationSpec& spec, double f_max);

}  // namespace phl
