#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "phl/banded.hpp"
#include "phl/errors.hpp"
#include "phl/hilbert.hpp"
#include "phl/model.hpp"

namespace phl {

struct DissipationChannel {
  Operator jump;
  double rate = 0.0;
};

struct DissipatorSet {
  std::vector<DissipationChannel> channels;
};

/// Thermal channels: sigma^- at Γ(1+n̄s), sigma^+ at Γn̄s per spin; b at γ(1+n̄m), b^dag at γn̄m per oscillator.
DissipatorSet build_dissipators(const ChainConfig& config, const SpaceLayout& layout);

struct IntegrationSpec {
  double t_end = 100.0;
  double dt = 0.01;
  int sample_every = 100;
  int hermitize_every = 100;
  bool renormalize_trace = true;
  /// Step ceiling: dt <= 2π / (points_per_period * f_max) with f_max the fastest rate the
  /// chosen frame leaves in the generator.
  double points_per_period = 50.0;

  bool operator==(const IntegrationSpec&) const = default;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::map<std::string, std::vector<cplx>> observables;
  bool truncation_flagged = false;
  bool aborted = false;  // stopped early by the truncation monitor
  std::vector<double> top_population;
  DensityMatrix final_state;

  const std::vector<cplx>& at(const std::string& key) const;
  std::vector<double> real(const std::string& key) const;
};

enum class Frame { Interaction, Lab };

struct IntegrateOptions {
  Frame frame = Frame::Interaction;
  /// Stop as soon as a sampled state breaks the truncation threshold.
  bool abort_on_truncation = false;
  /// Called at every sample with the laboratory-frame state.
  std::function<void(double, const DensityMatrix&)> observer;
  Warnings* warnings = nullptr;
};

/// −i[H, ρ] + Σ rate (LρL† − ½{L†L, ρ}).
DensityMatrix rhs(const DensityMatrix& rho, const Operator& h, const DissipatorSet& d);

/// Generator of the master equation split as dρ/dt = Aρ + ρA† + Σ rate LρL†, with
/// A = −iH − ½Σ rate L†L held in banded form. In the interaction frame the level part of
/// the schedule is removed exactly and the remaining bands pick up scalar phases.
class Liouvillian {
 public:
  Liouvillian(const HamiltonianSchedule& schedule, const DissipatorSet& dissipators, Frame frame,
              Warnings* warnings = nullptr);

  Frame frame() const { return frame_; }
  Eigen::Index dim() const { return dim_; }

  /// out = L(t)[x]. With `hermitian` the input is taken as Hermitian and ρA† is formed as (Aρ)†.
  void apply(double t, const Matrix& x, Matrix& out, bool hermitian) const;

  /// Σ_k level_k(a) θ_k(t) for every basis index a.
  Eigen::VectorXd frame_phases(double t) const;
  Matrix to_lab(double t, const Matrix& x) const;
  Matrix from_lab(double t, const Matrix& x) const;

  /// Tr(O ρ_lab) computed directly from the frame state.
  cplx expectation(const BandedOperator& op, double t, const Matrix& x) const;

  /// Fastest rate left in the generator.
  double bandwidth() const;

 private:
  struct Part {
    std::size_t term;
    Eigen::Index first;  // relative to the band start
    Eigen::VectorXcd values;
  };
  struct DriveBand {
    Eigen::Index offset = 0;
    Eigen::Index first = 0;
    Eigen::Index len = 0;
    std::vector<double> level_change;
    Eigen::VectorXcd constant;  // already in A units
    std::vector<Part> parts;    // multiplied by −i c_term(t) e^{iφ(t)}
  };

  double band_phase(const std::vector<double>& level_change, double t) const;

  Frame frame_;
  Eigen::Index dim_ = 0;
  HamiltonianSchedule schedule_;
  std::vector<DriveBand> bands_;
  std::vector<std::pair<BandedOperator, double>> jumps_;
  std::vector<Eigen::VectorXd> levels_;  // per subsystem, level at each global index
  mutable std::vector<Eigen::VectorXcd> band_values_;
  mutable Matrix y_;
};

TrajectoryRecord integrate(const DensityMatrix& rho0, const HamiltonianSchedule& h, const DissipatorSet& d,
                           const IntegrationSpec& spec, const std::map<std::string, Operator>& probes,
                           const IntegrateOptions& options = {});

/// Throws ValidationError when the spec is malformed or dt exceeds the ceiling for `f_max`.
void validate(const IntegrationSpec& spec, double f_max);

struct SteadyState {
  bool converged = false;
  cplx value = 0.0;
};

SteadyState steady_state_detect(const TrajectoryRecord& record, const std::string& key, double window, double tol);

struct FullVsEffective {
  double max_rel_dev = 0.0;
  TrajectoryRecord record_full;
  TrajectoryRecord record_eff;
};

/// Minimal-chain comparison; both runs start from |↓…↓⟩ ⊗ thermal(n̄m) and record "n" on every oscillator.
FullVsEffective compare_full_vs_effective(const ChainConfig& config, ResonanceCase which, const IntegrationSpec& spec,
                                          const IntegrateOptions& options = {});

/// Effective-model spec derived from a full-model spec: a coarser step that still lands on every sample.
IntegrationSpec effective_spec(const IntegrationSpec& full, double max_dt = 0.25);

/// |↓…↓⟩ ⊗ thermal(n̄m) on every oscillator of `layout`.
DensityMatrix chain_initial_state(const ChainConfig& config, const SpaceLayout& layout);

/// Probes n<j>, nn<j> (b†²b²) and b<j> for every oscillator, sz_<j> for every spin; j is the 1-based site.
std::map<std::string, Operator> chain_probes(const ChainConfig& config, const SpaceLayout& layout);

}  // namespace phl
