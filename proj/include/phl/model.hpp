#pragma once

#include <optional>
#include <vector>

#include "phl/errors.hpp"
#include "phl/hilbert.hpp"

namespace phl {

struct SiteParams {
  double delta = 0.0;
  double omega_m = 0.0;  // 0: no oscillator on this site
  double lambda = 0.0;
  int n_max = 40;

  bool operator==(const SiteParams&) const = default;
};

struct BondParams {
  double j_amp = 0.0;
  double big_omega = 0.0;

  bool operator==(const BondParams&) const = default;
};

struct ChainConfig {
  std::vector<SiteParams> sites;
  std::vector<BondParams> bonds;
  double gamma_spin = 0.0;
  double gamma_mech = 0.0;
  double nbar_spin = 0.0;
  double nbar_mech = 0.0;

  std::size_t size() const { return sites.size(); }
  bool operator==(const ChainConfig&) const = default;
};

struct LocalDriveParams {
  double eps0 = 0.0;
  double nu = 1.0;
};

enum class ResonanceCase { CaseI, CaseII };

inline constexpr double kResonanceTolerance = 1e-3;
inline constexpr double kBesselZero = 2.4048;

/// Throws ValidationError on a broken invariant; soft problems go to `warnings`.
void validate(const ChainConfig& config, Warnings* warnings = nullptr);

/// Spins for every site first, then one oscillator per site with omega_m > 0.
SpaceLayout chain_layout(const ChainConfig& config);
/// Same, with every oscillator truncated at `n_max`.
SpaceLayout chain_layout(const ChainConfig& config, int n_max);

/// Subsystem index of each site's oscillator in chain_layout, if any.
std::vector<std::optional<std::size_t>> oscillator_slots(const ChainConfig& config);

/// Time-dependent scalar factor amplitude * cos(freq * t); freq = 0 is a constant.
struct Coefficient {
  cplx amplitude = 1.0;
  double freq = 0.0;

  cplx operator()(double t) const;
};

struct HamiltonianTerm {
  Operator op;
  Coefficient coeff;
};

/// H(t) = sum_k rate_k(t) L_k + sum_terms c(t) op, where L_k is the level operator of
/// subsystem k (sigma_z for a spin, b^dag b for an oscillator) and
/// rate_k(t) = rate + mod_amp * cos(mod_freq * t).
/// The level part is what the integrator removes with an interaction frame.
struct HamiltonianSchedule {
  struct Rotation {
    double rate = 0.0;
    double mod_amp = 0.0;
    double mod_freq = 0.0;

    /// Integral of the rate from 0 to t.
    double phase(double t) const;
  };

  SpaceLayout layout;
  std::vector<Rotation> rotations;  // one per subsystem
  std::vector<HamiltonianTerm> terms;

  explicit HamiltonianSchedule(SpaceLayout l);
  HamiltonianSchedule() = default;

  Operator at(double t) const;
  /// Same Hamiltonian with the rotation folded back into explicit terms.
  HamiltonianSchedule lab_form() const;
  /// Largest angular frequency among Δ-like rates and drive frequencies.
  double max_frequency() const;
  bool time_independent() const;
};

/// Level of subsystem k at local index i: +1/-1 for a spin (sigma_z), n for an oscillator.
double subsystem_level(const Subsystem& s, std::size_t local);

HamiltonianSchedule full_schedule(const ChainConfig& config, const SpaceLayout& layout);
Operator full_hamiltonian(const ChainConfig& config, double t, const SpaceLayout& layout);

Operator minimal_hamiltonian(const ChainConfig& config, double t);

HamiltonianSchedule effective_schedule(ResonanceCase which, const ChainConfig& config, const SpaceLayout& layout,
                                       Warnings* warnings = nullptr);
Operator effective_hamiltonian_case1(const ChainConfig& config, const SpaceLayout& layout,
                                     Warnings* warnings = nullptr);
Operator effective_hamiltonian_case2(const ChainConfig& config, const SpaceLayout& layout,
                                     Warnings* warnings = nullptr);

struct Resonance {
  /// Case I: one drive frequency per oscillator on the bond. Case II: a single entry.
  std::vector<double> big_omega;
  std::optional<double> omega_m_required;
};

Resonance resonance_frequency(ResonanceCase which, std::size_t bond_index, const ChainConfig& config);

/// Layout for the local-drive model: spin 1, spin 2, the single oscillator.
SpaceLayout local_drive_layout(const ChainConfig& config, int n_max = -1);
HamiltonianSchedule local_drive_schedule(const ChainConfig& config, const LocalDriveParams& drive);
Operator local_drive_hamiltonian(const ChainConfig& config, const LocalDriveParams& drive, double t);

/// ε0 placing 2ε0/ν on the first zero of J0.
double default_eps0(double nu);

struct FloquetIndices {
  double alpha, beta, delta, eta, kappa;
};

FloquetIndices floquet_indices(const ChainConfig& config, const LocalDriveParams& drive);

struct FloquetOptions {
  bool enforce_bessel_zero = true;
};

Operator floquet_effective(ResonanceCase which, const ChainConfig& config, const LocalDriveParams& drive,
                           FloquetOptions options = {});

/// Bessel function of the first kind, |order| <= 12, |x| <= 20.
double bessel_j(int order, double x);

}  // namespace phl
