#pragma once

#include <optional>
#include <vector>

#include "phl/errors.hpp"
#include "phl/lindblad.hpp"
#include "phl/model.hpp"
#include "phl/observables.hpp"

namespace phl {

/// Closed set of first moments, oscillator moments up to fourth order and nearest-neighbour
/// spin pair correlators. Conjugate partners are carried as independent unknowns.
struct MeanFieldState {
  struct Site {
    cplx s_plus = 0.0, s_minus = 0.0;
    double s_z = -1.0;
    cplx b = 0.0, b_dag = 0.0;
    double n = 0.0;
    double n2 = 0.0;           // ⟨b†b†bb⟩
    cplx bnb = 0.0, bnb_c = 0.0;  // ⟨b†bb⟩, ⟨b†b†b⟩
    cplx bsq = 0.0, bsq_c = 0.0;  // ⟨bb⟩, ⟨b†b†⟩
  };
  struct Bond {
    cplx pp = 0.0, pm = 0.0, mp = 0.0, mm = 0.0;  // ⟨σ_j^a σ_{j+1}^b⟩ with a, b ∈ {+, −}
  };

  std::vector<Site> sites;
  std::vector<Bond> bonds;

  static constexpr std::size_t kSiteSize = 11;
  static constexpr std::size_t kBondSize = 4;

  Eigen::VectorXcd pack() const;
  static MeanFieldState unpack(const Eigen::VectorXcd& v, std::size_t n_sites);

  /// Largest mismatch between each unknown and the conjugate of its partner.
  double conjugacy_error() const;
};

struct MeanFieldInit {
  double seed_amplitude = 0.1;
  /// Initial ⟨b†b⟩; the part above |⟨b⟩|² is thermal.
  double n0 = 0.1;
  /// Per-site ⟨b_j⟩(0); overrides the default seeds 0.1·e^{2πij/N} (j from 1).
  std::optional<std::vector<cplx>> seeds;
};

/// |↓…↓⟩ spins and displaced-thermal oscillator moments on every site.
MeanFieldState meanfield_initial_state(const ChainConfig& config, const MeanFieldInit& init = {});

/// Right-hand side of the kinetic equations at time t (zero-temperature dissipators).
MeanFieldState derivatives(const MeanFieldState& state, double t, const ChainConfig& config);

struct MeanFieldRecord {
  std::vector<double> times;
  std::vector<std::vector<double>> n;                  // [site][sample]
  std::vector<std::vector<std::optional<double>>> g2;  // n2 / n², empty when n <= 1e-9
  std::vector<std::vector<cplx>> b;
  std::vector<std::vector<double>> s_z;
  SyncMetrics sync;
  double max_conjugacy_error = 0.0;
  /// Samples with n2 < −0.05·n² on some site.
  std::size_t n2_breaches = 0;
  MeanFieldState final_state;
};

MeanFieldRecord integrate_meanfield(const MeanFieldState& initial, const ChainConfig& config,
                                    const IntegrationSpec& spec, Warnings* warnings = nullptr);

struct MeanFieldCrosscheck {
  double max_rel_dev_n = 0.0;
  std::vector<double> times;
  std::vector<double> n_meanfield, n_exact;
};

/// Both solvers from |↓…↓⟩ ⊗ thermal(n̄m) with zero-temperature baths; compares ⟨b†b⟩ of the
/// first oscillator at every sample.
MeanFieldCrosscheck crosscheck_vs_exact(const ChainConfig& config, const IntegrationSpec& spec);

}  // namespace phl
