#pragma once

#include <optional>
#include <vector>

#include "phl/errors.hpp"
#include "phl/hilbert.hpp"
#include "phl/lindblad.hpp"
#include "phl/model.hpp"

namespace phl {

/// ⟨b†²b²⟩/⟨b†b⟩² for a single-oscillator state; empty when ⟨b†b⟩ <= 1e-9.
std::optional<double> g2_zero(const DensityMatrix& rho_osc);

struct GridSpec {
  double x_min = -5.0, x_max = 5.0, p_min = -5.0, p_max = 5.0;
  int n_points = 201;

  /// Square grid over ±(√(2 n_max) + 3).
  static GridSpec for_truncation(int n_max, int n_points = 201);
};

struct WignerGrid {
  double x_min = 0.0, x_max = 0.0, p_min = 0.0, p_max = 0.0;
  int n_points = 0;
  Eigen::MatrixXd values;  // values(i, j) at (x_i, p_j)

  double dx() const { return (x_max - x_min) / (n_points - 1); }
  double dp() const { return (p_max - p_min) / (n_points - 1); }
  double x(int i) const { return x_min + i * dx(); }
  double p(int j) const { return p_min + j * dp(); }
  double integral() const { return values.sum() * dx() * dp(); }
  /// Bilinear interpolation; zero outside the grid.
  double sample(double x, double p) const;
};

/// W(x, p) with x = (b + b†)/√2, p = (b − b†)/(i√2), built from the closed-form
/// Laguerre kernel of each Fock pair |m⟩⟨n|.
WignerGrid wigner(const DensityMatrix& rho_osc, const GridSpec& grid, Warnings* warnings = nullptr);

/// 1 − (max − min)/(max + min) of W around the circle through the radial maximum.
/// Empty when the radial maximum sits at the origin or W has no positive ring.
std::optional<double> ring_symmetry_score(const WignerGrid& w);

struct SpectrumWindow {
  double dtau = 2.0;
  /// 0 selects 50/γ.
  double tau_max = 0.0;
  double rel_cutoff = 1e-3;
  int zero_pad_factor = 16;
  /// Keep only |ω − ω1| <= span in the returned arrays; 0 keeps the whole band.
  double omega_span = 0.0;
};

struct SpectrumResult {
  std::vector<double> omegas;    // offsets from the oscillator frequency
  std::vector<double> s_values;
  double fwhm = 0.0;
  double c0 = 0.0;
  /// Σ S Δω / 2π over the full band divided by C(0).
  double parseval_ratio = 0.0;
  std::vector<double> taus;
  std::vector<cplx> correlation;
};

/// S(ω) = 2 Re ∫₀^∞ C(τ) e^{−iωτ} dτ with C(τ) = ⟨b†(τ) b(0)⟩ from the regression theorem
/// under the effective-model generator. `site` selects the oscillator (0-based site index).
/// Empty when C(0) <= 0.
std::optional<SpectrumResult> power_spectrum(const ChainConfig& config, ResonanceCase which,
                                             const DensityMatrix& rho_ss, const SpectrumWindow& window,
                                             std::size_t site = 0);

/// Same, for an explicit time-independent generator; C(τ) is taken in the frame of `h`.
std::optional<SpectrumResult> power_spectrum(const HamiltonianSchedule& h, const DissipatorSet& d, const Operator& b,
                                             const DensityMatrix& rho_ss, const SpectrumWindow& window,
                                             double gamma_mech);

/// Half-maximum width around the largest sample, by linear interpolation; NaN if a side never drops.
double fwhm(const std::vector<double>& x, const std::vector<double>& y);

/// (v − min)/(max − min) over the finite entries; NaN entries pass through. Throws ValidationError
/// unless at least two distinct finite values are present.
std::vector<double> minmax_normalize(const std::vector<double>& values);

inline constexpr double kPhaseFloor = 0.05;

struct SyncMetrics {
  std::vector<std::optional<double>> r_k;
  std::vector<std::size_t> active;
  std::vector<std::vector<std::optional<double>>> phases;  // one list per active site
  struct Pair {
    std::size_t j, k;
    std::vector<std::optional<double>> diff;  // wrapped to [0, 2π)
  };
  std::vector<Pair> pair_diffs;
};

/// Kuramoto order parameter over the `active` sites. `b[j][t]` is ⟨b_j⟩ at sample t and
/// `n[j][t]` the matching ⟨b_j†b_j⟩ used for the amplitude floor; with `n` empty no floor is applied.
SyncMetrics kuramoto(const std::vector<std::vector<cplx>>& b, const std::vector<std::vector<double>>& n,
                     const std::vector<std::size_t>& active);

/// Sites with λ > 0.
std::vector<std::size_t> active_sites(const ChainConfig& config);

}  // namespace phl
