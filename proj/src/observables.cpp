#include "phl/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include <fftw3.h>

namespace phl {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t only_oscillator(const DensityMatrix& rho) {
  if (rho.layout.size() != 1 || rho.layout[0].kind != SubsystemKind::Oscillator)
    throw DimensionError("expected a single-oscillator state");
  return rho.layout[0].dim;
}

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::optional<double> g2_zero(const DensityMatrix& rho_osc) {
  const std::size_t dim = only_oscillator(rho_osc);
  double n = 0.0, nn = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double p = rho_osc.matrix(k, k).real();
    n += k * p;
    nn += k * (k - 1.0) * p;
  }
  if (n <= 1e-9) return std::nullopt;
  return nn / (n * n);
}

GridSpec GridSpec::for_truncation(int n_max, int n_points) {
  const double r = std::sqrt(2.0 * n_max) + 3.0;
  return {-r, r, -r, r, n_points};
}

double WignerGrid::sample(double xs, double ps) const {
  const double fi = (xs - x_min) / dx(), fj = (ps - p_min) / dp();
  if (fi < 0.0 || fj < 0.0 || fi > n_points - 1 || fj > n_points - 1) return 0.0;
  const int i = std::min(static_cast<int>(fi), n_points - 2);
  const int j = std::min(static_cast<int>(fj), n_points - 2);
  const double a = fi - i, b = fj - j;
  return (1 - a) * (1 - b) * values(i, j) + a * (1 - b) * values(i + 1, j) + (1 - a) * b * values(i, j + 1) +
         a * b * values(i + 1, j + 1);
}

WignerGrid wigner(const DensityMatrix& rho_osc, const GridSpec& grid, Warnings* warnings) {
  const int dim = static_cast<int>(only_oscillator(rho_osc));
  if (grid.n_points < 2 || !(grid.x_max > grid.x_min) || !(grid.p_max > grid.p_min))
    throw ValidationError("wigner: degenerate grid");
  WignerGrid w{grid.x_min, grid.x_max, grid.p_min, grid.p_max, grid.n_points,
               Eigen::MatrixXd::Zero(grid.n_points, grid.n_points)};
  const Matrix& rho = rho_osc.matrix;
  std::vector<double> ell(dim);
  for (int i = 0; i < grid.n_points; ++i) {
    for (int j = 0; j < grid.n_points; ++j) {
      const double x = w.x(i), p = w.p(j);
      const double u = 2.0 * (x * x + p * p);
      const double phi = std::atan2(p, x);
      double total = 0.0;
      for (int k = 0; k < dim; ++k) {
        const int len = dim - k;
        // normalised Laguerre sqrt(n!/(n+k)!) L_n^k(u)
        ell[0] = std::exp(-0.5 * std::lgamma(k + 1.0));
        if (len > 1) ell[1] = (k + 1.0 - u) * ell[0] / std::sqrt(k + 1.0);
        for (int n = 1; n + 1 < len; ++n)
          ell[n + 1] = ((2.0 * n + k + 1.0 - u) * ell[n] - std::sqrt(n * (n + k + 0.0)) * ell[n - 1]) /
                       std::sqrt((n + 1.0) * (n + 1.0 + k));
        double pref;
        if (u == 0.0)
          pref = k == 0 ? 1.0 : 0.0;
        else
          pref = std::exp(0.5 * k * std::log(u) - 0.5 * u);
        if (pref == 0.0) continue;
        cplx s = 0.0;
        for (int n = 0; n < len; ++n) s += (n % 2 ? -1.0 : 1.0) * ell[n] * rho(n + k, n);
        if (k == 0)
          total += pref * s.real();
        else
          total += 2.0 * pref * (s * std::polar(1.0, -k * phi)).real();
      }
      w.values(i, j) = total / kPi;
    }
  }
  const double mass = w.integral();
  if (mass < 0.99) warn(warnings, "wigner: grid captures only " + std::to_string(mass) + " of the quasi-probability");
  return w;
}

std::optional<double> ring_symmetry_score(const WignerGrid& w) {
  const double dr = w.dx();
  const double r_max = std::min({-w.x_min, w.x_max, -w.p_min, w.p_max});
  const int bins = static_cast<int>(r_max / dr);
  if (bins < 2) return std::nullopt;
  std::vector<double> sum(bins, 0.0);
  std::vector<int> count(bins, 0);
  for (int i = 0; i < w.n_points; ++i)
    for (int j = 0; j < w.n_points; ++j) {
      const int b = static_cast<int>(std::hypot(w.x(i), w.p(j)) / dr);
      if (b >= bins) continue;
      sum[b] += w.values(i, j);
      ++count[b];
    }
  int best = -1;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double v = sum[b] / count[b];
    if (v > best_val) best_val = v, best = b;
  }
  if (best <= 0 || best_val <= 0.0) return std::nullopt;
  const double r = (best + 0.5) * dr;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int a = 0; a < 360; ++a) {
    const double th = 2.0 * kPi * a / 360.0;
    const double v = w.sample(r * std::cos(th), r * std::sin(th));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi + lo <= 0.0) return 0.0;
  return std::clamp(1.0 - (hi - lo) / (hi + lo), 0.0, 1.0);
}

double fwhm(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw ValidationError("fwhm: mismatched arrays");
  const auto peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double half = 0.5 * y[peak];
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto cross = [&](std::size_t a, std::size_t b) {  // y[a] >= half > y[b]
    return x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
  };
  double left = nan, right = nan;
  for (std::size_t i = peak; i > 0; --i)
    if (y[i - 1] < half) {
      left = cross(i, i - 1);
      break;
    }
  for (std::size_t i = peak; i + 1 < y.size(); ++i)
    if (y[i + 1] < half) {
      right = cross(i, i + 1);
      break;
    }
  return right - left;
}

std::vector<double> minmax_normalize(const std::vector<double>& values) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values)
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!(hi > lo)) throw ValidationError("minmax_normalize: needs at least two distinct finite values");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = std::isfinite(values[i]) ? (values[i] - lo) / (hi - lo) : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::optional<SpectrumResult> power_spectrum(const HamiltonianSchedule& h, const DissipatorSet& d, const Operator& b,
                                             const DensityMatrix& rho_ss, const SpectrumWindow& window,
                                             double gamma_mech) {
  if (!(window.dtau > 0.0)) throw ValidationError("spectrum: dtau must be positive");
  if (window.zero_pad_factor < 1) throw ValidationError("spectrum: zero_pad_factor must be >= 1");
  double tau_max = window.tau_max;
  if (tau_max <= 0.0) {
    if (!(gamma_mech > 0.0)) throw ValidationError("spectrum: tau_max is required when the mechanical rate is zero");
    tau_max = 50.0 / gamma_mech;
  }
  if (!h.time_independent()) throw ValidationError("spectrum: generator must be time independent");

  Liouvillian lv(h, d, Frame::Lab);
  const auto bdag = BandedOperator::from_dense(b.matrix.adjoint(), b.layout);

  // Sub-steps keep RK4 inside its stability region for the stiffest rate present.
  const Matrix hd = h.at(0.0).matrix;
  double bound = 2.0 * hd.cwiseAbs().rowwise().sum().maxCoeff();
  for (const auto& c : d.channels)
    bound += c.rate * (c.jump.matrix.adjoint() * c.jump.matrix).diagonal().real().maxCoeff();
  const int sub = std::max(1, static_cast<int>(std::ceil(window.dtau * bound / 2.0)));
  const double ds = window.dtau / sub;

  Matrix x = b.matrix * rho_ss.matrix;
  Matrix k1, k2, k3, k4, tmp;
  SpectrumResult res;
  const cplx c0 = lv.expectation(bdag, 0.0, x);
  res.c0 = c0.real();
  if (!(res.c0 > 0.0)) return std::nullopt;
  res.taus.push_back(0.0);
  res.correlation.push_back(c0);
  const auto n_tau = static_cast<long long>(std::floor(tau_max / window.dtau + 1e-9));
  for (long long s = 1; s <= n_tau; ++s) {
    for (int q = 0; q < sub; ++q) {
      lv.apply(0.0, x, k1, false);
      tmp = x + 0.5 * ds * k1;
      lv.apply(0.0, tmp, k2, false);
      tmp = x + 0.5 * ds * k2;
      lv.apply(0.0, tmp, k3, false);
      tmp = x + ds * k3;
      lv.apply(0.0, tmp, k4, false);
      x += (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const cplx c = lv.expectation(bdag, 0.0, x);
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw NumericalError("spectrum: correlation diverged");
    res.taus.push_back(s * window.dtau);
    res.correlation.push_back(c);
    if (std::abs(c) < window.rel_cutoff * std::abs(c0)) break;
  }

  const std::size_t k_len = res.correlation.size();
  std::size_t m_len = 1;
  while (m_len < k_len * static_cast<std::size_t>(window.zero_pad_factor)) m_len <<= 1;
  std::vector<cplx> in(m_len, 0.0), out(m_len);
  for (std::size_t k = 0; k < k_len; ++k) in[k] = (k == 0 ? 0.5 : 1.0) * res.correlation[k];
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(m_len), reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  const double dw = 2.0 * kPi / (m_len * window.dtau);
  std::vector<double> omegas(m_len), s_values(m_len);
  double total = 0.0;
  for (std::size_t i = 0; i < m_len; ++i) {
    // fftshift: negative frequencies first
    const std::size_t m = (i + m_len / 2) % m_len;
    const long long signed_m = m < m_len / 2 ? static_cast<long long>(m) : static_cast<long long>(m) - static_cast<long long>(m_len);
    omegas[i] = signed_m * dw;
    s_values[i] = 2.0 * out[m].real() * window.dtau;
    total += s_values[i];
  }
  res.parseval_ratio = total * dw / (2.0 * kPi) / res.c0;
  res.fwhm = fwhm(omegas, s_values);
  if (window.omega_span > 0.0) {
    for (std::size_t i = 0; i < m_len; ++i)
      if (std::abs(omegas[i]) <= window.omega_span) {
        res.omegas.push_back(omegas[i]);
        res.s_values.push_back(s_values[i]);
      }
  } else {
    res.omegas = std::move(omegas);
    res.s_values = std::move(s_values);
  }
  return res;
}

std::optional<SpectrumResult> power_spectrum(const ChainConfig& config, ResonanceCase which,
                                             const DensityMatrix& rho_ss, const SpectrumWindow& window,
                                             std::size_t site) {
  const auto slots = oscillator_slots(config);
  if (site >= slots.size() || !slots[site]) throw ValidationError("spectrum: site has no oscillator");
  const SpaceLayout& layout = rho_ss.layout;
  const auto n_max = static_cast<int>(layout[*slots[site]].dim) - 1;
  const auto schedule = effective_schedule(which, config, layout);
  const Operator b = embed(annihilation(n_max), *slots[site], layout);
  return power_spectrum(schedule, build_dissipators(config, layout), b, rho_ss, window, config.gamma_mech);
}

SyncMetrics kuramoto(const std::vector<std::vector<cplx>>& b, const std::vector<std::vector<double>>& n,
                     const std::vector<std::size_t>& active) {
  SyncMetrics m;
  m.active = active;
  std::size_t samples = 0;
  for (std::size_t j : active) {
    if (j >= b.size()) throw ValidationError("kuramoto: active site out of range");
    if (!n.empty() && (j >= n.size() || n[j].size() != b[j].size()))
      throw ValidationError("kuramoto: occupation series does not match");
    samples = std::max(samples, b[j].size());
  }
  for (std::size_t j : active)
    if (b[j].size() != samples) throw ValidationError("kuramoto: series lengths differ");

  for (std::size_t j : active) {
    std::vector<std::optional<double>> ph(samples);
    for (std::size_t t = 0; t < samples; ++t) {
      const double amp = std::abs(b[j][t]);
      const double floor = n.empty() ? 0.0 : kPhaseFloor * std::sqrt(n[j][t] + 1e-12);
      if (amp > floor) ph[t] = std::arg(b[j][t]);
    }
    m.phases.push_back(std::move(ph));
  }
  m.r_k.resize(samples);
  for (std::size_t t = 0; t < samples; ++t) {
    cplx z = 0.0;
    int count = 0;
    for (const auto& ph : m.phases)
      if (ph[t]) z += std::polar(1.0, *ph[t]), ++count;
    if (count > 0) m.r_k[t] = std::abs(z) / count;
  }
  for (std::size_t a = 0; a < active.size(); ++a)
    for (std::size_t c = a + 1; c < active.size(); ++c) {
      SyncMetrics::Pair pr{active[a], active[c], std::vector<std::optional<double>>(samples)};
      for (std::size_t t = 0; t < samples; ++t)
        if (m.phases[a][t] && m.phases[c][t]) {
          double d = std::fmod(*m.phases[a][t] - *m.phases[c][t], 2.0 * kPi);
          if (d < 0.0) d += 2.0 * kPi;
          if (d >= 2.0 * kPi) d = 0.0;
          pr.diff[t] = d;
        }
      m.pair_diffs.push_back(std::move(pr));
    }
  return m;
}

std::vector<std::size_t> active_sites(const ChainConfig& config) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < config.sites.size(); ++j)
    if (config.sites[j].lambda > 0.0) out.push_back(j);
  return out;
}

}  // namespace phl
