#include "phl/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace phl {

namespace {

constexpr cplx I{0.0, 1.0};

void check_sizes(const MeanFieldState& s, const ChainConfig& c) {
  if (s.sites.size() != c.sites.size() || s.bonds.size() + 1 != c.sites.size())
    throw ValidationError("meanfield: state has " + std::to_string(s.sites.size()) + " sites, config has " +
                          std::to_string(c.sites.size()));
}

}  // namespace

Eigen::VectorXcd MeanFieldState::pack() const {
  Eigen::VectorXcd v(sites.size() * kSiteSize + bonds.size() * kBondSize);
  Eigen::Index k = 0;
  for (const auto& s : sites)
    for (cplx x : {s.s_plus, s.s_minus, cplx(s.s_z), s.b, s.b_dag, cplx(s.n), cplx(s.n2), s.bnb, s.bnb_c, s.bsq,
                   s.bsq_c})
      v(k++) = x;
  for (const auto& b : bonds)
    for (cplx x : {b.pp, b.pm, b.mp, b.mm}) v(k++) = x;
  return v;
}

MeanFieldState MeanFieldState::unpack(const Eigen::VectorXcd& v, std::size_t n_sites) {
  if (n_sites == 0 || static_cast<std::size_t>(v.size()) != n_sites * kSiteSize + (n_sites - 1) * kBondSize)
    throw DimensionError("meanfield: packed vector has the wrong length");
  MeanFieldState s;
  s.sites.resize(n_sites);
  s.bonds.resize(n_sites - 1);
  Eigen::Index k = 0;
  for (auto& x : s.sites) {
    x.s_plus = v(k++);
    x.s_minus = v(k++);
    x.s_z = v(k++).real();
    x.b = v(k++);
    x.b_dag = v(k++);
    x.n = v(k++).real();
    x.n2 = v(k++).real();
    x.bnb = v(k++);
    x.bnb_c = v(k++);
    x.bsq = v(k++);
    x.bsq_c = v(k++);
  }
  for (auto& b : s.bonds) {
    b.pp = v(k++);
    b.pm = v(k++);
    b.mp = v(k++);
    b.mm = v(k++);
  }
  return s;
}

double MeanFieldState::conjugacy_error() const {
  double e = 0.0;
  for (const auto& s : sites)
    e = std::max({e, std::abs(s.s_minus - std::conj(s.s_plus)), std::abs(s.b_dag - std::conj(s.b)),
                  std::abs(s.bnb_c - std::conj(s.bnb)), std::abs(s.bsq_c - std::conj(s.bsq))});
  for (const auto& b : bonds)
    e = std::max({e, std::abs(b.mm - std::conj(b.pp)), std::abs(b.mp - std::conj(b.pm))});
  return e;
}

MeanFieldState meanfield_initial_state(const ChainConfig& config, const MeanFieldInit& init) {
  const std::size_t n = config.sites.size();
  if (n == 0) throw ValidationError("meanfield: chain has no sites");
  if (init.seeds && init.seeds->size() != n)
    throw ValidationError("meanfield: " + std::to_string(init.seeds->size()) + " seeds for " + std::to_string(n) +
                          " sites");
  MeanFieldState s;
  s.sites.resize(n);
  s.bonds.resize(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx a = init.seeds ? (*init.seeds)[j]
                              : std::polar(init.seed_amplitude, 2.0 * std::numbers::pi * (j + 1.0) / n);
    const double a2 = std::norm(a);
    const double nth = init.n0 - a2;
    if (nth < 0.0) throw ValidationError("meanfield: n0 is smaller than the seed intensity");
    auto& x = s.sites[j];
    x.b = a;
    x.b_dag = std::conj(a);
    x.n = init.n0;
    x.n2 = a2 * a2 + 4.0 * a2 * nth + 2.0 * nth * nth;
    x.bnb = a * (a2 + 2.0 * nth);
    x.bnb_c = std::conj(x.bnb);
    x.bsq = a * a;
    x.bsq_c = std::conj(x.bsq);
  }
  return s;
}

MeanFieldState derivatives(const MeanFieldState& st, double t, const ChainConfig& config) {
  check_sizes(st, config);
  const std::size_t n = st.sites.size();
  const double gs = config.gamma_spin, gm = config.gamma_mech;
  // bond drive c_j = J_j cos(Ω_j t); J_0 = J_N = 0 handled by the range checks below
  std::vector<double> c(n - 1);
  for (std::size_t j = 0; j + 1 < n; ++j) c[j] = config.bonds[j].j_amp * std::cos(config.bonds[j].big_omega * t);
  auto drive = [&](long j) { return j >= 0 && j + 1 < static_cast<long>(n) ? c[j] : 0.0; };
  auto sx = [&](long j) -> cplx {  // σ+ + σ− of site j, zero outside the chain
    if (j < 0 || j >= static_cast<long>(n)) return 0.0;
    return st.sites[j].s_plus + st.sites[j].s_minus;
  };
  auto big_x = [&](std::size_t j) { return st.sites[j].b_dag + st.sites[j].b; };

  MeanFieldState d;
  d.sites.resize(n);
  d.bonds.resize(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& s = st.sites[j];
    const auto& p = config.sites[j];
    auto& o = d.sites[j];
    const long jl = static_cast<long>(j);
    const double cl = drive(jl - 1), cr = drive(jl);
    const cplx field = cl * sx(jl - 1) + cr * sx(jl + 1);
    const cplx xj = big_x(j);
    o.s_plus = I * (p.delta - 2.0 * p.lambda * xj + I * gs / 2.0) * s.s_plus - I * s.s_z * field;
    o.s_minus = -I * (p.delta - 2.0 * p.lambda * xj - I * gs / 2.0) * s.s_minus + I * s.s_z * field;

    cplx dz = -gs * (s.s_z + 1.0);
    if (j > 0) {
      const auto& L = st.bonds[j - 1];
      dz += 2.0 * I * cl * (L.pm + L.mm - L.pp - L.mp);
    }
    if (j + 1 < n) {
      const auto& R = st.bonds[j];
      dz += 2.0 * I * cr * (R.mp + R.mm - R.pp - R.pm);
    }
    o.s_z = dz.real();

    const double w = p.omega_m, lam = p.lambda;
    o.b = -(I * w + gm / 2.0) * s.b + I * lam * s.s_z;
    o.b_dag = (I * w - gm / 2.0) * s.b_dag - I * lam * s.s_z;
    o.n = (I * lam * s.s_z * (s.b_dag - s.b) - gm * s.n).real();
    o.n2 = (-2.0 * I * lam * s.s_z * (s.bnb - s.bnb_c) - 2.0 * gm * s.n2).real();
    o.bnb = -(I * w + 1.5 * gm) * s.bnb - I * lam * s.s_z * (s.bsq - 2.0 * s.n);
    o.bnb_c = -(-I * w + 1.5 * gm) * s.bnb_c + I * lam * s.s_z * (s.bsq_c - 2.0 * s.n);
    o.bsq = -(2.0 * I * w + gm) * s.bsq + 2.0 * I * lam * s.s_z * s.b;
    o.bsq_c = -(-2.0 * I * w + gm) * s.bsq_c - 2.0 * I * lam * s.s_z * s.b_dag;
  }

  for (std::size_t j = 0; j + 1 < n; ++j) {
    const long jl = static_cast<long>(j);
    const auto& a = st.sites[j];
    const auto& b = st.sites[j + 1];
    const auto& B = st.bonds[j];
    auto& o = d.bonds[j];
    const double cl = drive(jl - 1), cm = c[j], cr = drive(jl + 1);
    const cplx left = sx(jl - 1), right = sx(jl + 2);
    const cplx lx = config.sites[j].lambda * big_x(j), rx = config.sites[j + 1].lambda * big_x(j + 1);
    const double dj = config.sites[j].delta;

    o.pp = 2.0 * I * (dj - lx - rx) * B.pp - I * cl * a.s_z * b.s_plus * left - I * (cm / 2.0) * (a.s_z + b.s_z) -
           I * cr * a.s_plus * b.s_z * right - gs * B.pp;
    o.mp = 2.0 * I * (lx - rx) * B.mp + I * cl * a.s_z * b.s_plus * left - I * (cm / 2.0) * (b.s_z - a.s_z) -
           I * cr * a.s_minus * b.s_z * right - gs * B.mp;
    o.mm = -2.0 * I * (dj - lx - rx) * B.mm + I * cl * a.s_z * b.s_minus * left + I * (cm / 2.0) * (a.s_z + b.s_z) +
           I * cr * a.s_minus * b.s_z * right - gs * B.mm;
    o.pm = -2.0 * I * (lx - rx) * B.pm - I * cl * a.s_z * b.s_minus * left + I * (cm / 2.0) * (b.s_z - a.s_z) +
           I * cr * a.s_plus * b.s_z * right - gs * B.pm;
  }
  return d;
}

MeanFieldRecord integrate_meanfield(const MeanFieldState& initial, const ChainConfig& config,
                                    const IntegrationSpec& spec, Warnings* warnings) {
  validate(config, warnings);
  check_sizes(initial, config);
  double f_max = 0.0;
  for (const auto& s : config.sites) f_max = std::max({f_max, std::abs(s.delta), s.omega_m});
  for (const auto& b : config.bonds) f_max = std::max(f_max, std::abs(b.big_omega));
  validate(spec, f_max);
  for (std::size_t j = 0; j + 1 < config.sites.size(); ++j)
    if (config.sites[j].delta != config.sites[j + 1].delta)
      warn(warnings, "meanfield: pair line of bond " + std::to_string(j) +
                         " uses only the left splitting, but the two splittings differ");

  const std::size_t n_sites = config.sites.size();
  auto f = [&](double t, const Eigen::VectorXcd& v) { return derivatives(MeanFieldState::unpack(v, n_sites), t, config).pack(); };

  MeanFieldRecord rec;
  rec.n.resize(n_sites);
  rec.g2.resize(n_sites);
  rec.b.resize(n_sites);
  rec.s_z.resize(n_sites);
  auto sample = [&](double t, const MeanFieldState& s) {
    rec.times.push_back(t);
    bool breach = false;
    for (std::size_t j = 0; j < n_sites; ++j) {
      const auto& x = s.sites[j];
      rec.n[j].push_back(x.n);
      rec.g2[j].push_back(x.n > 1e-9 ? std::optional<double>(x.n2 / (x.n * x.n)) : std::nullopt);
      rec.b[j].push_back(x.b);
      rec.s_z[j].push_back(x.s_z);
      if (x.n2 < -0.05 * x.n * x.n) breach = true;
    }
    if (breach) ++rec.n2_breaches;
    rec.max_conjugacy_error = std::max(rec.max_conjugacy_error, s.conjugacy_error());
  };

  Eigen::VectorXcd y = initial.pack();
  sample(0.0, initial);
  const long long steps = std::llround(spec.t_end / spec.dt);
  const double h = spec.dt;
  for (long long k = 1; k <= steps; ++k) {
    const double t = (k - 1) * h;
    const Eigen::VectorXcd k1 = f(t, y);
    const Eigen::VectorXcd k2 = f(t + h / 2, y + (h / 2) * k1);
    const Eigen::VectorXcd k3 = f(t + h / 2, y + (h / 2) * k2);
    const Eigen::VectorXcd k4 = f(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (k % spec.sample_every == 0 || k == steps) {
      if (!y.allFinite() || y.cwiseAbs().maxCoeff() > 1e6)
        throw NumericalError("meanfield: state diverged at t = " + std::to_string(k * h));
      sample(k * h, MeanFieldState::unpack(y, n_sites));
    }
  }
  rec.final_state = MeanFieldState::unpack(y, n_sites);
  if (rec.n2_breaches > 0)
    warn(warnings, "meanfield: closure gave n2 < -0.05 n^2 at " + std::to_string(rec.n2_breaches) + " samples");
  rec.sync = kuramoto(rec.b, rec.n, active_sites(config));
  return rec;
}

MeanFieldCrosscheck crosscheck_vs_exact(const ChainConfig& config, const IntegrationSpec& spec) {
  const auto slots = oscillator_slots(config);
  const auto first = std::find_if(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); });
  if (first == slots.end()) throw ValidationError("crosscheck: chain has no oscillator");
  const auto site = static_cast<std::size_t>(first - slots.begin());

  ChainConfig cold = config;
  cold.nbar_spin = 0.0;
  cold.nbar_mech = 0.0;
  const auto layout = chain_layout(config);
  DensityMatrix rho0 = chain_initial_state(config, layout);  // thermal at the configured n̄m
  const std::string key = "n" + std::to_string(site + 1);
  auto exact = integrate(rho0, full_schedule(cold, layout), build_dissipators(cold, layout), spec,
                         {{key, chain_probes(config, layout).at(key)}});

  MeanFieldInit init;
  init.seeds = std::vector<cplx>(config.sites.size(), 0.0);
  init.n0 = config.nbar_mech;
  const auto mf = integrate_meanfield(meanfield_initial_state(config, init), config, spec);

  MeanFieldCrosscheck out;
  out.times = exact.times;
  out.n_exact = exact.real(key);
  out.n_meanfield = mf.n[site];
  const std::size_t m = std::min(out.n_exact.size(), out.n_meanfield.size());
  for (std::size_t k = 0; k < m; ++k) {
    if (out.n_exact[k] <= 0.0) continue;
    out.max_rel_dev_n = std::max(out.max_rel_dev_n, std::abs(out.n_meanfield[k] - out.n_exact[k]) / out.n_exact[k]);
  }
  return out;
}

}  // namespace phl
