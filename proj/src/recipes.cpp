#include "phl/recipes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace phl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<double> kOmegaScan = {7.0, 8.0, 8.5, 9.0, 9.5, 10.0, 11.0};
const std::vector<double> kThresholdScan = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08};
const std::vector<double> kNuScan = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 14.0};

ChainConfig two_site(double omega_m, double j_amp, double big_omega, double gamma_spin, double gamma_mech) {
  ChainConfig c;
  c.sites = {{2.0, omega_m, 0.4, 40}, {2.0, 0.0, 0.0, 40}};
  c.bonds = {{j_amp, big_omega}};
  c.gamma_spin = gamma_spin;
  c.gamma_mech = gamma_mech;
  c.nbar_spin = 0.01;
  c.nbar_mech = 0.1;
  return c;
}

ChainConfig fig3_chain() {
  const double w[] = {8.0, 8.0, 7.9995, 7.9994, 8.0, 7.9992, 8.0, 7.999, 7.9989, 7.9988};
  const double l[] = {0.4, 0.0, 0.42, 0.38, 0.0, 0.41, 0.0, 0.37, 0.43, 0.0};
  ChainConfig c;
  for (int j = 0; j < 10; ++j) c.sites.push_back({2.0, w[j], l[j], 40});
  c.bonds.assign(9, {0.2, 4.0});
  c.gamma_spin = 8e-2;
  c.gamma_mech = 1e-3;
  c.nbar_spin = 0.01;
  c.nbar_mech = 0.1;
  return c;
}

ChainConfig figS2_chain() {
  const double w[] = {5.0, 0.0, 7.0, 0.0, 9.0, 0.0, 12.0, 0.0, 16.0, 0.0};
  const double l[] = {0.4, 0.0, 0.4, 0.0, 0.4, 0.0, 0.4, 0.0, 0.4, 0.0};
  ChainConfig c;
  for (int j = 0; j < 10; ++j) c.sites.push_back({2.0, w[j], l[j], 40});
  // 4 + ω of the oscillator each bond serves; the tenth listed drive has no bond
  const double om[] = {9.0, 11.0, 11.0, 13.0, 13.0, 16.0, 16.0, 20.0, 20.0};
  for (double o : om) c.bonds.push_back({0.3, o});
  c.gamma_spin = 8e-2;
  c.gamma_mech = 1e-3;
  c.nbar_spin = 0.0;
  c.nbar_mech = 0.1;
  return c;
}

IntegrationSpec quantum_spec() {
  IntegrationSpec s;
  s.t_end = 8000.0;
  s.dt = 0.1;
  s.sample_every = 100;
  s.hermitize_every = 100;
  s.points_per_period = 4.0;
  return s;
}

IntegrationSpec meanfield_spec(double t_end, double dt) {
  IntegrationSpec s;
  s.t_end = t_end;
  s.dt = dt;
  s.sample_every = static_cast<int>(std::lround(10.0 / dt));
  s.hermitize_every = s.sample_every;
  s.points_per_period = 50.0;
  return s;
}

void require_known(const std::string& name) {
  const auto& names = recipe_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ValidationError("unknown recipe '" + name + "' (known: " + list + ")");
  }
}

std::size_t first_oscillator(const ChainConfig& c) {
  const auto slots = oscillator_slots(c);
  for (std::size_t j = 0; j < slots.size(); ++j)
    if (slots[j]) return j;
  throw ValidationError("configuration has no oscillator");
}

int start_n_max(const RunConfig& rc) {
  if (rc.recipe.n_max) return *rc.recipe.n_max;
  int n = 1;
  for (const auto& s : rc.chain.sites) n = std::max(n, s.n_max);
  return n;
}

void set_n_max(ChainConfig& c, int n_max) {
  for (auto& s : c.sites) s.n_max = n_max;
}

std::optional<double> ratio(double num, double den) {
  if (den <= 1e-9) return std::nullopt;
  return num / (den * den);
}

double opt(const std::optional<double>& v) { return v.value_or(kNaN); }

double mean_tail(const std::vector<double>& t, const std::vector<double>& v, double from) {
  double s = 0.0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (t[i] >= from) s += v[i], ++c;
  return c ? s / c : kNaN;
}

SpectrumWindow window_of(const RunConfig& rc) {
  SpectrumWindow w;
  if (rc.recipe.dtau) w.dtau = *rc.recipe.dtau;
  if (rc.recipe.tau_max) w.tau_max = *rc.recipe.tau_max;
  if (rc.recipe.omega_span) w.omega_span = *rc.recipe.omega_span;
  return w;
}

/// Columns t, n<k>, g2_<k>, sz_1, sz_2 (and b<k>_re/_im when `with_b`) for the oscillator on site k.
void write_minimal_series(const fs::path& path, const TrajectoryRecord& rec, std::size_t site, std::size_t n_sites,
                          bool with_b) {
  const std::string k = std::to_string(site + 1);
  std::vector<std::string> header = {"t", "n" + k, "g2_" + k};
  for (std::size_t j = 0; j < n_sites; ++j) header.push_back("sz_" + std::to_string(j + 1));
  if (with_b) header.insert(header.end(), {"b" + k + "_re", "b" + k + "_im"});
  const auto n = rec.real("n" + k);
  const auto nn = rec.real("nn" + k);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    std::vector<double> row = {rec.times[i], n[i], opt(ratio(nn[i], n[i]))};
    for (std::size_t j = 0; j < n_sites; ++j) row.push_back(rec.at("sz_" + std::to_string(j + 1))[i].real());
    if (with_b) {
      const cplx b = rec.at("b" + k)[i];
      row.push_back(b.real());
      row.push_back(b.imag());
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

void write_wigner(const fs::path& path, const WignerGrid& w) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(w.n_points) * w.n_points);
  for (int i = 0; i < w.n_points; ++i)
    for (int j = 0; j < w.n_points; ++j) rows.push_back({w.x(i), w.p(j), w.values(i, j)});
  write_csv(path, {"x", "p", "W"}, rows);
}

void write_array_series(const fs::path& path, const MeanFieldRecord& rec) {
  const std::size_t n_sites = rec.n.size();
  std::vector<std::string> header = {"t"};
  std::vector<std::optional<std::size_t>> phase_row(n_sites);
  for (std::size_t a = 0; a < rec.sync.active.size(); ++a) phase_row[rec.sync.active[a]] = a;
  for (std::size_t j = 0; j < n_sites; ++j) {
    const std::string k = std::to_string(j + 1);
    header.insert(header.end(), {"n_" + k, "g2_" + k, "phase_" + k});
  }
  header.push_back("r_K");
  for (const auto& p : rec.sync.pair_diffs)
    header.push_back("dphi_" + std::to_string(p.j + 1) + "_" + std::to_string(p.k + 1));
  std::vector<std::vector<double>> rows;
  for (std::size_t t = 0; t < rec.times.size(); ++t) {
    std::vector<double> row = {rec.times[t]};
    for (std::size_t j = 0; j < n_sites; ++j) {
      row.push_back(rec.n[j][t]);
      row.push_back(opt(rec.g2[j][t]));
      row.push_back(phase_row[j] ? opt(rec.sync.phases[*phase_row[j]][t]) : kNaN);
    }
    row.push_back(t < rec.sync.r_k.size() ? opt(rec.sync.r_k[t]) : kNaN);
    for (const auto& p : rec.sync.pair_diffs) row.push_back(opt(p.diff[t]));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

json scan_summary(const SweepResult& r, const std::string& key) {
  json s;
  const auto out = r.outputs();
  const auto& n = out.at("n_ss");
  std::size_t best = 0;
  for (std::size_t i = 1; i < n.size(); ++i)
    if (n[i] > n[best] || std::isnan(n[best])) best = i;
  s["argmax_" + key] = r.values.empty() ? kNaN : r.values[best];
  std::size_t failed = 0, truncated = 0;
  for (const auto& p : r.points) failed += p.error ? 1 : 0, truncated += p.truncated ? 1 : 0;
  s["failed_points"] = failed;
  s["truncated_points"] = truncated;
  return s;
}

void write_scan(const fs::path& path, const std::string& key, const SweepResult& r,
                const std::vector<std::pair<std::string, std::vector<double>>>& extra = {}) {
  const auto out = r.outputs();
  std::vector<std::string> header = {key};
  for (const auto& [name, col] : extra) header.push_back(name);
  for (const char* c : {"n_ss", "g2_ss", "converged", "truncated", "n_max"}) header.push_back(c);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    std::vector<double> row = {r.values[i]};
    for (const auto& [name, col] : extra) row.push_back(col[i]);
    for (const char* c : {"n_ss", "g2_ss", "converged", "truncated", "n_max"}) row.push_back(out.at(c)[i]);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

/// First value where the normalised curve reaches 0.5, linearly interpolated.
double half_crossing(const std::vector<double>& x, const std::vector<double>& y) {
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i - 1] < 0.5 && y[i] >= 0.5) return x[i - 1] + (0.5 - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1]);
  return kNaN;
}

HamiltonianSchedule constant_schedule(const Operator& h) {
  HamiltonianSchedule s(h.layout);
  s.terms.push_back({h, {1.0, 0.0}});
  return s;
}

LocalDriveParams drive_of(const RunConfig& rc) {
  LocalDriveParams d;
  d.nu = rc.recipe.nu.value_or(2.0);
  d.eps0 = rc.recipe.eps0.value_or(default_eps0(d.nu));
  return d;
}

}  // namespace

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names = {"fig2-dynamics",     "fig2-omega-scan", "fig2-threshold",
                                                 "fig2-spectrum",     "fig2-wigner",     "figS1-phaselocked",
                                                 "fig3-array",        "figS2-array",     "figS3-localdrive"};
  return names;
}

RunConfig recipe_defaults(const std::string& name) {
  require_known(name);
  RunConfig rc;
  rc.recipe.n_max_escalation = 20;
  if (name.rfind("fig2-", 0) == 0) {
    rc.chain = two_site(5.0, 0.08, 9.0, 2e-2, 8e-4);
    rc.integration = quantum_spec();
    rc.recipe.n_max = 40;
    if (name == "fig2-omega-scan") {
      rc.recipe.values = kOmegaScan;
      rc.recipe.n_max = 20;
    } else if (name == "fig2-threshold") {
      rc.recipe.values = kThresholdScan;
      rc.recipe.n_max = 20;
    } else if (name == "fig2-spectrum") {
      rc.recipe.values = kThresholdScan;
      rc.recipe.n_max = 30;
      rc.recipe.dtau = 2.0;
      rc.recipe.omega_span = 0.01;
    } else if (name == "fig2-wigner") {
      rc.recipe.grid_points = 201;
    }
  } else if (name == "figS1-phaselocked") {
    rc.chain = two_site(8.0, 0.1, 4.0, 8e-3, 1e-3);
    rc.integration = quantum_spec();
    rc.integration.t_end = 16000.0;  // the displaced component settles late
    rc.recipe.n_max = 30;
    rc.recipe.grid_points = 201;
  } else if (name == "fig3-array") {
    rc.chain = fig3_chain();
    rc.integration = meanfield_spec(20000.0, 0.01);
    rc.recipe.seed_amplitude = 0.1;
  } else if (name == "figS2-array") {
    rc.chain = figS2_chain();
    rc.integration = meanfield_spec(8000.0, 0.005);
    rc.recipe.seed_amplitude = 0.1;
  } else {  // figS3-localdrive
    rc.chain = two_site(8.0, 0.12, 0.0, 8e-2, 1e-3);
    std::swap(rc.chain.sites[0], rc.chain.sites[1]);  // drive on spin 1, oscillator on spin 2
    rc.integration = quantum_spec();
    rc.recipe.values = kNuScan;
    rc.recipe.nu = 2.0;
    rc.recipe.n_max = 20;
  }
  return rc;
}

MinimalDynamics minimal_dynamics(const RunConfig& rc, ResonanceCase which, Warnings* warnings) {
  MinimalDynamics out;
  ChainConfig cfg = rc.chain;
  int n_max = start_n_max(rc);
  const int esc = rc.recipe.n_max_escalation.value_or(20);
  for (int attempt = 0; attempt < 2; ++attempt) {
    set_n_max(cfg, n_max);
    const bool last = attempt == 1 || esc == 0;
    const SpaceLayout layout = chain_layout(cfg);
    const double bw =
        Liouvillian(full_schedule(cfg, layout), build_dissipators(cfg, layout), Frame::Interaction).bandwidth();
    IntegrateOptions opts;
    opts.abort_on_truncation = !last;
    opts.warnings = warnings;
    out.runs = compare_full_vs_effective(cfg, which, fit_step(rc.integration, bw), opts);
    out.n_max = n_max;
    out.truncated = out.runs.record_full.truncation_flagged || out.runs.record_full.aborted;
    if (!out.truncated || last) break;
    n_max += esc;
  }
  return out;
}

SweepPlan scan_plan(const std::string& name, const RunConfig& rc) {
  SweepPlan p;
  if (name == "fig2-omega-scan") {
    p.target = "bonds[0].big_omega";
    p.experiment = Experiment::MinimalCase1;
  } else if (name == "fig2-threshold") {
    p.target = "bonds[0].j_amp";
    p.experiment = Experiment::MinimalCase1;
  } else if (name == "figS3-localdrive") {
    p.target = "drive.nu";
    p.experiment = Experiment::LocalDrive;
    p.drive = drive_of(rc);
    p.eps0_follows_nu = !rc.recipe.eps0.has_value();
  } else {
    throw ValidationError("recipe '" + name + "' is not a scan");
  }
  if (!rc.recipe.values) throw ValidationError(name + ": recipe.values is required");
  p.values = *rc.recipe.values;
  p.spec = rc.integration;
  p.fit_step = true;
  p.effective = rc.recipe.effective.value_or(false);
  p.n_max = start_n_max(rc);
  p.n_max_escalation = rc.recipe.n_max_escalation.value_or(20);
  if (rc.recipe.steady_fraction) p.steady_fraction = *rc.recipe.steady_fraction;
  p.observe_site = first_oscillator(rc.chain);
  return p;
}

std::vector<SpectrumPoint> spectrum_scan(const RunConfig& rc, unsigned threads, Warnings* warnings) {
  if (!rc.recipe.values || rc.recipe.values->empty()) throw ValidationError("fig2-spectrum: recipe.values is required");
  const auto& values = *rc.recipe.values;
  const std::size_t site = first_oscillator(rc.chain);
  const SpectrumWindow window = window_of(rc);
  const double tail_from = rc.integration.t_end * (1.0 - rc.recipe.steady_fraction.value_or(0.1));
  std::vector<SpectrumPoint> out(values.size());
  std::vector<Warnings> local(values.size());
  parallel_for(values.size(), threads, [&](std::size_t i) {
    SpectrumPoint& pt = out[i];
    pt.value = values[i];
    try {
      ChainConfig cfg = rc.chain;
      cfg.bonds.at(0).j_amp = values[i];
      int n_max = start_n_max(rc);
      const int esc = rc.recipe.n_max_escalation.value_or(20);
      for (int attempt = 0; attempt < 2; ++attempt) {
        set_n_max(cfg, n_max);
        const bool last = attempt == 1 || esc == 0;
        const SpaceLayout layout = chain_layout(cfg);
        const auto h = effective_schedule(ResonanceCase::CaseI, cfg, layout, &local[i]);
        const auto d = build_dissipators(cfg, layout);
        const IntegrationSpec spec = fit_step(effective_spec(rc.integration), Liouvillian(h, d, Frame::Interaction).bandwidth());
        const std::string key = "n" + std::to_string(site + 1);
        IntegrateOptions opts;
        opts.abort_on_truncation = !last;
        opts.warnings = &local[i];
        const auto rec = integrate(chain_initial_state(cfg, layout), h, d, spec, {{key, chain_probes(cfg, layout).at(key)}}, opts);
        pt.n_max = n_max;
        pt.truncated = rec.truncation_flagged || rec.aborted;
        if (pt.truncated && !last) {
          n_max += esc;
          continue;
        }
        pt.n_ss = mean_tail(rec.times, rec.real(key), tail_from);
        pt.spectrum = power_spectrum(cfg, ResonanceCase::CaseI, rec.final_state, window, site);
        break;
      }
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
  });
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (const auto& w : local[i]) warn(warnings, "J = " + format_number(values[i]) + ": " + w);
    if (out[i].error) warn(warnings, "J = " + format_number(values[i]) + " failed: " + *out[i].error);
  }
  return out;
}

OscillatorPortrait oscillator_portrait(const DensityMatrix& state, const ChainConfig& config, std::size_t site,
                                       int grid_points, Warnings* warnings) {
  const auto slots = oscillator_slots(config);
  if (site >= slots.size() || !slots[site]) throw ValidationError("portrait: site has no oscillator");
  const DensityMatrix osc = partial_trace(state, {*slots[site]});
  const int n_max = static_cast<int>(osc.layout[0].dim) - 1;
  OscillatorPortrait p;
  p.grid = wigner(osc, GridSpec::for_truncation(n_max, grid_points), warnings);
  p.ring_score = ring_symmetry_score(p.grid);
  const Matrix b = annihilation(n_max);
  p.b_mean = (b * osc.matrix).trace();
  p.n_mean = (b.adjoint() * b * osc.matrix).trace().real();
  return p;
}

MeanFieldRecord array_run(const RunConfig& rc, Warnings* warnings) {
  MeanFieldInit init;
  init.seed_amplitude = rc.recipe.seed_amplitude.value_or(0.1);
  init.n0 = rc.recipe.n0.value_or(rc.chain.nbar_mech);
  return integrate_meanfield(meanfield_initial_state(rc.chain, init), rc.chain, rc.integration, warnings);
}

LocalDriveDynamics local_drive_dynamics(const RunConfig& rc, Warnings* warnings) {
  LocalDriveDynamics out;
  out.drive = drive_of(rc);
  ChainConfig cfg = rc.chain;
  set_n_max(cfg, start_n_max(rc));
  const SpaceLayout layout = local_drive_layout(cfg);
  const auto h = local_drive_schedule(cfg, out.drive);
  const auto d = build_dissipators(cfg, layout);
  const auto rho0 = chain_initial_state(cfg, layout);
  const auto probes = chain_probes(cfg, layout);
  IntegrateOptions opts;
  opts.warnings = warnings;
  out.full = integrate(rho0, h, d, fit_step(rc.integration, Liouvillian(h, d, Frame::Interaction).bandwidth()), probes, opts);
  const auto heff = constant_schedule(floquet_effective(ResonanceCase::CaseI, cfg, out.drive));
  out.effective = integrate(rho0, heff, d, effective_spec(rc.integration), probes, opts);
  return out;
}

void check_recipe(const std::string& name, const RunConfig& rc, Warnings* warnings) {
  require_known(name);
  validate(rc.chain, warnings);
  if (name == "fig3-array" || name == "figS2-array") {
    double f_max = 0.0;
    for (const auto& s : rc.chain.sites) f_max = std::max({f_max, std::abs(s.delta), s.omega_m});
    for (const auto& b : rc.chain.bonds) f_max = std::max(f_max, std::abs(b.big_omega));
    validate(rc.integration, f_max);
    meanfield_initial_state(rc.chain, {rc.recipe.seed_amplitude.value_or(0.1), rc.recipe.n0.value_or(rc.chain.nbar_mech), {}});
    return;
  }
  validate(rc.integration, 0.0);
  if (name == "fig2-omega-scan" || name == "fig2-threshold" || name == "figS3-localdrive") {
    const SweepPlan p = scan_plan(name, rc);
    p.validate();
    for (double v : p.values) {
      ChainConfig cfg = rc.chain;
      LocalDriveParams drive = p.drive;
      apply_target(p.target, v, cfg, drive);
      if (p.eps0_follows_nu && p.experiment == Experiment::LocalDrive) drive.eps0 = default_eps0(drive.nu);
      validate(cfg, warnings);
      if (p.experiment == Experiment::LocalDrive) local_drive_schedule(cfg, drive);
    }
    if (name == "figS3-localdrive") floquet_effective(ResonanceCase::CaseI, rc.chain, drive_of(rc));
    return;
  }
  const ResonanceCase which = name == "figS1-phaselocked" ? ResonanceCase::CaseII : ResonanceCase::CaseI;
  ChainConfig cfg = rc.chain;
  set_n_max(cfg, std::min(start_n_max(rc), 2));  // generator structure only
  const SpaceLayout layout = chain_layout(cfg);
  effective_schedule(which, cfg, layout, warnings);
  if (name == "fig2-spectrum") {
    if (!rc.recipe.values || rc.recipe.values->empty()) throw ValidationError("fig2-spectrum: recipe.values is required");
    const auto w = window_of(rc);
    if (!(w.dtau > 0.0)) throw ValidationError("recipe.dtau must be positive");
  }
}

RecipeResult run_recipe(const std::string& name, const RunConfig& rc, const fs::path& out_dir, unsigned threads,
                        Warnings* warnings) {
  check_recipe(name, rc, warnings);
  fs::create_directories(out_dir);
  RecipeResult res;
  auto file = [&](const std::string& f) {
    res.files.push_back(out_dir / f);
    return out_dir / f;
  };

  if (name == "fig2-dynamics" || name == "figS1-phaselocked" || name == "fig2-wigner") {
    const bool locked = name == "figS1-phaselocked";
    const auto dyn = minimal_dynamics(rc, locked ? ResonanceCase::CaseII : ResonanceCase::CaseI, warnings);
    const std::size_t site = first_oscillator(rc.chain);
    const std::size_t n_sites = rc.chain.sites.size();
    ChainConfig cfg = rc.chain;
    set_n_max(cfg, dyn.n_max);
    res.truncated = dyn.truncated;
    res.summary["n_max"] = dyn.n_max;
    res.summary["max_rel_dev"] = dyn.runs.max_rel_dev;
    const auto& full = dyn.runs.record_full;
    const std::string k = std::to_string(site + 1);
    const auto n = full.real("n" + k);
    const auto nn = full.real("nn" + k);
    res.summary["n_final"] = n.back();
    res.summary["g2_initial"] = opt(ratio(nn.front(), n.front()));
    res.summary["g2_final"] = opt(ratio(nn.back(), n.back()));
    if (name != "fig2-wigner") {
      write_minimal_series(file("timeseries.csv"), full, site, n_sites, locked);
      write_minimal_series(file("effective.csv"), dyn.runs.record_eff, site, n_sites, locked);
    }
    if (name != "fig2-dynamics") {
      const bool eff = rc.recipe.effective.value_or(false);
      const auto portrait = oscillator_portrait(eff ? dyn.runs.record_eff.final_state : full.final_state, cfg, site,
                                                rc.recipe.grid_points.value_or(201), warnings);
      write_wigner(file("wigner.csv"), portrait.grid);
      res.summary["ring_score"] = opt(portrait.ring_score);
      res.summary["b_abs"] = std::abs(portrait.b_mean);
      res.summary["b_ratio"] = portrait.n_mean > 0.0 ? std::abs(portrait.b_mean) / std::sqrt(portrait.n_mean) : kNaN;
      res.summary["wigner_mass"] = portrait.grid.integral();
    }
  } else if (name == "fig2-omega-scan" || name == "fig2-threshold") {
    const SweepPlan plan = scan_plan(name, rc);
    const auto r = run_sweep(plan, rc.chain, threads, warnings);
    const std::string key = name == "fig2-omega-scan" ? "big_omega" : "j_amp";
    res.summary = scan_summary(r, key);
    if (name == "fig2-threshold") {
      const auto& n_ss = r.outputs().at("n_ss");
      std::vector<double> norm(n_ss.size(), kNaN);
      try {
        norm = minmax_normalize(n_ss);
      } catch (const ValidationError& e) {
        warn(warnings, e.what());
      }
      write_scan(file("threshold.csv"), key, r, {{"n_norm", norm}});
      res.summary["half_crossing"] = half_crossing(r.values, norm);
    } else {
      write_scan(file("scan.csv"), key, r);
    }
    for (const auto& p : r.points) res.truncated = res.truncated || p.truncated;
  } else if (name == "figS3-localdrive") {
    const SweepPlan plan = scan_plan(name, rc);
    const auto r = run_sweep(plan, rc.chain, threads, warnings);
    std::vector<double> eps0;
    for (double v : r.values) eps0.push_back(plan.eps0_follows_nu ? default_eps0(v) : plan.drive.eps0);
    write_scan(file("scan.csv"), "nu", r, {{"eps0", eps0}});
    res.summary = scan_summary(r, "nu");
    for (const auto& p : r.points) res.truncated = res.truncated || p.truncated;
    const auto dyn = local_drive_dynamics(rc, warnings);
    const std::size_t site = first_oscillator(rc.chain);
    write_minimal_series(file("timeseries.csv"), dyn.full, site, rc.chain.sites.size(), false);
    write_minimal_series(file("effective.csv"), dyn.effective, site, rc.chain.sites.size(), false);
    res.truncated = res.truncated || dyn.full.truncation_flagged;
  } else if (name == "fig2-spectrum") {
    const auto pts = spectrum_scan(rc, threads, warnings);
    std::vector<std::vector<double>> spec_rows, line_rows;
    for (const auto& p : pts) {
      res.truncated = res.truncated || p.truncated;
      if (!p.spectrum) {
        line_rows.push_back({p.value, p.n_ss, kNaN, kNaN, kNaN, static_cast<double>(p.n_max)});
        continue;
      }
      const auto& s = *p.spectrum;
      for (std::size_t i = 0; i < s.omegas.size(); ++i) spec_rows.push_back({p.value, s.omegas[i], s.s_values[i]});
      line_rows.push_back({p.value, p.n_ss, s.fwhm, s.c0, s.parseval_ratio, static_cast<double>(p.n_max)});
    }
    write_csv(file("spectrum.csv"), {"j_amp", "omega", "S"}, spec_rows);
    write_csv(file("linewidth.csv"), {"j_amp", "n_ss", "fwhm", "c0", "parseval_ratio", "n_max"}, line_rows);
  } else {  // mean-field arrays
    const auto rec = array_run(rc, warnings);
    write_array_series(file("timeseries.csv"), rec);
    json finals = json::array();
    for (const auto& n : rec.n) finals.push_back(n.back());
    res.summary["n_final"] = finals;
    res.summary["r_K_final"] = rec.sync.r_k.empty() ? kNaN : opt(rec.sync.r_k.back());
    res.summary["max_conjugacy_error"] = rec.max_conjugacy_error;
    res.summary["n2_breaches"] = rec.n2_breaches;
  }
  return res;
}

SweepJob parse_sweep_job(const json& doc, const fs::path& relative_to) {
  if (!doc.is_object()) throw ValidationError("sweep file: expected an object");
  static const std::vector<std::string> keys = {"experiment", "target", "values", "base", "config", "out", "threads",
                                                "n_max", "n_max_escalation", "effective", "fit_step",
                                                "steady_fraction", "steady_tol", "observe_site", "nu", "eps0",
                                                "spectrum", "dtau", "tau_max", "omega_span"};
  for (const auto& [key, value] : doc.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ValidationError("unknown key '" + key + "' in sweep file");
  for (const char* key : {"experiment", "target", "values"})
    if (!doc.contains(key)) throw ValidationError(std::string("sweep file: '") + key + "' is required");
  auto number = [&](const char* key) {
    if (!doc.at(key).is_number()) throw ValidationError(std::string("sweep file: ") + key + " must be a number");
    return doc.at(key).get<double>();
  };
  auto integer = [&](const char* key) {
    if (!doc.at(key).is_number_integer()) throw ValidationError(std::string("sweep file: ") + key + " must be an integer");
    return doc.at(key).get<int>();
  };
  auto boolean = [&](const char* key) {
    if (!doc.at(key).is_boolean()) throw ValidationError(std::string("sweep file: ") + key + " must be true or false");
    return doc.at(key).get<bool>();
  };
  auto text = [&](const char* key) {
    if (!doc.at(key).is_string()) throw ValidationError(std::string("sweep file: ") + key + " must be a string");
    return doc.at(key).get<std::string>();
  };

  SweepJob job;
  SweepPlan& p = job.plan;
  p.experiment = experiment_from_string(text("experiment"));
  p.target = text("target");
  if (!doc["values"].is_array()) throw ValidationError("sweep file: values must be an array of numbers");
  for (const auto& v : doc["values"]) {
    if (!v.is_number()) throw ValidationError("sweep file: values must be an array of numbers");
    p.values.push_back(v.get<double>());
  }
  if (doc.contains("base")) {
    job.base = text("base");
    job.config = recipe_defaults(job.base);
  } else {
    job.config.integration = quantum_spec();
  }
  if (doc.contains("config")) job.config = parse_config(doc["config"], job.config);
  else validate(job.config.chain);
  p.spec = job.config.integration;
  p.fit_step = p.experiment != Experiment::MeanFieldArray;
  if (doc.contains("fit_step")) p.fit_step = boolean("fit_step");
  if (doc.contains("n_max")) p.n_max = integer("n_max");
  if (doc.contains("n_max_escalation")) p.n_max_escalation = integer("n_max_escalation");
  if (doc.contains("effective")) p.effective = boolean("effective");
  if (doc.contains("steady_fraction")) p.steady_fraction = number("steady_fraction");
  if (doc.contains("steady_tol")) p.steady_tol = number("steady_tol");
  if (doc.contains("observe_site")) p.observe_site = static_cast<std::size_t>(integer("observe_site"));
  p.drive.nu = doc.contains("nu") ? number("nu") : 2.0;
  p.eps0_follows_nu = !doc.contains("eps0");
  p.drive.eps0 = doc.contains("eps0") ? number("eps0") : default_eps0(p.drive.nu);
  if (doc.contains("spectrum")) p.spectrum = boolean("spectrum");
  if (doc.contains("dtau")) p.window.dtau = number("dtau");
  if (doc.contains("tau_max")) p.window.tau_max = number("tau_max");
  if (doc.contains("omega_span")) p.window.omega_span = number("omega_span");
  if (doc.contains("threads")) job.threads = static_cast<unsigned>(std::max(1, integer("threads")));
  job.out_dir = doc.contains("out") ? fs::path(text("out")) : fs::path("sweep-out");
  if (job.out_dir.is_relative() && !relative_to.empty()) job.out_dir = relative_to / job.out_dir;
  p.validate();
  return job;
}

RecipeResult run_sweep_job(const SweepJob& job, Warnings* warnings) {
  fs::create_directories(job.out_dir);
  const auto r = run_sweep(job.plan, job.config.chain, job.threads, warnings);
  const auto out = r.outputs();
  const std::vector<std::string> cols = {"n_ss", "g2_ss", "converged", "truncated", "n_max", "fwhm"};
  std::vector<std::string> header = {"value"};
  header.insert(header.end(), cols.begin(), cols.end());
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    std::vector<double> row = {r.values[i]};
    for (const auto& c : cols) row.push_back(out.at(c)[i]);
    rows.push_back(std::move(row));
  }
  RecipeResult res;
  res.files.push_back(job.out_dir / "sweep.csv");
  write_csv(res.files.back(), header, rows);
  res.summary = scan_summary(r, "value");
  for (const auto& p : r.points) res.truncated = res.truncated || p.truncated;
  return res;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);  // folds −0 into 0
  return buf;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw DimensionError("csv row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

}  // namespace phl
