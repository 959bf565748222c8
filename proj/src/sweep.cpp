#include "phl/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>

#include "phl/meanfield.hpp"

namespace phl {

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::MinimalCase1: return "minimal-case1";
    case Experiment::MinimalCase2: return "minimal-case2";
    case Experiment::LocalDrive: return "localdrive";
    case Experiment::MeanFieldArray: return "meanfield-array";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& name) {
  for (auto e : {Experiment::MinimalCase1, Experiment::MinimalCase2, Experiment::LocalDrive, Experiment::MeanFieldArray})
    if (to_string(e) == name) return e;
  throw ValidationError("unknown experiment '" + name +
                        "' (expected minimal-case1, minimal-case2, localdrive or meanfield-array)");
}

namespace {

const std::regex kIndexed(R"(^(sites|bonds)\[(\d+)\]\.([a-z_]+)$)");
const std::regex kPlain(R"(^(drive\.nu|drive\.eps0|gamma_spin|gamma_mech|nbar_spin|nbar_mech)$)");

struct Run {
  std::vector<double> times, n, nn;
  bool truncated = false;
  DensityMatrix final_state;
};

double mean_tail(const std::vector<double>& t, const std::vector<double>& v, double from) {
  double s = 0.0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (t[i] >= from) s += v[i], ++c;
  return c ? s / c : std::numeric_limits<double>::quiet_NaN();
}

std::size_t pick_site(const ChainConfig& cfg, std::size_t wanted) {
  const auto slots = oscillator_slots(cfg);
  if (wanted < slots.size() && slots[wanted]) return wanted;
  for (std::size_t j = 0; j < slots.size(); ++j)
    if (slots[j]) return j;
  throw ValidationError("sweep: configuration has no oscillator");
}

Run run_quantum(const SweepPlan& plan, const ChainConfig& cfg, const LocalDriveParams& drive, bool effective,
                std::size_t site, bool abort, Warnings* warnings) {
  const bool local = plan.experiment == Experiment::LocalDrive;
  const SpaceLayout layout = local ? local_drive_layout(cfg) : chain_layout(cfg);
  const ResonanceCase which =
      plan.experiment == Experiment::MinimalCase2 ? ResonanceCase::CaseII : ResonanceCase::CaseI;
  const HamiltonianSchedule h = local ? local_drive_schedule(cfg, drive)
                                : effective ? effective_schedule(which, cfg, layout, warnings)
                                            : full_schedule(cfg, layout);
  const DissipatorSet d = build_dissipators(cfg, layout);
  IntegrationSpec spec = plan.spec;
  if (plan.fit_step) spec = fit_step(spec, Liouvillian(h, d, Frame::Interaction).bandwidth());
  if (effective && !local) spec = effective_spec(spec);

  const std::string n_key = "n" + std::to_string(site + 1), nn_key = "nn" + std::to_string(site + 1);
  const auto probes = chain_probes(cfg, layout);
  IntegrateOptions opts;
  opts.abort_on_truncation = abort;
  opts.warnings = warnings;
  auto rec = integrate(chain_initial_state(cfg, layout), h, d, spec, {{n_key, probes.at(n_key)}, {nn_key, probes.at(nn_key)}},
                       opts);
  return {rec.times, rec.real(n_key), rec.real(nn_key), rec.truncation_flagged || rec.aborted, rec.final_state};
}

void set_n_max(ChainConfig& cfg, int n_max) {
  for (auto& s : cfg.sites) s.n_max = n_max;
}

}  // namespace

void SweepPlan::validate() const {
  if (values.empty()) throw ValidationError("sweep: plan has no values");
  const bool up = values.size() < 2 || values[1] > values[0];
  for (std::size_t i = 1; i < values.size(); ++i)
    if (up ? !(values[i] > values[i - 1]) : !(values[i] < values[i - 1]))
      throw ValidationError("sweep: values must be strictly monotone");
  if (!std::regex_match(target, kIndexed) && !std::regex_match(target, kPlain))
    throw ValidationError("sweep: unknown target '" + target + "'");
  if (!(steady_fraction > 0.0 && steady_fraction < 1.0)) throw ValidationError("sweep: steady_fraction must be in (0, 1)");
  if (n_max < 0 || n_max_escalation < 0) throw ValidationError("sweep: n_max settings must be nonnegative");
  if (spectrum && (experiment == Experiment::LocalDrive || experiment == Experiment::MeanFieldArray))
    throw ValidationError("sweep: spectra are available for the minimal-chain experiments only");
}

void apply_target(const std::string& target, double value, ChainConfig& config, LocalDriveParams& drive) {
  std::smatch m;
  if (std::regex_match(target, m, kIndexed)) {
    const std::size_t idx = std::stoul(m[2]);
    const std::string field = m[3];
    if (m[1] == "sites") {
      if (idx >= config.sites.size()) throw ValidationError("sweep: " + target + " is out of range");
      auto& s = config.sites[idx];
      if (field == "delta") s.delta = value;
      else if (field == "omega_m") s.omega_m = value;
      else if (field == "lambda") s.lambda = value;
      else if (field == "n_max") s.n_max = static_cast<int>(std::lround(value));
      else throw ValidationError("sweep: unknown site field '" + field + "'");
    } else {
      if (idx >= config.bonds.size()) throw ValidationError("sweep: " + target + " is out of range");
      auto& b = config.bonds[idx];
      if (field == "j_amp") b.j_amp = value;
      else if (field == "big_omega") b.big_omega = value;
      else throw ValidationError("sweep: unknown bond field '" + field + "'");
    }
    return;
  }
  if (target == "drive.nu") drive.nu = value;
  else if (target == "drive.eps0") drive.eps0 = value;
  else if (target == "gamma_spin") config.gamma_spin = value;
  else if (target == "gamma_mech") config.gamma_mech = value;
  else if (target == "nbar_spin") config.nbar_spin = value;
  else if (target == "nbar_mech") config.nbar_mech = value;
  else throw ValidationError("sweep: unknown target '" + target + "'");
}

IntegrationSpec fit_step(const IntegrationSpec& spec, double f_max) {
  IntegrationSpec out = spec;
  if (!(f_max > 0.0)) return out;
  const double ceiling = 2.0 * std::acos(-1.0) / (spec.points_per_period * f_max);
  if (spec.dt <= ceiling) return out;
  const double interval = spec.dt * spec.sample_every;
  const int sub = static_cast<int>(std::ceil(interval / ceiling - 1e-9));
  out.dt = interval / sub;
  out.sample_every = sub;
  out.hermitize_every = std::max(1, static_cast<int>(std::lround(spec.hermitize_every * spec.dt / out.dt)));
  return out;
}

PointResult run_point(const SweepPlan& plan, const ChainConfig& base, double value, Warnings* warnings) {
  PointResult out;
  try {
    ChainConfig cfg = base;
    LocalDriveParams drive = plan.drive;
    apply_target(plan.target, value, cfg, drive);
    if (plan.experiment == Experiment::LocalDrive && plan.eps0_follows_nu) drive.eps0 = default_eps0(drive.nu);
    validate(cfg, warnings);
    const std::size_t site = plan.experiment == Experiment::MeanFieldArray ? plan.observe_site
                                                                           : pick_site(cfg, plan.observe_site);
    const double tail_from = plan.spec.t_end * (1.0 - plan.steady_fraction);

    if (plan.experiment == Experiment::MeanFieldArray) {
      if (site >= cfg.sites.size()) throw ValidationError("sweep: observe_site is out of range");
      const auto rec = integrate_meanfield(meanfield_initial_state(cfg), cfg, plan.spec, warnings);
      out.n_ss = mean_tail(rec.times, rec.n[site], tail_from);
      double lo = std::numeric_limits<double>::infinity(), hi = -lo, g_sum = 0.0;
      std::size_t g_count = 0;
      for (std::size_t k = 0; k < rec.times.size(); ++k) {
        if (rec.times[k] < tail_from) continue;
        lo = std::min(lo, rec.n[site][k]);
        hi = std::max(hi, rec.n[site][k]);
        if (rec.g2[site][k]) g_sum += *rec.g2[site][k], ++g_count;
      }
      if (g_count) out.g2_ss = g_sum / g_count;
      out.converged = hi - lo <= plan.steady_tol * std::abs(out.n_ss);
      return out;
    }

    int n_max = plan.n_max;
    if (n_max == 0)
      for (const auto& s : cfg.sites) n_max = std::max(n_max, s.n_max);
    Run run;
    for (int attempt = 0; attempt < 2; ++attempt) {
      set_n_max(cfg, n_max);
      const bool last = attempt == 1 || plan.n_max_escalation == 0;
      run = run_quantum(plan, cfg, drive, plan.effective, site, !last, warnings);
      if (!run.truncated || last) break;
      n_max += plan.n_max_escalation;
    }
    out.n_max = n_max;
    out.truncated = run.truncated;
    out.n_ss = mean_tail(run.times, run.n, tail_from);
    const double nn = mean_tail(run.times, run.nn, tail_from);
    if (out.n_ss > 1e-9) out.g2_ss = nn / (out.n_ss * out.n_ss);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k = 0; k < run.times.size(); ++k)
      if (run.times[k] >= tail_from) lo = std::min(lo, run.n[k]), hi = std::max(hi, run.n[k]);
    out.converged = !run.truncated && hi - lo <= plan.steady_tol * std::abs(out.n_ss);

    if (plan.spectrum) {
      const ResonanceCase which =
          plan.experiment == Experiment::MinimalCase2 ? ResonanceCase::CaseII : ResonanceCase::CaseI;
      const DensityMatrix rho_ss =
          plan.effective ? run.final_state : run_quantum(plan, cfg, drive, true, site, false, warnings).final_state;
      if (const auto s = power_spectrum(cfg, which, rho_ss, plan.window, site)) out.fwhm = s->fwhm;
    }
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

SweepResult run_sweep(const SweepPlan& plan, const ChainConfig& base, unsigned threads, Warnings* warnings) {
  plan.validate();
  const std::size_t n = plan.values.size();
  SweepResult res;
  res.values = plan.values;
  res.points.resize(n);
  std::vector<Warnings> local(n);
  parallel_for(n, threads, [&](std::size_t i) { res.points[i] = run_point(plan, base, plan.values[i], &local[i]); });
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& w : local[i]) warn(warnings, "point " + std::to_string(i) + ": " + w);
    if (res.points[i].error) warn(warnings, "point " + std::to_string(i) + " failed: " + *res.points[i].error);
  }
  return res;
}

std::map<std::string, std::vector<double>> SweepResult::outputs() const {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, std::vector<double>> out;
  for (const auto& p : points) {
    const bool ok = !p.error;
    out["n_ss"].push_back(ok ? p.n_ss : nan);
    out["g2_ss"].push_back(p.g2_ss.value_or(nan));
    out["converged"].push_back(ok && p.converged ? 1.0 : 0.0);
    out["truncated"].push_back(p.truncated ? 1.0 : 0.0);
    out["n_max"].push_back(p.n_max);
    out["fwhm"].push_back(p.fwhm.value_or(nan));
  }
  return out;
}

}  // namespace phl
