#include "phl/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace phl {

DissipatorSet build_dissipators(const ChainConfig& config, const SpaceLayout& layout) {
  const auto& s = spin_ops();
  DissipatorSet d;
  std::size_t spins = 0;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (layout[k].kind == SubsystemKind::Spin) {
      ++spins;
      d.channels.push_back({embed(s.minus, k, layout), config.gamma_spin * (1.0 + config.nbar_spin)});
      d.channels.push_back({embed(s.plus, k, layout), config.gamma_spin * config.nbar_spin});
    } else {
      const Matrix b = annihilation(static_cast<int>(layout[k].dim) - 1);
      d.channels.push_back({embed(b, k, layout), config.gamma_mech * (1.0 + config.nbar_mech)});
      d.channels.push_back({embed(b.adjoint(), k, layout), config.gamma_mech * config.nbar_mech});
    }
  }
  if (spins != config.size()) throw DimensionError("dissipators: layout spin count does not match the chain");
  return d;
}

const std::vector<cplx>& TrajectoryRecord::at(const std::string& key) const {
  auto it = observables.find(key);
  if (it == observables.end()) throw ValidationError("trajectory has no observable '" + key + "'");
  return it->second;
}

std::vector<double> TrajectoryRecord::real(const std::string& key) const {
  const auto& v = at(key);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

DensityMatrix rhs(const DensityMatrix& rho, const Operator& h, const DissipatorSet& d) {
  if (!(rho.layout == h.layout)) throw DimensionError("rhs: Hamiltonian layout mismatch");
  const cplx i(0.0, 1.0);
  Matrix out = -i * (h.matrix * rho.matrix - rho.matrix * h.matrix);
  for (const auto& c : d.channels) {
    if (!(c.jump.layout == rho.layout)) throw DimensionError("rhs: jump operator layout mismatch");
    if (c.rate == 0.0) continue;
    const Matrix& l = c.jump.matrix;
    const Matrix ldl = l.adjoint() * l;
    out += c.rate * (l * rho.matrix * l.adjoint() - 0.5 * (ldl * rho.matrix + rho.matrix * ldl));
  }
  return {rho.layout, std::move(out)};
}

Liouvillian::Liouvillian(const HamiltonianSchedule& schedule, const DissipatorSet& dissipators, Frame frame,
                         Warnings* warnings)
    : frame_(frame), dim_(static_cast<Eigen::Index>(schedule.layout.total_dim())) {
  const SpaceLayout& layout = schedule.layout;
  for (const auto& c : dissipators.channels) {
    if (!(c.jump.layout == layout)) throw DimensionError("dissipator layout does not match the Hamiltonian");
    if (c.rate < 0.0) throw ValidationError("dissipation rate must be nonnegative");
    if (c.rate == 0.0) continue;
    jumps_.emplace_back(BandedOperator::from_dense(c.jump.matrix, layout), c.rate);
  }
  if (frame_ == Frame::Interaction) {
    // Frame invariance of L ρ L† needs every jump operator to shift levels in one fixed way.
    for (const auto& [op, rate] : jumps_)
      if (op.bands.size() > 1) {
        warn(warnings, "jump operator mixes level changes; integrating in the laboratory frame");
        frame_ = Frame::Lab;
        break;
      }
  }
  schedule_ = frame_ == Frame::Lab ? schedule.lab_form() : schedule;

  levels_.assign(layout.size(), Eigen::VectorXd());
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const auto& r = schedule_.rotations[k];
    if (r.rate == 0.0 && r.mod_amp == 0.0) continue;
    levels_[k].resize(dim_);
    for (Eigen::Index a = 0; a < dim_; ++a)
      levels_[k](a) = subsystem_level(layout[k], layout.local_index(static_cast<std::size_t>(a), k));
  }

  std::map<Eigen::Index, DriveBand> by_offset;
  auto touch = [&](const Band& b) -> DriveBand& {
    auto [it, inserted] = by_offset.try_emplace(b.offset);
    DriveBand& db = it->second;
    if (inserted) {
      db.offset = b.offset;
      db.first = b.first;
      db.len = b.len();
      db.level_change = b.level_change;
      db.constant = Eigen::VectorXcd::Zero(b.len());
    } else {
      const Eigen::Index first = std::min(db.first, b.first);
      const Eigen::Index last = std::max(db.first + db.len, b.first + b.len());
      if (first != db.first || last != db.first + db.len) {
        Eigen::VectorXcd c = Eigen::VectorXcd::Zero(last - first);
        c.segment(db.first - first, db.len) = db.constant;
        for (auto& p : db.parts) p.first += db.first - first;
        db.constant = std::move(c);
        db.first = first;
        db.len = last - first;
      }
    }
    return db;
  };
  const cplx minus_i(0.0, -1.0);
  for (std::size_t ti = 0; ti < schedule_.terms.size(); ++ti) {
    const auto& term = schedule_.terms[ti];
    if (!(term.op.layout == layout)) throw DimensionError("Hamiltonian term layout mismatch");
    const BandedOperator bo = BandedOperator::from_dense(term.op.matrix, layout);
    for (const auto& b : bo.bands) {
      DriveBand& db = touch(b);
      bool rotates = false;
      for (std::size_t k = 0; k < layout.size(); ++k)
        if (b.level_change[k] != 0.0 && levels_[k].size() > 0) rotates = true;
      if (!rotates && term.coeff.freq == 0.0)
        db.constant.segment(b.first - db.first, b.len()) += minus_i * term.coeff.amplitude * b.values;
      else
        db.parts.push_back({ti, b.first - db.first, b.values});
    }
  }
  for (const auto& [op, rate] : jumps_) {
    const Matrix k = rate * (op.to_dense().adjoint() * op.to_dense());
    const BandedOperator kb = BandedOperator::from_dense(k, layout);
    for (const auto& b : kb.bands) {
      DriveBand& db = touch(b);
      db.constant.segment(b.first - db.first, b.len()) += -0.5 * b.values;
    }
  }
  for (auto& [offset, db] : by_offset) bands_.push_back(std::move(db));
  band_values_.resize(bands_.size());
  y_.resize(dim_, dim_);
}

double Liouvillian::band_phase(const std::vector<double>& level_change, double t) const {
  double phi = 0.0;
  for (std::size_t k = 0; k < level_change.size(); ++k)
    if (level_change[k] != 0.0 && levels_[k].size() > 0) phi += level_change[k] * schedule_.rotations[k].phase(t);
  return phi;
}

void Liouvillian::apply(double t, const Matrix& x, Matrix& out, bool hermitian) const {
  std::vector<cplx> coeff(schedule_.terms.size());
  for (std::size_t ti = 0; ti < coeff.size(); ++ti) coeff[ti] = cplx(0.0, -1.0) * schedule_.terms[ti].coeff(t);

  y_.setZero();
  for (std::size_t bi = 0; bi < bands_.size(); ++bi) {
    const DriveBand& db = bands_[bi];
    Eigen::VectorXcd& v = band_values_[bi];
    v = db.constant;
    if (!db.parts.empty()) {
      const cplx rot = std::polar(1.0, band_phase(db.level_change, t));
      for (const auto& p : db.parts) v.segment(p.first, p.values.size()) += (coeff[p.term] * rot) * p.values;
    }
    band_left(db.offset, db.first, v, x, y_);
  }
  if (hermitian) {
    out = y_ + y_.adjoint();
  } else {
    out = y_;
    for (std::size_t bi = 0; bi < bands_.size(); ++bi)
      band_right_adjoint(bands_[bi].offset, bands_[bi].first, band_values_[bi], x, out);
  }
  for (const auto& [op, rate] : jumps_)
    for (const auto& a : op.bands)
      for (const auto& b : op.bands) band_sandwich(a, b, rate, x, out);
}

Eigen::VectorXd Liouvillian::frame_phases(double t) const {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(dim_);
  for (std::size_t k = 0; k < levels_.size(); ++k)
    if (levels_[k].size() > 0) phi += schedule_.rotations[k].phase(t) * levels_[k];
  return phi;
}

Matrix Liouvillian::to_lab(double t, const Matrix& x) const {
  if (frame_ == Frame::Lab) return x;
  const Eigen::VectorXd phi = frame_phases(t);
  Eigen::VectorXcd u(dim_);
  for (Eigen::Index a = 0; a < dim_; ++a) u(a) = std::polar(1.0, -phi(a));
  return u.asDiagonal() * x * u.conjugate().asDiagonal();
}

Matrix Liouvillian::from_lab(double t, const Matrix& x) const {
  if (frame_ == Frame::Lab) return x;
  const Eigen::VectorXd phi = frame_phases(t);
  Eigen::VectorXcd u(dim_);
  for (Eigen::Index a = 0; a < dim_; ++a) u(a) = std::polar(1.0, phi(a));
  return u.asDiagonal() * x * u.conjugate().asDiagonal();
}

cplx Liouvillian::expectation(const BandedOperator& op, double t, const Matrix& x) const {
  cplx total = 0.0;
  for (const auto& b : op.bands) {
    cplx s = 0.0;
    for (Eigen::Index k = 0; k < b.len(); ++k) s += b.values(k) * x(b.first + k + b.offset, b.first + k);
    if (frame_ == Frame::Interaction) s *= std::polar(1.0, band_phase(b.level_change, t));
    total += s;
  }
  return total;
}

double Liouvillian::bandwidth() const {
  double f = 0.0;
  for (const auto& db : bands_) {
    if (db.parts.empty()) continue;
    double rate = 0.0, mod = 0.0;
    for (std::size_t k = 0; k < db.level_change.size(); ++k) {
      if (levels_[k].size() == 0) continue;
      rate += db.level_change[k] * schedule_.rotations[k].rate;
      mod += std::abs(db.level_change[k] * schedule_.rotations[k].mod_amp);
    }
    double coeff_freq = 0.0;
    for (const auto& p : db.parts) coeff_freq = std::max(coeff_freq, std::abs(schedule_.terms[p.term].coeff.freq));
    f = std::max(f, std::abs(rate) + mod + coeff_freq);
  }
  // Level spread of the diagonal sets the fastest free rotation in the laboratory frame.
  for (const auto& db : bands_) {
    if (db.offset != 0) continue;
    Eigen::VectorXd h = -db.constant.imag();
    for (const auto& p : db.parts) {
      const auto& c = schedule_.terms[p.term].coeff;
      h.segment(p.first, p.values.size()) += (std::abs(c.amplitude) * p.values.cwiseAbs()).eval();
    }
    if (h.size() > 0) f = std::max(f, h.maxCoeff() - h.minCoeff());
  }
  return f;
}

void validate(const IntegrationSpec& spec, double f_max) {
  if (!(spec.dt > 0.0) || !std::isfinite(spec.dt)) throw ValidationError("integration: dt must be positive");
  if (!(spec.t_end > 0.0) || !std::isfinite(spec.t_end)) throw ValidationError("integration: t_end must be positive");
  if (spec.sample_every < 1) throw ValidationError("integration: sample_every must be at least 1");
  if (spec.hermitize_every < 1) throw ValidationError("integration: hermitize_every must be at least 1");
  if (!(spec.points_per_period > 0.0)) throw ValidationError("integration: points_per_period must be positive");
  if (f_max > 0.0) {
    const double ceiling = 2.0 * std::numbers::pi / (spec.points_per_period * f_max);
    if (spec.dt > ceiling * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "integration: dt " << spec.dt << " exceeds the ceiling " << ceiling << " for f_max " << f_max;
      throw ValidationError(os.str());
    }
  }
}

namespace {

double top_population(const Matrix& x, const SpaceLayout& layout, std::vector<double>& per_osc) {
  per_osc.clear();
  double worst = 0.0;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (layout[k].kind != SubsystemKind::Oscillator) continue;
    const std::size_t top = layout[k].dim - 1;
    double pop = 0.0;
    for (std::size_t a = 0; a < layout.total_dim(); ++a)
      if (layout.local_index(a, k) + 1 >= top) pop += x(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)).real();
    per_osc.push_back(pop);
    worst = std::max(worst, pop);
  }
  return worst;
}

void guard(const Matrix& x, double t) {
  const double m = x.cwiseAbs().maxCoeff();
  if (!(m <= 1e6)) {
    std::ostringstream os;
    os << "integration diverged at t = " << t << " (max |rho| = " << m << "); reduce dt";
    throw NumericalError(os.str());
  }
}

}  // namespace

TrajectoryRecord integrate(const DensityMatrix& rho0, const HamiltonianSchedule& h, const DissipatorSet& d,
                           const IntegrationSpec& spec, const std::map<std::string, Operator>& probes,
                           const IntegrateOptions& options) {
  if (!(rho0.layout == h.layout)) throw DimensionError("integrate: initial state layout mismatch");
  rho0.validate();
  const Liouvillian lv(h, d, options.frame, options.warnings);
  validate(spec, lv.bandwidth());

  std::vector<std::pair<std::string, BandedOperator>> banded;
  for (const auto& [name, op] : probes) {
    if (!(op.layout == h.layout)) throw DimensionError("integrate: probe '" + name + "' layout mismatch");
    banded.emplace_back(name, BandedOperator::from_dense(op.matrix, h.layout));
  }

  TrajectoryRecord rec;
  const long long n_steps = std::max<long long>(1, std::llround(spec.t_end / spec.dt));
  const double dt = spec.dt;
  Matrix rho = lv.from_lab(0.0, rho0.matrix);
  Matrix acc(rho.rows(), rho.cols()), tmp(rho.rows(), rho.cols()), k(rho.rows(), rho.cols());

  auto sample = [&](double t) {
    rec.times.push_back(t);
    for (const auto& [name, op] : banded) rec.observables[name].push_back(lv.expectation(op, t, rho));
    if (options.observer) options.observer(t, DensityMatrix(h.layout, lv.to_lab(t, rho)));
  };
  sample(0.0);

  for (long long step = 1; step <= n_steps; ++step) {
    const double t0 = static_cast<double>(step - 1) * dt;
    lv.apply(t0, rho, k, true);
    acc = rho + (dt / 6.0) * k;
    tmp = rho + (dt / 2.0) * k;
    lv.apply(t0 + dt / 2.0, tmp, k, true);
    acc += (dt / 3.0) * k;
    tmp = rho + (dt / 2.0) * k;
    lv.apply(t0 + dt / 2.0, tmp, k, true);
    acc += (dt / 3.0) * k;
    tmp = rho + dt * k;
    lv.apply(t0 + dt, tmp, k, true);
    rho = acc + (dt / 6.0) * k;

    const double t = static_cast<double>(step) * dt;
    if (step % spec.hermitize_every == 0) {
      guard(rho, t);
      tmp = 0.5 * (rho + rho.adjoint());
      rho = tmp;
      if (spec.renormalize_trace) rho /= rho.trace().real();
    }
    if (step % spec.sample_every == 0) {
      guard(rho, t);
      sample(t);
      if (options.abort_on_truncation && top_population(rho, h.layout, rec.top_population) >= kTruncationThreshold) {
        rec.aborted = true;
        break;
      }
    }
  }
  const double t_final = rec.aborted ? rec.times.back() : static_cast<double>(n_steps) * dt;
  rec.final_state = DensityMatrix(h.layout, lv.to_lab(t_final, rho));
  const TruncationReport tr = check_truncation(rec.final_state);
  rec.top_population = tr.top_population;
  rec.truncation_flagged = rec.aborted || !tr.safe;
  if (rec.truncation_flagged)
    warn(options.warnings, "final state is not truncation-safe; rerun with a larger n_max");
  return rec;
}

SteadyState steady_state_detect(const TrajectoryRecord& record, const std::string& key, double window, double tol) {
  const auto& v = record.at(key);
  if (record.times.empty()) throw ValidationError("steady-state detection on an empty record");
  const double t_last = record.times.back();
  if (!(window > 0.0) || window >= t_last - record.times.front())
    throw ValidationError("steady-state window must be positive and shorter than the record");
  double re_min = 1e300, re_max = -1e300, im_min = 1e300, im_max = -1e300;
  cplx sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (record.times[i] < t_last - window) continue;
    re_min = std::min(re_min, v[i].real());
    re_max = std::max(re_max, v[i].real());
    im_min = std::min(im_min, v[i].imag());
    im_max = std::max(im_max, v[i].imag());
    sum += v[i];
    ++count;
  }
  SteadyState out;
  out.value = sum / static_cast<double>(count);
  const double spread = std::max(re_max - re_min, im_max - im_min);
  out.converged = spread <= tol * std::abs(out.value);
  return out;
}

IntegrationSpec effective_spec(const IntegrationSpec& full, double max_dt) {
  IntegrationSpec eff = full;
  int best = 1;
  for (int m = 1; m <= full.sample_every; ++m)
    if (full.sample_every % m == 0 && full.dt * m <= max_dt * (1.0 + 1e-12)) best = m;
  eff.dt = full.dt * best;
  eff.sample_every = full.sample_every / best;
  eff.hermitize_every = std::max(1, full.hermitize_every / best);
  return eff;
}

DensityMatrix chain_initial_state(const ChainConfig& config, const SpaceLayout& layout) {
  DensityMatrix rho;
  bool first = true;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    DensityMatrix part = layout[k].kind == SubsystemKind::Spin
                             ? spin_down()
                             : thermal_state(config.nbar_mech, static_cast<int>(layout[k].dim) - 1);
    rho = first ? part : tensor(rho, part);
    first = false;
  }
  return rho;
}

std::map<std::string, Operator> chain_probes(const ChainConfig& config, const SpaceLayout& layout) {
  std::map<std::string, Operator> probes;
  const auto slots = oscillator_slots(config);
  for (std::size_t j = 0; j < config.size(); ++j) {
    const std::string tag = std::to_string(j + 1);
    probes.emplace("sz_" + tag, embed(spin_ops().z, j, layout));
    if (!slots[j]) continue;
    const Matrix b = annihilation(static_cast<int>(layout[*slots[j]].dim) - 1);
    probes.emplace("n" + tag, embed(b.adjoint() * b, *slots[j], layout));
    probes.emplace("nn" + tag, embed(b.adjoint() * b.adjoint() * b * b, *slots[j], layout));
    probes.emplace("b" + tag, embed(b, *slots[j], layout));
  }
  return probes;
}

FullVsEffective compare_full_vs_effective(const ChainConfig& config, ResonanceCase which, const IntegrationSpec& spec,
                                          const IntegrateOptions& options) {
  validate(config, options.warnings);
  const SpaceLayout layout = chain_layout(config);
  const DensityMatrix rho0 = chain_initial_state(config, layout);
  const DissipatorSet d = build_dissipators(config, layout);
  const auto probes = chain_probes(config, layout);

  FullVsEffective out;
  out.record_full = integrate(rho0, full_schedule(config, layout), d, spec, probes, options);
  out.record_eff =
      integrate(rho0, effective_schedule(which, config, layout, options.warnings), d, effective_spec(spec), probes, options);

  const auto slots = oscillator_slots(config);
  const auto& tf = out.record_full.times;
  const auto& te = out.record_eff.times;
  for (std::size_t j = 0; j < config.size(); ++j) {
    if (!slots[j]) continue;
    const std::string key = "n" + std::to_string(j + 1);
    const auto& nf = out.record_full.at(key);
    const auto& ne = out.record_eff.at(key);
    std::size_t ie = 0;
    for (std::size_t i = 0; i < tf.size(); ++i) {
      if (tf[i] <= spec.t_end / 2.0) continue;
      while (ie < te.size() && te[ie] < tf[i] - 1e-9) ++ie;
      if (ie >= te.size()) break;
      if (std::abs(te[ie] - tf[i]) > 1e-6) continue;
      const double full = nf[i].real();
      out.max_rel_dev = std::max(out.max_rel_dev, std::abs(full - ne[ie].real()) / std::max(full, 0.1));
    }
  }
  return out;
}

}  // namespace phl
