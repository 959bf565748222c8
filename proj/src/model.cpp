#include "phl/model.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <string>

namespace phl {

void warn(Warnings* sink, const std::string& message) {
  if (sink)
    sink->push_back(message);
  else
    std::clog << "warning: " << message << '\n';
}

namespace {

bool finite_all(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

Matrix level_matrix(const Subsystem& s) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(s.dim), static_cast<Eigen::Index>(s.dim));
  for (std::size_t i = 0; i < s.dim; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = subsystem_level(s, i);
  return m;
}

// Embedded sigma^+_i sigma^+_j.
Operator pair_raise(std::size_t i, std::size_t j, const SpaceLayout& layout) {
  const auto& s = spin_ops();
  return embed(s.plus, i, layout) * embed(s.plus, j, layout);
}

Operator creation(std::size_t slot, const SpaceLayout& layout) {
  const int n_max = static_cast<int>(layout[slot].dim) - 1;
  return embed(annihilation(n_max).adjoint(), slot, layout);
}

void require_layout(const ChainConfig& config, const SpaceLayout& layout) {
  const std::size_t n = config.size();
  std::size_t oscillators = 0;
  for (const auto& s : config.sites)
    if (s.omega_m > 0.0) ++oscillators;
  if (layout.size() != n + oscillators)
    throw DimensionError("layout has " + std::to_string(layout.size()) + " subsystems, config needs " +
                         std::to_string(n + oscillators));
  for (std::size_t k = 0; k < n; ++k)
    if (layout[k].kind != SubsystemKind::Spin) throw DimensionError("layout must start with one spin per site");
  for (std::size_t k = n; k < layout.size(); ++k)
    if (layout[k].kind != SubsystemKind::Oscillator) throw DimensionError("layout must end with the oscillators");
}

bool is_integer(double x) { return std::abs(x - std::round(x)) < 1e-6; }

}  // namespace

void validate(const ChainConfig& config, Warnings* warnings) {
  const std::size_t n = config.sites.size();
  if (n == 0) throw ValidationError("sites: chain needs at least one site");
  if (config.bonds.size() != n - 1)
    throw ValidationError("bonds: length " + std::to_string(config.bonds.size()) + " does not match sites length " +
                          std::to_string(n) + " minus one");
  if (!finite_all({config.gamma_spin, config.gamma_mech, config.nbar_spin, config.nbar_mech}))
    throw ValidationError("dissipation: non-finite value");
  if (config.gamma_spin < 0.0 || config.gamma_mech < 0.0)
    throw ValidationError("dissipation: rates must be nonnegative");
  if (config.nbar_spin < 0.0 || config.nbar_mech < 0.0)
    throw ValidationError("dissipation: thermal occupations must be nonnegative");
  for (std::size_t j = 0; j < n; ++j) {
    const auto& s = config.sites[j];
    const std::string where = "sites[" + std::to_string(j) + "]: ";
    if (!finite_all({s.delta, s.omega_m, s.lambda})) throw ValidationError(where + "non-finite value");
    if (s.omega_m < 0.0) throw ValidationError(where + "omega_m must be nonnegative");
    if (s.lambda < 0.0) throw ValidationError(where + "lambda must be nonnegative");
    if (s.lambda > 0.0 && s.omega_m <= 0.0) throw ValidationError(where + "lambda > 0 requires an oscillator (omega_m > 0)");
    if (s.omega_m > 0.0) {
      if (s.n_max < 1) throw ValidationError(where + "n_max must be at least 1");
      if (s.delta >= s.omega_m)
        throw ValidationError(where + "delta " + fmt(s.delta) + " must be below omega_m " + fmt(s.omega_m));
      if (s.lambda / s.omega_m >= 0.2)
        warn(warnings, where + "lambda/omega_m = " + fmt(s.lambda / s.omega_m) +
                           " is outside the weak-coupling regime of the effective models");
    }
  }
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const auto& b = config.bonds[j];
    if (!finite_all({b.j_amp, b.big_omega})) throw ValidationError("bonds[" + std::to_string(j) + "]: non-finite value");
  }
}

SpaceLayout chain_layout(const ChainConfig& config) {
  std::vector<Subsystem> subs(config.size(), spin());
  for (const auto& s : config.sites)
    if (s.omega_m > 0.0) subs.push_back(oscillator(static_cast<std::size_t>(s.n_max)));
  return SpaceLayout(std::move(subs));
}

SpaceLayout chain_layout(const ChainConfig& config, int n_max) {
  std::vector<Subsystem> subs(config.size(), spin());
  for (const auto& s : config.sites)
    if (s.omega_m > 0.0) subs.push_back(oscillator(static_cast<std::size_t>(n_max)));
  return SpaceLayout(std::move(subs));
}

std::vector<std::optional<std::size_t>> oscillator_slots(const ChainConfig& config) {
  std::vector<std::optional<std::size_t>> slots(config.size());
  std::size_t next = config.size();
  for (std::size_t j = 0; j < config.size(); ++j)
    if (config.sites[j].omega_m > 0.0) slots[j] = next++;
  return slots;
}

cplx Coefficient::operator()(double t) const {
  return freq == 0.0 ? amplitude : amplitude * std::cos(freq * t);
}

double HamiltonianSchedule::Rotation::phase(double t) const {
  double p = rate * t;
  if (mod_amp != 0.0 && mod_freq != 0.0) p += (mod_amp / mod_freq) * std::sin(mod_freq * t);
  return p;
}

HamiltonianSchedule::HamiltonianSchedule(SpaceLayout l) : layout(std::move(l)), rotations(layout.size()) {}

double subsystem_level(const Subsystem& s, std::size_t local) {
  if (s.kind == SubsystemKind::Spin) return local == 0 ? 1.0 : -1.0;
  return static_cast<double>(local);
}

Operator HamiltonianSchedule::at(double t) const {
  Operator h = Operator::zero(layout);
  for (std::size_t k = 0; k < rotations.size(); ++k) {
    const auto& r = rotations[k];
    double rate = r.rate;
    if (r.mod_amp != 0.0) rate += r.mod_amp * std::cos(r.mod_freq * t);
    if (rate != 0.0) h.matrix += rate * embed(level_matrix(layout[k]), k, layout).matrix;
  }
  for (const auto& term : terms) h.matrix += term.coeff(t) * term.op.matrix;
  return h;
}

HamiltonianSchedule HamiltonianSchedule::lab_form() const {
  HamiltonianSchedule out(layout);
  out.terms = terms;
  for (std::size_t k = 0; k < rotations.size(); ++k) {
    const auto& r = rotations[k];
    if (r.rate == 0.0 && r.mod_amp == 0.0) continue;
    Operator level = embed(level_matrix(layout[k]), k, layout);
    if (r.rate != 0.0) out.terms.push_back({level, {r.rate, 0.0}});
    if (r.mod_amp != 0.0) out.terms.push_back({level, {r.mod_amp, r.mod_freq}});
  }
  return out;
}

double HamiltonianSchedule::max_frequency() const {
  double f = 0.0;
  for (std::size_t k = 0; k < rotations.size(); ++k) {
    const auto& r = rotations[k];
    const double level_gap = layout[k].kind == SubsystemKind::Spin ? 2.0 : 1.0;
    f = std::max(f, level_gap * std::abs(r.rate));
    f = std::max(f, std::abs(r.mod_freq));
  }
  for (const auto& term : terms) f = std::max(f, std::abs(term.coeff.freq));
  return f;
}

bool HamiltonianSchedule::time_independent() const {
  for (const auto& r : rotations)
    if (r.mod_amp != 0.0) return false;
  for (const auto& term : terms)
    if (term.coeff.freq != 0.0) return false;
  return true;
}

HamiltonianSchedule full_schedule(const ChainConfig& config, const SpaceLayout& layout) {
  require_layout(config, layout);
  const auto& s = spin_ops();
  const auto slots = oscillator_slots(config);
  HamiltonianSchedule h(layout);
  for (std::size_t j = 0; j < config.size(); ++j) {
    const auto& site = config.sites[j];
    h.rotations[j].rate = site.delta / 2.0;
    if (!slots[j]) continue;
    h.rotations[*slots[j]].rate = site.omega_m;
    if (site.lambda != 0.0) {
      const Matrix b = annihilation(static_cast<int>(layout[*slots[j]].dim) - 1);
      Operator x = embed(b + b.adjoint(), *slots[j], layout);
      h.terms.push_back({embed(s.z, j, layout) * x, {-site.lambda, 0.0}});
    }
  }
  for (std::size_t j = 0; j < config.bonds.size(); ++j) {
    const auto& bond = config.bonds[j];
    if (bond.j_amp == 0.0) continue;
    h.terms.push_back({embed(s.x, j, layout) * embed(s.x, j + 1, layout), {bond.j_amp, bond.big_omega}});
  }
  return h;
}

Operator full_hamiltonian(const ChainConfig& config, double t, const SpaceLayout& layout) {
  return full_schedule(config, layout).at(t);
}

Operator minimal_hamiltonian(const ChainConfig& config, double t) {
  if (config.size() != 2 || config.sites[0].omega_m <= 0.0 || config.sites[1].omega_m != 0.0 ||
      config.sites[1].lambda != 0.0)
    throw ValidationError("minimal model needs two sites with an oscillator on site 1 only");
  const auto& s = spin_ops();
  const auto& site = config.sites[0];
  const int n_max = site.n_max;
  const Matrix b = annihilation(n_max);
  const Matrix n = b.adjoint() * b;
  const auto d = n_max + 1;
  const Matrix i2 = Matrix::Identity(2, 2);
  const Matrix id = Matrix::Identity(d, d);
  auto k3 = [](const Matrix& a, const Matrix& b2, const Matrix& c) {
    Matrix ab(a.rows() * b2.rows(), a.cols() * b2.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) ab.block(i * b2.rows(), j * b2.cols(), b2.rows(), b2.cols()) = a(i, j) * b2;
    Matrix out(ab.rows() * c.rows(), ab.cols() * c.cols());
    for (Eigen::Index i = 0; i < ab.rows(); ++i)
      for (Eigen::Index j = 0; j < ab.cols(); ++j) out.block(i * c.rows(), j * c.cols(), c.rows(), c.cols()) = ab(i, j) * c;
    return out;
  };
  Matrix h = site.omega_m * k3(i2, i2, n);
  h += config.bonds[0].j_amp * std::cos(config.bonds[0].big_omega * t) * k3(s.x, s.x, id);
  h -= site.lambda * k3(s.z, i2, b + b.adjoint());
  h += 0.5 * config.sites[0].delta * k3(s.z, i2, id);
  h += 0.5 * config.sites[1].delta * k3(i2, s.z, id);
  return {SpaceLayout{spin(), spin(), oscillator(static_cast<std::size_t>(n_max))}, std::move(h)};
}

namespace {

Operator effective_operator(ResonanceCase which, const ChainConfig& config, const SpaceLayout& layout,
                            Warnings* warnings) {
  require_layout(config, layout);
  const auto slots = oscillator_slots(config);
  const cplx i(0.0, 1.0);
  Operator h = Operator::zero(layout);
  for (std::size_t j = 0; j < config.bonds.size(); ++j) {
    const auto& bond = config.bonds[j];
    if (bond.j_amp == 0.0) continue;
    const Operator pp = pair_raise(j, j + 1, layout);
    const double spin_sum = config.sites[j].delta + config.sites[j + 1].delta;
    const std::string where = "bonds[" + std::to_string(j) + "]: ";
    Operator a = Operator::zero(layout);  // h = a + a^dag
    if (which == ResonanceCase::CaseII) {
      a.matrix += 0.5 * bond.j_amp * pp.matrix;
      if (std::abs(bond.big_omega - spin_sum) > kResonanceTolerance)
        warn(warnings, where + "Omega " + fmt(bond.big_omega) + " misses the Case II condition " + fmt(spin_sum));
    }
    for (std::size_t k = j; k <= j + 1; ++k) {
      const auto& site = config.sites[k];
      if (!slots[k] || site.lambda == 0.0) continue;
      const double g = bond.j_amp * site.lambda / site.omega_m;
      const Operator pb = pp * creation(*slots[k], layout);
      if (which == ResonanceCase::CaseI) {
        a.matrix += i * g * pb.matrix;
        const double target = spin_sum + site.omega_m;
        if (std::abs(bond.big_omega - target) > kResonanceTolerance)
          warn(warnings, where + "Omega " + fmt(bond.big_omega) + " misses the Case I condition " + fmt(target) +
                             " for the oscillator on site " + std::to_string(k));
      } else {
        a.matrix -= i * g * pb.matrix;
        if (std::abs(site.omega_m - 2.0 * bond.big_omega) > kResonanceTolerance)
          warn(warnings, where + "oscillator on site " + std::to_string(k) + " has omega_m " + fmt(site.omega_m) +
                             ", Case II needs " + fmt(2.0 * bond.big_omega));
      }
    }
    h.matrix += a.matrix + a.matrix.adjoint();
  }
  return h;
}

}  // namespace

HamiltonianSchedule effective_schedule(ResonanceCase which, const ChainConfig& config, const SpaceLayout& layout,
                                       Warnings* warnings) {
  HamiltonianSchedule h(layout);
  h.terms.push_back({effective_operator(which, config, layout, warnings), {1.0, 0.0}});
  return h;
}

Operator effective_hamiltonian_case1(const ChainConfig& config, const SpaceLayout& layout, Warnings* warnings) {
  return effective_operator(ResonanceCase::CaseI, config, layout, warnings);
}

Operator effective_hamiltonian_case2(const ChainConfig& config, const SpaceLayout& layout, Warnings* warnings) {
  return effective_operator(ResonanceCase::CaseII, config, layout, warnings);
}

Resonance resonance_frequency(ResonanceCase which, std::size_t bond_index, const ChainConfig& config) {
  if (bond_index >= config.bonds.size())
    throw ValidationError("bond index " + std::to_string(bond_index) + " out of range");
  const double spin_sum = config.sites[bond_index].delta + config.sites[bond_index + 1].delta;
  Resonance r;
  if (which == ResonanceCase::CaseII) {
    r.big_omega.push_back(spin_sum);
    r.omega_m_required = 2.0 * spin_sum;
    return r;
  }
  for (std::size_t k = bond_index; k <= bond_index + 1; ++k)
    if (config.sites[k].omega_m > 0.0) r.big_omega.push_back(spin_sum + config.sites[k].omega_m);
  return r;
}

namespace {

struct DriveGeometry {
  double omega, lambda;
  int n_max;
};

DriveGeometry drive_geometry(const ChainConfig& config) {
  if (config.size() != 2) throw ValidationError("local-drive model needs exactly two sites");
  int count = 0;
  DriveGeometry g{};
  for (const auto& s : config.sites)
    if (s.omega_m > 0.0) {
      ++count;
      g = {s.omega_m, s.lambda, s.n_max};
    }
  if (count != 1) throw ValidationError("local-drive model needs exactly one oscillator");
  return g;
}

}  // namespace

SpaceLayout local_drive_layout(const ChainConfig& config, int n_max) {
  const auto g = drive_geometry(config);
  return {spin(), spin(), oscillator(static_cast<std::size_t>(n_max > 0 ? n_max : g.n_max))};
}

HamiltonianSchedule local_drive_schedule(const ChainConfig& config, const LocalDriveParams& drive) {
  if (!(drive.nu > 0.0)) throw ValidationError("local drive: nu must be positive");
  const auto g = drive_geometry(config);
  const SpaceLayout layout = local_drive_layout(config);
  const auto& s = spin_ops();
  HamiltonianSchedule h(layout);
  h.rotations[0] = {config.sites[0].delta / 2.0, drive.eps0, drive.nu};
  h.rotations[1].rate = config.sites[1].delta / 2.0;
  h.rotations[2].rate = g.omega;
  if (g.lambda != 0.0) {
    const Matrix b = annihilation(g.n_max);
    h.terms.push_back({embed(s.z, 1, layout) * embed(b + b.adjoint(), 2, layout), {-g.lambda, 0.0}});
  }
  if (config.bonds[0].j_amp != 0.0)
    h.terms.push_back({embed(s.x, 0, layout) * embed(s.x, 1, layout), {config.bonds[0].j_amp, 0.0}});
  return h;
}

Operator local_drive_hamiltonian(const ChainConfig& config, const LocalDriveParams& drive, double t) {
  return local_drive_schedule(config, drive).at(t);
}

double default_eps0(double nu) { return 0.5 * nu * kBesselZero; }

FloquetIndices floquet_indices(const ChainConfig& config, const LocalDriveParams& drive) {
  if (!(drive.nu > 0.0)) throw ValidationError("local drive: nu must be positive");
  const auto g = drive_geometry(config);
  const double s = config.sites[0].delta + config.sites[1].delta;
  const double nu = drive.nu;
  return {-s / nu, -(s + g.omega) / nu, -(s - g.omega) / nu, -g.omega / nu, g.omega / nu};
}

Operator floquet_effective(ResonanceCase which, const ChainConfig& config, const LocalDriveParams& drive,
                           FloquetOptions options) {
  const auto g = drive_geometry(config);
  const double x = 2.0 * drive.eps0 / drive.nu;
  if (options.enforce_bessel_zero && std::abs(x - kBesselZero) > 1e-6)
    throw ValidationError("local drive: 2*eps0/nu = " + fmt(x) + " must sit on the first zero of J0 (" +
                          fmt(kBesselZero) + ")");
  const FloquetIndices idx = floquet_indices(config, drive);
  std::vector<std::pair<const char*, double>> required;
  if (which == ResonanceCase::CaseI)
    required = {{"beta", idx.beta}};
  else
    required = {{"alpha", idx.alpha}, {"delta", idx.delta}};
  std::string failed;
  for (const auto& [name, value] : required)
    if (!is_integer(value)) failed += std::string(failed.empty() ? "" : ", ") + name + " = " + fmt(value);
  if (!failed.empty()) throw ValidationError("non-integer Bessel index: " + failed);

  const SpaceLayout layout = local_drive_layout(config);
  const cplx i(0.0, 1.0);
  const double coupling = config.bonds[0].j_amp * g.lambda / g.omega;
  const Operator pp = pair_raise(0, 1, layout);
  const Operator pb = pp * creation(2, layout);
  Matrix a;
  if (which == ResonanceCase::CaseI) {
    a = 2.0 * i * coupling * bessel_j(static_cast<int>(std::lround(idx.beta)), x) * pb.matrix;
  } else {
    const double ja = bessel_j(static_cast<int>(std::lround(idx.alpha)), x);
    a = config.bonds[0].j_amp * ja * pp.matrix - 2.0 * i * coupling * ja * pb.matrix;
  }
  return {layout, a + a.adjoint()};
}

double bessel_j(int order, double x) {
  if (std::abs(order) > 12 || !(std::abs(x) <= 20.0))
    throw ValidationError("bessel_j: (order " + std::to_string(order) + ", x " + fmt(x) + ") outside the envelope");
  const int m = std::abs(order);
  const long double half = static_cast<long double>(x) / 2.0L;
  long double term = 1.0L;
  for (int k = 1; k <= m; ++k) term *= half / k;
  long double sum = term;
  const long double q = -half * half;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<long double>(k) * static_cast<long double>(k + m));
    sum += term;
    if (std::abs(term) < 1e-30L && k > half) break;
  }
  const double value = static_cast<double>(sum);
  return (order < 0 && (m % 2 == 1)) ? -value : value;
}

}  // namespace phl
