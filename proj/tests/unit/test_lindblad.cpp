#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "phl/lindblad.hpp"

using namespace phl;
using testing::max_abs;

namespace {

const double kPi = std::acos(-1.0);

Operator number_op(const SpaceLayout& l, std::size_t slot) {
  const Matrix b = annihilation(static_cast<int>(l[slot].dim) - 1);
  return embed(b.adjoint() * b, slot, l);
}

DissipatorSet thermal_pair(const SpaceLayout& l, std::size_t slot, double gamma, double nbar) {
  const Matrix b = annihilation(static_cast<int>(l[slot].dim) - 1);
  return {{{embed(b, slot, l), gamma * (1.0 + nbar)}, {embed(b.adjoint(), slot, l), gamma * nbar}}};
}

IntegrationSpec spec_of(double t_end, double dt, int sample_every) {
  IntegrationSpec s;
  s.t_end = t_end;
  s.dt = dt;
  s.sample_every = sample_every;
  s.points_per_period = 4.0;
  return s;
}

}  // namespace

TEST_CASE("rhs: single-quantum decay") {
  const SpaceLayout l{oscillator(4)};
  const double gamma = 0.3;
  const DissipatorSet d{{{embed(annihilation(4), 0, l), gamma}}};
  const DensityMatrix drho = rhs(fock_state(1, 4), Operator::zero(l), d);
  CHECK(expectation(number_op(l, 0), drho).real() == doctest::Approx(-gamma).epsilon(1e-14));
}

TEST_CASE("rhs: unitary part is traceless") {
  std::mt19937 rng(4);
  const SpaceLayout l{spin(), oscillator(3)};
  const Operator h{l, testing::random_hermitian(8, rng)};
  const DensityMatrix drho = rhs(testing::random_state(l, rng), h, {});
  CHECK(std::abs(drho.trace()) < 1e-13);
}

TEST_CASE("rhs: thermal pair gives dn/dt = -γ(n - n̄)") {
  const SpaceLayout l{oscillator(25)};
  const double gamma = 0.2, nbar = 0.4;
  const DensityMatrix rho = coherent_state({1.2, -0.3}, 25);
  const double n = expectation(number_op(l, 0), rho).real();
  const double dn = expectation(number_op(l, 0), rhs(rho, Operator::zero(l), thermal_pair(l, 0, gamma, nbar))).real();
  CHECK(dn == doctest::Approx(-gamma * (n - nbar)).epsilon(1e-9));
}

TEST_CASE("banded generator matches the dense right-hand side") {
  std::mt19937 rng(8);
  const ChainConfig c = testing::fig2_chain(4);
  const SpaceLayout l = chain_layout(c);
  const HamiltonianSchedule h = full_schedule(c, l);
  const DissipatorSet d = build_dissipators(c, l);
  const DensityMatrix rho = testing::random_state(l, rng);

  const Liouvillian lab(h, d, Frame::Lab);
  Matrix out(rho.matrix.rows(), rho.matrix.cols());
  for (double t : {0.0, 0.37, 12.5}) {
    lab.apply(t, rho.matrix, out, true);
    CHECK(max_abs(out - rhs(rho, h.at(t), d).matrix) < 1e-12);
  }

  // Interaction frame: d/dt to_lab(t, X) must reproduce the lab generator.
  const Liouvillian ia(h, d, Frame::Interaction);
  for (double t : {0.2, 3.1}) {
    const Matrix x = ia.from_lab(t, rho.matrix);
    const double e = 1e-5;
    const Matrix frame_part = (ia.to_lab(t + e, x) - ia.to_lab(t - e, x)) / (2.0 * e);
    ia.apply(t, x, out, true);
    const Matrix total = frame_part + ia.to_lab(t, out);
    CHECK(max_abs(total - rhs(rho, h.at(t), d).matrix) < 1e-7);
    CHECK(max_abs(ia.to_lab(t, x) - rho.matrix) < 1e-13);
  }
}

TEST_CASE("interaction-frame expectation equals the lab trace") {
  std::mt19937 rng(9);
  const ChainConfig c = testing::fig2_chain(3);
  const SpaceLayout l = chain_layout(c);
  const Liouvillian ia(full_schedule(c, l), build_dissipators(c, l), Frame::Interaction);
  const DensityMatrix rho = testing::random_state(l, rng);
  const Operator b = chain_probes(c, l).at("b1");
  const double t = 1.7;
  const cplx direct = expectation(b, rho);
  const cplx framed = ia.expectation(BandedOperator::from_dense(b.matrix, l), t, ia.from_lab(t, rho.matrix));
  CHECK(std::abs(direct - framed) < 1e-12);
}

TEST_CASE("banded storage round trip") {
  std::mt19937 rng(10);
  const SpaceLayout l{spin(), oscillator(3)};
  const Matrix m = testing::random_matrix(8, rng);
  CHECK(max_abs(BandedOperator::from_dense(m, l).to_dense() - m) == 0.0);
}

TEST_CASE("dissipators follow the thermal rates") {
  const ChainConfig c = testing::fig2_chain(3);
  const DissipatorSet d = build_dissipators(c, chain_layout(c));
  REQUIRE(d.channels.size() == 6);
  CHECK(d.channels[0].rate == doctest::Approx(0.02 * 1.01));
  CHECK(d.channels[1].rate == doctest::Approx(0.02 * 0.01));
  CHECK(d.channels[4].rate == doctest::Approx(8e-4 * 1.1));
  CHECK(d.channels[5].rate == doctest::Approx(8e-4 * 0.1));
}

TEST_CASE("integration spec validation") {
  CHECK_THROWS_AS(validate(spec_of(10.0, 0.0, 1), 1.0), ValidationError);
  CHECK_THROWS_AS(validate(spec_of(-1.0, 0.01, 1), 1.0), ValidationError);
  CHECK_THROWS_AS(validate(spec_of(10.0, 0.01, 0), 1.0), ValidationError);
  // ceiling 2π/(points_per_period · f)
  IntegrationSpec at = spec_of(10.0, 2.0 * kPi / 50.0, 1), over = spec_of(10.0, 2.0 * kPi / 49.0, 1);
  at.points_per_period = over.points_per_period = 50.0;
  CHECK_NOTHROW(validate(at, 1.0));
  CHECK_THROWS_AS(validate(over, 1.0), ValidationError);
}

TEST_CASE("decoupled thermal oscillator stays put") {
  ChainConfig c = testing::fig2_chain(12);
  c.sites[0].lambda = 0.0;
  c.bonds[0].j_amp = 0.0;
  const SpaceLayout l = chain_layout(c);
  const auto rec = integrate(chain_initial_state(c, l), full_schedule(c, l), build_dissipators(c, l),
                             spec_of(500.0, 0.05, 100), {{"n", number_op(l, 2)}});
  for (const auto& v : rec.at("n")) CHECK(std::abs(v.real() - 0.1) < 1e-6);
  CHECK_FALSE(rec.truncation_flagged);
}

TEST_CASE("thermal relaxation follows the analytic exponential") {
  const SpaceLayout l{oscillator(30)};
  const double gamma = 0.1, nbar = 0.3, omega = 2.0;
  HamiltonianSchedule h(l);
  h.rotations[0].rate = omega;
  const DensityMatrix rho0 = coherent_state({1.5, 0.0}, 30);
  const double n0 = expectation(number_op(l, 0), rho0).real();
  IntegrationSpec s = spec_of(5.0 / gamma, 0.01, 50);
  for (Frame f : {Frame::Interaction, Frame::Lab}) {
    IntegrateOptions o;
    o.frame = f;
    const auto rec = integrate(rho0, h, thermal_pair(l, 0, gamma, nbar), s, {{"n", number_op(l, 0)}}, o);
    double worst = 0.0;
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
      const double exact = nbar + (n0 - nbar) * std::exp(-gamma * rec.times[k]);
      worst = std::max(worst, std::abs(rec.at("n")[k].real() - exact));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("two-level detailed balance") {
  const SpaceLayout l{spin()};
  const double gamma = 0.05, nbar = 0.2;
  HamiltonianSchedule h(l);
  h.rotations[0].rate = 1.0;
  const DissipatorSet d{{{Operator{l, spin_ops().minus}, gamma * (1.0 + nbar)}, {Operator{l, spin_ops().plus}, gamma * nbar}}};
  const auto rec = integrate(spin_up(), h, d, spec_of(20.0 / gamma, 0.05, 100), {{"sz", Operator{l, spin_ops().z}}});
  CHECK(rec.at("sz").back().real() == doctest::Approx(-1.0 / (1.0 + 2.0 * nbar)).epsilon(1e-4));
}

TEST_CASE("steady-state detection") {
  TrajectoryRecord rec;
  for (int k = 0; k <= 100; ++k) {
    rec.times.push_back(k);
    rec.observables["c"].push_back(3.0);
    rec.observables["lin"].push_back(static_cast<double>(k));
  }
  const SteadyState c = steady_state_detect(rec, "c", 10.0, 1e-6);
  CHECK(c.converged);
  CHECK(c.value.real() == 3.0);
  CHECK_FALSE(steady_state_detect(rec, "lin", 10.0, 0.02).converged);
  CHECK_THROWS(steady_state_detect(rec, "missing", 10.0, 0.02));
  CHECK_THROWS_AS(steady_state_detect(rec, "c", 200.0, 0.02), ValidationError);
}

TEST_CASE("full vs effective is trivial without coupling") {
  ChainConfig c = testing::fig2_chain(6);
  c.sites[0].lambda = 0.0;
  const auto cmp = compare_full_vs_effective(c, ResonanceCase::CaseI, spec_of(200.0, 0.01, 100));
  CHECK(cmp.max_rel_dev < 1e-6);
}

TEST_CASE("growth rates of both models scale with the gain coefficient") {
  // early-time log-slope of n under full and effective generators, at λ and λ/2
  ChainConfig c = testing::fig2_chain(12);
  c.bonds[0].j_amp = 0.3;  // fast growth keeps the run short
  c.gamma_spin = 0.05;
  IntegrationSpec s = spec_of(300.0, 0.02, 50);
  s.points_per_period = 4.0;
  auto slopes = [&](double lambda) {
    ChainConfig k = c;
    k.sites[0].lambda = lambda;
    const auto cmp = compare_full_vs_effective(k, ResonanceCase::CaseI, s);
    auto slope = [](const TrajectoryRecord& r) {
      const auto n = r.real("n1");
      const std::size_t a = n.size() / 3, b = 2 * n.size() / 3;
      return (n[b] - n[a]) / (r.times[b] - r.times[a]);
    };
    return std::pair{slope(cmp.record_full), slope(cmp.record_eff)};
  };
  const auto [full1, eff1] = slopes(0.4);
  const auto [full2, eff2] = slopes(0.2);
  CHECK(full1 > 0.0);
  CHECK(eff1 > 0.0);
  const double ratio_full = full1 / full2, ratio_eff = eff1 / eff2;
  CHECK(std::abs(ratio_full / ratio_eff - 1.0) < 0.2);
}

TEST_CASE("effective spec lands on the same samples") {
  IntegrationSpec full = spec_of(100.0, 0.01, 100);
  const IntegrationSpec eff = effective_spec(full);
  CHECK(eff.dt * eff.sample_every == doctest::Approx(full.dt * full.sample_every));
  CHECK(eff.dt <= 0.25);
}

TEST_CASE("truncation monitor flags and aborts") {
  const SpaceLayout l{oscillator(4)};
  HamiltonianSchedule h(l);
  const DissipatorSet heat = thermal_pair(l, 0, 0.5, 3.0);
  IntegrateOptions o;
  const auto flagged = integrate(thermal_state(0.0, 4), h, heat, spec_of(20.0, 0.01, 100), {}, o);
  CHECK(flagged.truncation_flagged);
  CHECK_FALSE(flagged.aborted);
  o.abort_on_truncation = true;
  const auto aborted = integrate(thermal_state(0.0, 4), h, heat, spec_of(20.0, 0.01, 100), {}, o);
  CHECK(aborted.aborted);
  CHECK(aborted.times.back() < 20.0);
}

TEST_CASE("divergence is reported as a numerical failure") {
  const SpaceLayout l{oscillator(3)};
  HamiltonianSchedule h(l);
  h.terms.push_back({embed(annihilation(3) + annihilation(3).adjoint(), 0, l), {50.0, 0.0}});
  IntegrationSpec s = spec_of(100.0, 0.5, 1);
  s.points_per_period = 1e-3;  // switch the ceiling off to force instability
  CHECK_THROWS_AS(integrate(fock_state(1, 3), h, {}, s, {}), NumericalError);
}

TEST_CASE("property: trace, Hermiticity and positivity over a driven run") {
  const ChainConfig c = testing::fig2_chain(8);
  const SpaceLayout l = chain_layout(c);
  const HamiltonianSchedule h = full_schedule(c, l);
  const DissipatorSet d = build_dissipators(c, l);
  IntegrationSpec s = spec_of(200.0, 0.0, 400);
  s.points_per_period = 50.0;
  s.dt = 2.0 * kPi / (s.points_per_period * Liouvillian(h, d, Frame::Interaction).bandwidth());
  s.t_end = 2000 * s.dt;
  s.hermitize_every = 100000;
  s.renormalize_trace = false;
  std::vector<double> min_eig, trace_err, herm;
  IntegrateOptions o;
  o.observer = [&](double, const DensityMatrix& rho) {
    min_eig.push_back(rho.min_eigenvalue());
    trace_err.push_back(std::abs(rho.trace() - cplx(1.0)));
    herm.push_back(rho.hermiticity_error());
  };
  integrate(chain_initial_state(c, l), h, d, s, {}, o);
  REQUIRE(min_eig.size() >= 5);
  for (double v : min_eig) CHECK(v > -1e-6);
  for (double v : trace_err) CHECK(v < 1e-6);
  // 400 steps between samples, so the per-100-step budget is 4e-8 here
  for (double v : herm) CHECK(v < 4e-8);
}

TEST_CASE("property: halving dt changes the final occupation by < 0.5%") {
  ChainConfig c = testing::fig2_chain(10);
  c.bonds[0].j_amp = 0.3;
  const SpaceLayout l = chain_layout(c);
  const HamiltonianSchedule h = full_schedule(c, l);
  const DissipatorSet d = build_dissipators(c, l);
  const double f = Liouvillian(h, d, Frame::Interaction).bandwidth();
  IntegrationSpec s = spec_of(200.0, 2.0 * kPi / (4.0 * f), 1);
  s.points_per_period = 4.0;
  s.t_end = s.dt * std::floor(200.0 / s.dt);
  s.sample_every = static_cast<int>(std::lround(s.t_end / s.dt));
  const auto probes = std::map<std::string, Operator>{{"n", number_op(l, 2)}};
  const auto coarse = integrate(chain_initial_state(c, l), h, d, s, probes);
  IntegrationSpec fine = s;
  fine.dt /= 2.0;
  fine.sample_every *= 2;
  fine.hermitize_every *= 2;
  const auto ref = integrate(chain_initial_state(c, l), h, d, fine, probes);
  const double a = coarse.at("n").back().real(), b = ref.at("n").back().real();
  CHECK(b > 0.2);  // the run has left the initial thermal level
  CHECK(std::abs(a - b) / b < 5e-3);
}

TEST_CASE("property: rhs is linear") {
  std::mt19937 rng(12);
  const SpaceLayout l{spin(), spin(), oscillator(3)};
  const ChainConfig c = testing::fig2_chain(3);
  const Operator h = full_hamiltonian(c, 0.9, l);
  const DissipatorSet d = build_dissipators(c, l);
  for (int trial = 0; trial < 3; ++trial) {
    const DensityMatrix r1{l, testing::random_hermitian(16, rng)}, r2{l, testing::random_hermitian(16, rng)};
    const double a = 0.7, b = -1.9;
    const DensityMatrix mix{l, a * r1.matrix + b * r2.matrix};
    const Matrix lhs = rhs(mix, h, d).matrix;
    const Matrix sum = a * rhs(r1, h, d).matrix + b * rhs(r2, h, d).matrix;
    CHECK(max_abs(lhs - sum) < 1e-12);
  }
}
