#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "phl/meanfield.hpp"
#include "phl/sweep.hpp"

using namespace phl;

namespace {

SweepPlan short_plan(std::vector<double> values) {
  SweepPlan p;
  p.target = "bonds[0].j_amp";
  p.values = std::move(values);
  p.experiment = Experiment::MinimalCase1;
  p.spec.t_end = 100.0;
  p.spec.dt = 0.01;
  p.spec.sample_every = 100;
  p.spec.points_per_period = 4.0;
  p.n_max_escalation = 0;
  return p;
}

}  // namespace

TEST_CASE("experiment names round trip") {
  for (auto e : {Experiment::MinimalCase1, Experiment::MinimalCase2, Experiment::LocalDrive, Experiment::MeanFieldArray})
    CHECK(experiment_from_string(to_string(e)) == e);
  CHECK_THROWS_AS(experiment_from_string("minimal"), ValidationError);
}

TEST_CASE("targets address every scanned parameter") {
  ChainConfig c = testing::fig2_chain();
  LocalDriveParams d;
  apply_target("bonds[0].big_omega", 8.5, c, d);
  CHECK(c.bonds[0].big_omega == 8.5);
  apply_target("sites[1].delta", 1.5, c, d);
  CHECK(c.sites[1].delta == 1.5);
  apply_target("sites[0].n_max", 12.0, c, d);
  CHECK(c.sites[0].n_max == 12);
  apply_target("gamma_mech", 2e-3, c, d);
  CHECK(c.gamma_mech == 2e-3);
  apply_target("drive.nu", 12.0, c, d);
  CHECK(d.nu == 12.0);
  CHECK_THROWS_AS(apply_target("bonds[3].j_amp", 1.0, c, d), ValidationError);
  CHECK_THROWS_AS(apply_target("sites[0].colour", 1.0, c, d), ValidationError);
  CHECK_THROWS_AS(apply_target("temperature", 1.0, c, d), ValidationError);
}

TEST_CASE("plan validation") {
  SweepPlan p = short_plan({0.01, 0.02});
  CHECK_NOTHROW(p.validate());
  p.values = {0.02, 0.01};
  CHECK_NOTHROW(p.validate());
  p.values = {0.01, 0.01};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.values = {0.01, 0.03, 0.02};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p.values = {};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = short_plan({1.0});
  p.target = "nothing";
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = short_plan({1.0});
  p.experiment = Experiment::LocalDrive;
  p.spectrum = true;
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("step fitting keeps the sample spacing") {
  IntegrationSpec s;
  s.dt = 0.1;
  s.sample_every = 100;
  s.points_per_period = 4.0;
  const IntegrationSpec f = fit_step(s, 20.0);
  CHECK(f.dt <= 2.0 * std::acos(-1.0) / (4.0 * 20.0));
  CHECK(f.dt * f.sample_every == doctest::Approx(10.0));
  CHECK(fit_step(s, 1.0) == s);
}

TEST_CASE("a single-point sweep equals a direct run") {
  const ChainConfig base = testing::fig2_chain(6);
  const SweepPlan plan = short_plan({0.08});
  const SweepResult r = run_sweep(plan, base, 1);
  REQUIRE(r.points.size() == 1);
  CHECK_FALSE(r.points[0].error.has_value());

  const SpaceLayout l = chain_layout(base);
  const auto probes = chain_probes(base, l);
  const auto rec = integrate(chain_initial_state(base, l), full_schedule(base, l), build_dissipators(base, l), plan.spec,
                             {{"n1", probes.at("n1")}, {"nn1", probes.at("nn1")}});
  double sum = 0.0, nn = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < rec.times.size(); ++k)
    if (rec.times[k] >= 90.0) sum += rec.at("n1")[k].real(), nn += rec.at("nn1")[k].real(), ++count;
  CHECK(r.points[0].n_ss == doctest::Approx(sum / count).epsilon(1e-12));
  CHECK(*r.points[0].g2_ss == doctest::Approx(nn / count / std::pow(sum / count, 2)).epsilon(1e-12));
  CHECK(r.points[0].n_max == 6);
}

TEST_CASE("property: sweeps are deterministic and independent of the worker count") {
  const ChainConfig base = testing::fig2_chain(4);
  const SweepPlan plan = short_plan({0.02, 0.05, 0.08, 0.1});
  const auto a = run_sweep(plan, base, 1).outputs();
  const auto b = run_sweep(plan, base, 3).outputs();
  const auto c = run_sweep(plan, base, 4).outputs();
  for (const auto& [key, col] : a) {
    for (std::size_t i = 0; i < col.size(); ++i) {
      const bool both_nan = std::isnan(col[i]) && std::isnan(b.at(key)[i]);
      CHECK((both_nan || col[i] == b.at(key)[i]));
      CHECK((both_nan || col[i] == c.at(key)[i]));
    }
  }
  // reversed plan gives the reversed table
  SweepPlan rev = plan;
  std::reverse(rev.values.begin(), rev.values.end());
  const auto d = run_sweep(rev, base, 2).outputs();
  const auto& n = a.at("n_ss");
  for (std::size_t i = 0; i < n.size(); ++i) CHECK(n[i] == d.at("n_ss")[n.size() - 1 - i]);
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(257, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  parallel_for(0, 4, [&](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("failed points are recorded, not fatal") {
  const ChainConfig base = testing::fig2_chain(4);
  SweepPlan plan = short_plan({4.0, 5.0, 6.0});
  plan.target = "sites[0].delta";  // Δ >= ω at 5 and 6 breaks validation
  Warnings w;
  const auto r = run_sweep(plan, base, 1, &w);
  CHECK_FALSE(r.points[0].error.has_value());
  CHECK(r.points[1].error.has_value());
  CHECK(r.points[2].error.has_value());
  CHECK(std::isnan(r.outputs().at("n_ss")[1]));
  CHECK(r.outputs().at("converged")[2] == 0.0);
  CHECK(w.size() >= 2);
}

TEST_CASE("truncated points escalate once") {
  const ChainConfig base = testing::fig2_chain(2);  // thermal n̄ = 0.1 overflows two Fock levels
  SweepPlan plan = short_plan({0.08});
  plan.spec.t_end = 20.0;
  plan.spec.sample_every = 10;
  plan.n_max = 2;
  plan.n_max_escalation = 10;
  const auto r = run_sweep(plan, base, 1);
  CHECK(r.points[0].n_max == 12);
  CHECK_FALSE(r.points[0].truncated);
  plan.n_max_escalation = 0;
  const auto stuck = run_sweep(plan, base, 1);
  CHECK(stuck.points[0].truncated);
  CHECK_FALSE(stuck.points[0].converged);
}

TEST_CASE("mean-field sweep points") {
  ChainConfig c;
  c.sites = {{2.0, 5.0, 0.4, 1}, {2.0, 5.0, 0.0, 1}};
  c.bonds = {{0.3, 9.0}};
  c.gamma_spin = 0.08;
  c.gamma_mech = 1e-3;
  SweepPlan p;
  p.experiment = Experiment::MeanFieldArray;
  p.target = "bonds[0].j_amp";
  p.values = {0.0, 0.3};
  p.spec.t_end = 50.0;
  p.spec.dt = 0.01;
  p.observe_site = 1;
  const auto r = run_sweep(p, c, 1);
  // the uncoupled site only decays from its initial occupation
  CHECK(r.points[0].n_ss == doctest::Approx(MeanFieldInit{}.n0 * std::exp(-1e-3 * 47.5)).epsilon(1e-3));
  CHECK(r.points[0].converged);
  CHECK_FALSE(r.points[1].error.has_value());
}
