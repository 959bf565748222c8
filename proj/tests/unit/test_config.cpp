#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "helpers.hpp"
#include "phl/config.hpp"
#include "phl/recipes.hpp"

using namespace phl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("phl_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

std::string error_of(const std::string& text) {
  try {
    RunConfig base;
    base.chain = testing::fig2_chain();
    parse_config_text(text, base);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig rc;
  rc.chain = testing::fig2_chain(12);
  rc.integration.t_end = 321.5;
  rc.integration.points_per_period = 4.0;
  rc.recipe.values = std::vector<double>{0.01, 0.02};
  rc.recipe.effective = true;
  rc.recipe.dtau = 0.5;
  const RunConfig back = parse_config_text(serialize_config(rc));
  CHECK(back == rc);
  CHECK(parse_config(to_json(rc)) == rc);
}

TEST_CASE("config overlay keeps unspecified values") {
  RunConfig base;
  base.chain = testing::fig2_chain();
  const RunConfig rc = parse_config_text(R"({"dissipation": {"gamma_mech": 0.002}, "integration": {"dt": 0.005}})", base);
  CHECK(rc.chain.gamma_mech == 0.002);
  CHECK(rc.chain.gamma_spin == base.chain.gamma_spin);
  CHECK(rc.chain.sites == base.chain.sites);
  CHECK(rc.integration.dt == 0.005);
  CHECK(rc.integration.t_end == base.integration.t_end);
}

TEST_CASE("config errors") {
  CHECK(error_of(R"({"sites": []})").find("sites") != std::string::npos);
  const std::string bonds = error_of(R"({"sites": [{"delta": 2, "omega_m": 5, "lambda": 0.4}, {"delta": 2}], "bonds": []})");
  CHECK(bonds.find("0") != std::string::npos);
  CHECK(bonds.find("2") != std::string::npos);
  CHECK(error_of(R"({"temperature": 1})").find("temperature") != std::string::npos);
  CHECK(error_of(R"({"integration": {"dt": "small"}})").find("integration.dt") != std::string::npos);
  CHECK(error_of(R"({"integration": {"sample_every": 1.5}})").find("integer") != std::string::npos);
  CHECK(error_of(R"({"integration": {"dt": -1}})").find("positive") != std::string::npos);
  CHECK(error_of(R"({"recipe": {"values": [1, "x"]}})").find("recipe.values") != std::string::npos);
  // Δ above ω
  CHECK_FALSE(error_of(R"({"sites": [{"delta": 6, "omega_m": 5, "lambda": 0.4}, {"delta": 2}], "bonds": [{"j_amp": 0.1, "big_omega": 9}]})")
                  .empty());
  const std::string parse = error_of("{\n  \"sites\": [\n    {\"delta\": 2,,}\n  ]\n}");
  CHECK(parse.find("line 3") != std::string::npos);
  CHECK(parse.find("column") != std::string::npos);
}

TEST_CASE("manifests are accepted") {
  RunConfig rc;
  rc.chain = testing::fig2_chain();
  nlohmann::json m = {{"config", to_json(rc)}, {"run", {{"recipe", "fig2-dynamics"}}}};
  CHECK(parse_config(m) == rc);
  m["extra"] = 1;
  CHECK_THROWS_AS(parse_config(m), ValidationError);
}

TEST_CASE("load_config reports the path") {
  const fs::path dir = scratch("load");
  CHECK_THROWS_WITH_AS(load_config(dir / "missing.json"), doctest::Contains("missing.json"), ValidationError);
  std::ofstream(dir / "bad.json") << "{\"sites\": 3}";
  CHECK_THROWS_WITH_AS(load_config(dir / "bad.json"), doctest::Contains("bad.json"), ValidationError);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1e-20) == "1e-20");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::stod(format_number(M_PI)) == doctest::Approx(M_PI).epsilon(1e-12));
}

TEST_CASE("csv writer") {
  const fs::path dir = scratch("csv");
  write_csv(dir / "a.csv", {"x", "y"}, {{1.0, 2.5}, {-0.0, std::nan("")}});
  const auto lines = read_lines(dir / "a.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "x,y");
  CHECK(lines[1] == "1,2.5");
  CHECK(lines[2] == "0,nan");
  CHECK_THROWS_AS(write_csv(dir / "b.csv", {"x", "y"}, {{1.0}}), DimensionError);
}

TEST_CASE("recipes are all known and consistent") {
  CHECK(recipe_names().size() == 9);
  for (const auto& name : recipe_names()) {
    CAPTURE(name);
    const RunConfig rc = recipe_defaults(name);
    Warnings w;
    CHECK_NOTHROW(check_recipe(name, rc, &w));
    CHECK(parse_config_text(serialize_config(rc)) == rc);
  }
  CHECK_THROWS_WITH_AS(recipe_defaults("fig9"), doctest::Contains("fig2-dynamics"), ValidationError);
}

TEST_CASE("recipe defaults carry the figure parameters") {
  const RunConfig f2 = recipe_defaults("fig2-dynamics");
  CHECK(f2.chain.sites.size() == 2);
  CHECK(f2.chain.sites[0].delta == 2.0);
  CHECK(f2.chain.sites[0].omega_m == 5.0);
  CHECK(f2.chain.sites[0].lambda == 0.4);
  CHECK(f2.chain.bonds[0].j_amp == 0.08);
  CHECK(f2.chain.bonds[0].big_omega == 9.0);
  CHECK(f2.chain.gamma_spin == 0.02);
  CHECK(f2.chain.gamma_mech == 8e-4);
  const RunConfig s1 = recipe_defaults("figS1-phaselocked");
  CHECK(s1.chain.sites[0].omega_m == 8.0);
  CHECK(s1.chain.bonds[0].big_omega == 4.0);
  CHECK(s1.chain.bonds[0].j_amp == 0.1);
  const RunConfig s3 = recipe_defaults("figS3-localdrive");
  CHECK(s3.chain.sites[0].omega_m == 0.0);
  CHECK(s3.chain.sites[1].omega_m == 8.0);
}

TEST_CASE("fig2-dynamics output columns") {
  RunConfig rc = recipe_defaults("fig2-dynamics");
  rc.integration.t_end = 20.0;
  rc.integration.dt = 0.05;
  rc.integration.sample_every = 20;
  rc.recipe.n_max = 4;
  rc.recipe.n_max_escalation = 0;
  const fs::path dir = scratch("dyn");
  Warnings w;
  const auto res = run_recipe("fig2-dynamics", rc, dir, 1, &w);
  REQUIRE(res.files.size() == 2);
  const auto lines = read_lines(dir / "timeseries.csv");
  CHECK(lines[0] == "t,n1,g2_1,sz_1,sz_2");
  CHECK(lines.size() == 22);
  CHECK(lines[1].rfind("0,", 0) == 0);
  CHECK(read_lines(dir / "effective.csv")[0] == "t,n1,g2_1,sz_1,sz_2");
  CHECK(res.summary.contains("max_rel_dev"));
  CHECK(res.summary["n_max"] == 4);
}

TEST_CASE("fig3-array output columns") {
  RunConfig rc = recipe_defaults("fig3-array");
  rc.integration.t_end = 2.0;
  const fs::path dir = scratch("array");
  const auto res = run_recipe("fig3-array", rc, dir, 1);
  const auto lines = read_lines(res.files.at(0));
  std::ostringstream want;
  want << "t";
  const std::size_t n = rc.chain.sites.size();
  for (std::size_t j = 1; j <= n; ++j) want << ",n_" << j << ",g2_" << j << ",phase_" << j;
  want << ",r_K";
  CHECK(lines[0].rfind(want.str(), 0) == 0);
}

TEST_CASE("sweep job files") {
  const nlohmann::json doc = {{"experiment", "minimal-case1"},
                              {"target", "bonds[0].j_amp"},
                              {"values", {0.02, 0.04}},
                              {"base", "fig2-threshold"},
                              {"out", "scan"},
                              {"n_max", 3},
                              {"config", {{"integration", {{"t_end", 10.0}}}}}};
  const SweepJob job = parse_sweep_job(doc, "/tmp/jobs");
  CHECK(job.plan.values == std::vector<double>{0.02, 0.04});
  CHECK(job.plan.n_max == 3);
  CHECK(job.plan.spec.t_end == 10.0);
  CHECK(job.out_dir == fs::path("/tmp/jobs/scan"));
  CHECK(job.config.chain == recipe_defaults("fig2-threshold").chain);

  nlohmann::json bad = doc;
  bad["colour"] = "red";
  CHECK_THROWS_AS(parse_sweep_job(bad), ValidationError);
  bad = doc;
  bad["experiment"] = "nope";
  CHECK_THROWS_AS(parse_sweep_job(bad), ValidationError);
}

TEST_CASE("property: a manifest reproduces byte-identical output") {
  RunConfig rc = recipe_defaults("fig2-dynamics");
  rc.integration.t_end = 10.0;
  rc.integration.dt = 0.05;
  rc.integration.sample_every = 20;
  rc.recipe.n_max = 3;
  rc.recipe.n_max_escalation = 0;
  const fs::path a = scratch("manifest_a"), b = scratch("manifest_b");
  Warnings w;
  run_recipe("fig2-dynamics", rc, a, 1, &w);
  const nlohmann::json manifest = {{"config", to_json(rc)}, {"run", {{"recipe", "fig2-dynamics"}}}};
  run_recipe("fig2-dynamics", parse_config_text(manifest.dump(2), recipe_defaults("fig2-dynamics")), b, 1, &w);
  for (const char* f : {"timeseries.csv", "effective.csv"}) {
    CAPTURE(f);
    CHECK(read_lines(a / f) == read_lines(b / f));
  }
}

TEST_CASE("every emitted csv header is fully named") {
  RunConfig rc = recipe_defaults("figS1-phaselocked");
  rc.integration.t_end = 10.0;
  rc.integration.dt = 0.05;
  rc.integration.sample_every = 20;
  rc.recipe.n_max = 3;
  rc.recipe.n_max_escalation = 0;
  rc.recipe.grid_points = 21;
  const fs::path dir = scratch("headers");
  Warnings w;
  const auto res = run_recipe("figS1-phaselocked", rc, dir, 1, &w);
  CHECK(res.files.size() == 3);
  for (const auto& f : res.files) {
    const auto lines = read_lines(f);
    REQUIRE_FALSE(lines.empty());
    CHECK(lines[0].find(",,") == std::string::npos);
    CHECK(lines[0].back() != ',');
  }
  CHECK(read_lines(dir / "timeseries.csv")[0] == "t,n1,g2_1,sz_1,sz_2,b1_re,b1_im");
  CHECK(read_lines(dir / "wigner.csv")[0] == "x,p,W");
  CHECK(read_lines(dir / "wigner.csv").size() == 1 + 21 * 21);
}
