#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "phl/config.hpp"
#include "phl/recipes.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json run_block(const std::string& what, double wall, const phl::RecipeResult& r, const phl::Warnings& warnings) {
  json files = json::array();
  for (const auto& f : r.files) files.push_back(f.filename().string());
  return {{"recipe", what},
          {"version", PHL_VERSION},
          {"wall_time_s", wall},
          {"truncated", r.truncated},
          {"summary", r.summary},
          {"files", files},
          {"warnings", warnings}};
}

void write_manifest(const fs::path& dir, const json& config, const json& run) {
  std::ofstream out(dir / "manifest.json");
  out << json{{"config", config}, {"run", run}}.dump(2) << '\n';
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driven spin-chain phonon laser simulator"};
  app.require_subcommand(1);

  std::string recipe, config_path, out_dir = "out", plan_path;
  unsigned threads = 1;
  bool check_only = false;

  auto* run = app.add_subcommand("run", "Run a figure recipe");
  run->add_option("recipe", recipe, "Recipe name")->required();
  run->add_option("--config", config_path, "JSON config overriding the recipe defaults");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--threads", threads, "Worker cap for scans")->check(CLI::PositiveNumber);
  run->add_flag("--check-only", check_only, "Validate and exit without simulating");

  auto* sweep = app.add_subcommand("sweep", "Run a one-dimensional parameter sweep");
  sweep->add_option("plan", plan_path, "Sweep plan file")->required();

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (app.got_subcommand("version")) {
    std::cout << "phl " << PHL_VERSION << '\n';
    return 0;
  }

  if (run->parsed()) {
    return guarded([&] {
      phl::RunConfig cfg = phl::recipe_defaults(recipe);
      if (!config_path.empty()) cfg = phl::load_config(config_path, cfg);
      phl::Warnings warnings;
      phl::check_recipe(recipe, cfg, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      if (check_only) {
        std::cout << recipe << ": configuration is valid\n";
        return 0;
      }
      warnings.clear();
      const auto t0 = std::chrono::steady_clock::now();
      const auto res = phl::run_recipe(recipe, cfg, out_dir, threads, &warnings);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      write_manifest(out_dir, phl::to_json(cfg), run_block(recipe, wall, res, warnings));
      std::cout << res.summary.dump() << '\n';
      return 0;
    });
  }

  return guarded([&] {
    std::ifstream in(plan_path);
    if (!in) throw phl::ValidationError("cannot open sweep file " + plan_path);
    std::stringstream ss;
    ss << in.rdbuf();
    json doc;
    try {
      doc = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      throw phl::ValidationError(plan_path + ": " + e.what());
    }
    const auto job = phl::parse_sweep_job(doc, fs::path(plan_path).parent_path());
    phl::Warnings warnings;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = phl::run_sweep_job(job, &warnings);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    json run_info = run_block("sweep", wall, res, warnings);
    run_info["plan"] = doc;
    write_manifest(job.out_dir, phl::to_json(job.config), run_info);
    std::cout << res.summary.dump() << '\n';
    return 0;
  });
}
