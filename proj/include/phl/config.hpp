#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phl/lindblad.hpp"
#include "phl/model.hpp"

namespace phl {

/// Recipe knobs a config file may override; unset entries keep the recipe's own defaults.
struct RecipeSettings {
  std::optional<std::vector<double>> values;  // scan points
  std::optional<int> n_max;
  std::optional<int> n_max_escalation;
  std::optional<bool> effective;
  std::optional<double> nu;
  std::optional<double> eps0;
  std::optional<double> steady_fraction;
  std::optional<double> dtau;
  std::optional<double> tau_max;
  std::optional<double> omega_span;
  std::optional<int> grid_points;
  std::optional<double> seed_amplitude;
  std::optional<double> n0;

  bool operator==(const RecipeSettings&) const = default;
};

struct RunConfig {
  ChainConfig chain;
  IntegrationSpec integration;
  RecipeSettings recipe;

  bool operator==(const RunConfig&) const = default;
};

/// Overlays a config document on `defaults`. A "sites" array replaces the whole chain layout;
/// every other key replaces only itself. Unknown keys and wrong types are ValidationErrors.
/// A run manifest ({"config": …, "run": …}) is accepted and its "config" part used.
RunConfig parse_config(const nlohmann::json& doc, const RunConfig& defaults = {});
RunConfig parse_config_text(const std::string& text, const RunConfig& defaults = {});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& defaults = {});

nlohmann::json to_json(const RunConfig& config);
std::string serialize_config(const RunConfig& config);

}  // namespace phl
