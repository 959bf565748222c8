#include "phl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace phl {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ValidationError("unknown key '" + key + "' in " + where);
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(where + "." + key + ": expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ValidationError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

bool get_bool(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw ValidationError(where + "." + key + ": expected true or false");
  return v.get<bool>();
}

template <class T, class Getter>
void overlay(const json& obj, const std::string& key, const std::string& where, T& target, Getter get) {
  if (obj.contains(key)) target = get(obj, key, where);
}

SiteParams parse_site(const json& j, const std::string& where) {
  check_keys(j, where, {"delta", "omega_m", "lambda", "n_max"});
  SiteParams s;
  overlay(j, "delta", where, s.delta, get_number);
  overlay(j, "omega_m", where, s.omega_m, get_number);
  overlay(j, "lambda", where, s.lambda, get_number);
  overlay(j, "n_max", where, s.n_max, get_int);
  return s;
}

BondParams parse_bond(const json& j, const std::string& where) {
  check_keys(j, where, {"j_amp", "big_omega"});
  BondParams b;
  overlay(j, "j_amp", where, b.j_amp, get_number);
  overlay(j, "big_omega", where, b.big_omega, get_number);
  return b;
}

std::string locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line, col = 1;
    else ++col;
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

RunConfig parse_config(const json& doc_in, const RunConfig& defaults) {
  const json* doc = &doc_in;
  if (doc_in.is_object() && doc_in.contains("config") && doc_in.at("config").is_object()) {
    check_keys(doc_in, "manifest", {"config", "run"});
    doc = &doc_in.at("config");
  }
  check_keys(*doc, "config", {"sites", "bonds", "dissipation", "integration", "recipe"});
  RunConfig out = defaults;
  const json& d = *doc;

  if (d.contains("sites")) {
    if (!d["sites"].is_array()) throw ValidationError("sites: expected an array");
    out.chain.sites.clear();
    for (std::size_t i = 0; i < d["sites"].size(); ++i)
      out.chain.sites.push_back(parse_site(d["sites"][i], "sites[" + std::to_string(i) + "]"));
    if (!d.contains("bonds")) out.chain.bonds.clear();
  }
  if (d.contains("bonds")) {
    if (!d["bonds"].is_array()) throw ValidationError("bonds: expected an array");
    out.chain.bonds.clear();
    for (std::size_t i = 0; i < d["bonds"].size(); ++i)
      out.chain.bonds.push_back(parse_bond(d["bonds"][i], "bonds[" + std::to_string(i) + "]"));
  }
  if (d.contains("dissipation")) {
    const json& s = d["dissipation"];
    check_keys(s, "dissipation", {"gamma_spin", "gamma_mech", "nbar_spin", "nbar_mech"});
    overlay(s, "gamma_spin", "dissipation", out.chain.gamma_spin, get_number);
    overlay(s, "gamma_mech", "dissipation", out.chain.gamma_mech, get_number);
    overlay(s, "nbar_spin", "dissipation", out.chain.nbar_spin, get_number);
    overlay(s, "nbar_mech", "dissipation", out.chain.nbar_mech, get_number);
  }
  if (d.contains("integration")) {
    const json& s = d["integration"];
    const std::string w = "integration";
    check_keys(s, w, {"t_end", "dt", "sample_every", "hermitize_every", "renormalize_trace", "points_per_period"});
    auto& I = out.integration;
    overlay(s, "t_end", w, I.t_end, get_number);
    overlay(s, "dt", w, I.dt, get_number);
    overlay(s, "sample_every", w, I.sample_every, get_int);
    overlay(s, "hermitize_every", w, I.hermitize_every, get_int);
    overlay(s, "renormalize_trace", w, I.renormalize_trace, get_bool);
    overlay(s, "points_per_period", w, I.points_per_period, get_number);
  }
  if (d.contains("recipe")) {
    const json& s = d["recipe"];
    const std::string w = "recipe";
    check_keys(s, w, {"values", "n_max", "n_max_escalation", "effective", "nu", "eps0", "steady_fraction", "dtau",
                      "tau_max", "omega_span", "grid_points", "seed_amplitude", "n0"});
    auto& R = out.recipe;
    if (s.contains("values")) {
      if (!s["values"].is_array()) throw ValidationError("recipe.values: expected an array of numbers");
      std::vector<double> v;
      for (const auto& x : s["values"]) {
        if (!x.is_number()) throw ValidationError("recipe.values: expected an array of numbers");
        v.push_back(x.get<double>());
      }
      R.values = v;
    }
    auto num = [&](const char* key, std::optional<double>& t) {
      if (s.contains(key)) t = get_number(s, key, w);
    };
    auto integer = [&](const char* key, std::optional<int>& t) {
      if (s.contains(key)) t = get_int(s, key, w);
    };
    integer("n_max", R.n_max);
    integer("n_max_escalation", R.n_max_escalation);
    if (s.contains("effective")) R.effective = get_bool(s, "effective", w);
    num("nu", R.nu);
    num("eps0", R.eps0);
    num("steady_fraction", R.steady_fraction);
    num("dtau", R.dtau);
    num("tau_max", R.tau_max);
    num("omega_span", R.omega_span);
    integer("grid_points", R.grid_points);
    num("seed_amplitude", R.seed_amplitude);
    num("n0", R.n0);
  }

  validate(out.chain);
  const auto& I = out.integration;
  if (!(I.t_end > 0.0) || !(I.dt > 0.0) || I.sample_every < 1 || I.hermitize_every < 1 || !(I.points_per_period > 0.0))
    throw ValidationError("integration: t_end, dt, sample_every, hermitize_every and points_per_period must be positive");
  return out;
}

RunConfig parse_config_text(const std::string& text, const RunConfig& defaults) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config parse error at " + locate(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
  }
  return parse_config(doc, defaults);
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& defaults) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str(), defaults);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["sites"] = json::array();
  for (const auto& s : c.chain.sites)
    j["sites"].push_back({{"delta", s.delta}, {"omega_m", s.omega_m}, {"lambda", s.lambda}, {"n_max", s.n_max}});
  j["bonds"] = json::array();
  for (const auto& b : c.chain.bonds) j["bonds"].push_back({{"j_amp", b.j_amp}, {"big_omega", b.big_omega}});
  j["dissipation"] = {{"gamma_spin", c.chain.gamma_spin},
                      {"gamma_mech", c.chain.gamma_mech},
                      {"nbar_spin", c.chain.nbar_spin},
                      {"nbar_mech", c.chain.nbar_mech}};
  const auto& I = c.integration;
  j["integration"] = {{"t_end", I.t_end},
                      {"dt", I.dt},
                      {"sample_every", I.sample_every},
                      {"hermitize_every", I.hermitize_every},
                      {"renormalize_trace", I.renormalize_trace},
                      {"points_per_period", I.points_per_period}};
  json r = json::object();
  const auto& R = c.recipe;
  if (R.values) r["values"] = *R.values;
  auto put = [&](const char* key, const auto& opt) {
    if (opt) r[key] = *opt;
  };
  put("n_max", R.n_max);
  put("n_max_escalation", R.n_max_escalation);
  put("effective", R.effective);
  put("nu", R.nu);
  put("eps0", R.eps0);
  put("steady_fraction", R.steady_fraction);
  put("dtau", R.dtau);
  put("tau_max", R.tau_max);
  put("omega_span", R.omega_span);
  put("grid_points", R.grid_points);
  put("seed_amplitude", R.seed_amplitude);
  put("n0", R.n0);
  j["recipe"] = r;
  return j;
}

std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace phl
