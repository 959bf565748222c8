#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "phl/recipes.hpp"

namespace py = pybind11;
using namespace phl;
using nlohmann::json;

namespace {

// Config documents cross the boundary as plain dicts, round-tripped through the json module.
json to_doc(const py::object& obj) {
  if (obj.is_none()) return json::object();
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return json::parse(text);
}

py::object from_doc(const json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

RunConfig config_for(const std::string& recipe, const py::object& overrides) {
  return parse_config(to_doc(overrides), recipe_defaults(recipe));
}

ChainConfig chain_of(const py::dict& config) {
  RunConfig rc;
  rc.integration.t_end = 1.0;
  return parse_config(to_doc(config), rc).chain;
}

ResonanceCase case_of(int which) {
  if (which == 1) return ResonanceCase::CaseI;
  if (which == 2) return ResonanceCase::CaseII;
  throw ValidationError("resonance case must be 1 or 2");
}

DensityMatrix oscillator_state(const Matrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() < 2) throw DimensionError("expected a square oscillator density matrix");
  DensityMatrix d{SpaceLayout{oscillator(static_cast<std::size_t>(rho.rows() - 1))}, rho};
  return d;
}

py::dict trajectory(const TrajectoryRecord& rec) {
  py::dict out;
  out["times"] = rec.times;
  for (const auto& [key, values] : rec.observables) out[py::str(key)] = py::array(py::cast(values));
  out["truncated"] = rec.truncation_flagged || rec.aborted;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spin-chain phonon laser simulator";
  m.attr("__version__") = PHL_VERSION;

  // recipes and sweeps
  m.def("recipe_names", &recipe_names);
  m.def("recipe_defaults", [](const std::string& name) { return from_doc(to_json(recipe_defaults(name))); }, py::arg("name"));
  m.def(
      "check_recipe",
      [](const std::string& name, const py::object& config) {
        Warnings w;
        check_recipe(name, config_for(name, config), &w);
        return w;
      },
      py::arg("name"), py::arg("config") = py::none(), "Validate a recipe configuration; returns warnings.");
  m.def(
      "run_recipe",
      [](const std::string& name, const std::filesystem::path& out_dir, const py::object& config, unsigned threads) {
        const RunConfig rc = config_for(name, config);
        Warnings w;
        RecipeResult r;
        {
          py::gil_scoped_release release;
          r = run_recipe(name, rc, out_dir, threads, &w);
        }
        py::dict out;
        out["summary"] = from_doc(r.summary);
        out["files"] = r.files;
        out["truncated"] = r.truncated;
        out["warnings"] = w;
        return out;
      },
      py::arg("name"), py::arg("out_dir"), py::arg("config") = py::none(), py::arg("threads") = 1);
  m.def(
      "run_sweep",
      [](const py::dict& job_doc, const std::filesystem::path& relative_to) {
        const SweepJob job = parse_sweep_job(to_doc(job_doc), relative_to);
        Warnings w;
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = run_sweep(job.plan, job.config.chain, job.threads, &w);
        }
        py::dict out;
        out["values"] = r.values;
        for (const auto& [key, col] : r.outputs()) out[py::str(key)] = py::array(py::cast(col));
        std::vector<std::optional<std::string>> errors;
        for (const auto& p : r.points) errors.push_back(p.error);
        out["errors"] = errors;
        out["warnings"] = w;
        return out;
      },
      py::arg("job"), py::arg("relative_to") = std::filesystem::path{},
      "Run a sweep described by a sweep-file dict; returns one array per output column.");

  // operators and states
  m.def("annihilation", &annihilation, py::arg("n_max"));
  m.def("thermal_state", [](double n_bar, int n_max) { return thermal_state(n_bar, n_max).matrix; }, py::arg("n_bar"),
        py::arg("n_max"));
  m.def("coherent_state", [](cplx alpha, int n_max) { return coherent_state(alpha, n_max).matrix; }, py::arg("alpha"),
        py::arg("n_max"));
  m.def("fock_state", [](int n, int n_max) { return fock_state(n, n_max).matrix; }, py::arg("n"), py::arg("n_max"));

  // Hamiltonians; `config` is a config dict with at least "sites" and "bonds"
  m.def(
      "full_hamiltonian",
      [](const py::dict& config, double t) {
        const ChainConfig c = chain_of(config);
        return full_hamiltonian(c, t, chain_layout(c)).matrix;
      },
      py::arg("config"), py::arg("t"));
  m.def(
      "effective_hamiltonian",
      [](const py::dict& config, int which) {
        const ChainConfig c = chain_of(config);
        const SpaceLayout l = chain_layout(c);
        return (case_of(which) == ResonanceCase::CaseI ? effective_hamiltonian_case1(c, l) : effective_hamiltonian_case2(c, l))
            .matrix;
      },
      py::arg("config"), py::arg("case") = 1);
  m.def("bessel_j", &bessel_j, py::arg("n"), py::arg("x"));

  // time evolution
  m.def(
      "minimal_dynamics",
      [](const std::string& recipe, const py::object& config, int which) {
        const RunConfig rc = config_for(recipe, config);
        Warnings w;
        MinimalDynamics dyn;
        {
          py::gil_scoped_release release;
          dyn = minimal_dynamics(rc, case_of(which), &w);
        }
        py::dict out;
        out["full"] = trajectory(dyn.runs.record_full);
        out["effective"] = trajectory(dyn.runs.record_eff);
        out["max_rel_dev"] = dyn.runs.max_rel_dev;
        out["n_max"] = dyn.n_max;
        out["final_state"] = dyn.runs.record_full.final_state.matrix;
        out["warnings"] = w;
        return out;
      },
      py::arg("recipe") = "fig2-dynamics", py::arg("config") = py::none(), py::arg("case") = 1,
      "Full and effective runs of a two-site chain, seeded from a recipe's defaults.");
  m.def(
      "array_run",
      [](const std::string& recipe, const py::object& config) {
        const RunConfig rc = config_for(recipe, config);
        Warnings w;
        MeanFieldRecord rec;
        {
          py::gil_scoped_release release;
          rec = array_run(rc, &w);
        }
        py::dict out;
        out["times"] = rec.times;
        out["n"] = py::array(py::cast(rec.n));
        std::vector<double> r;
        for (const auto& v : rec.sync.r_k) r.push_back(v.value_or(std::numeric_limits<double>::quiet_NaN()));
        out["r_k"] = py::array(py::cast(r));
        out["active"] = rec.sync.active;
        out["max_conjugacy_error"] = rec.max_conjugacy_error;
        out["warnings"] = w;
        return out;
      },
      py::arg("recipe") = "fig3-array", py::arg("config") = py::none(), "Mean-field run of an array recipe.");

  // observables on a single oscillator density matrix
  m.def("g2_zero", [](const Matrix& rho) { return g2_zero(oscillator_state(rho)); }, py::arg("rho"));
  m.def(
      "wigner",
      [](const Matrix& rho, int n_points, double extent) {
        const DensityMatrix d = oscillator_state(rho);
        GridSpec g = GridSpec::for_truncation(static_cast<int>(rho.rows()) - 1, n_points);
        if (extent > 0.0) g = {-extent, extent, -extent, extent, n_points};
        const WignerGrid w = wigner(d, g);
        std::vector<double> x(n_points), p(n_points);
        for (int i = 0; i < n_points; ++i) x[i] = w.x(i), p[i] = w.p(i);
        py::dict out;
        out["x"] = x;
        out["p"] = p;
        out["W"] = Eigen::MatrixXd(w.values);
        out["ring_score"] = ring_symmetry_score(w);
        return out;
      },
      py::arg("rho"), py::arg("n_points") = 201, py::arg("extent") = 0.0,
      "W[i, j] at (x[i], p[j]); extent 0 sizes the grid from the truncation.");
  m.def(
      "kuramoto",
      [](const std::vector<std::vector<cplx>>& b) {
        std::vector<std::size_t> all(b.size());
        for (std::size_t j = 0; j < b.size(); ++j) all[j] = j;
        const SyncMetrics s = kuramoto(b, {}, all);
        std::vector<double> r;
        for (const auto& v : s.r_k) r.push_back(v.value_or(std::numeric_limits<double>::quiet_NaN()));
        return r;
      },
      py::arg("b"), "Order parameter r_K per sample from per-site series of <b_j>.");
}
