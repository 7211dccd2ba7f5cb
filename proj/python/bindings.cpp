#include "drdcbf/cli.hpp"
#include "drdcbf/drd_cbf.hpp"
#include "drdcbf/output_chain.hpp"
#include "drdcbf/safety_filter.hpp"
#include "drdcbf/scenario.hpp"
#include "drdcbf/sim.hpp"
#include "drdcbf/verify.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace drdcbf;

namespace {

py::dict trajectory_dict(const Trajectory& t) {
  const Eigen::Index n = static_cast<Eigen::Index>(t.size());
  const Eigen::Index nx = n > 0 ? t.states.front().size() : 0;
  Mat states(n, nx);
  Mat inputs(n, t.input_dim);
  Vec times(n), h(n), h0(n), v(n), e(n);
  std::vector<bool> active(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    times[k] = t.times[i];
    states.row(k) = t.states[i].transpose();
    inputs.row(k) = t.inputs[i].transpose();
    h[k] = t.cert[i].h;
    h0[k] = t.cert[i].h0;
    v[k] = t.cert[i].V;
    e[k] = t.cert[i].e_norm;
    active[i] = t.cert[i].active;
  }
  py::dict d;
  d["state_names"] = t.state_names;
  d["t"] = times;
  d["x"] = states;
  d["u"] = inputs;
  d["h"] = h;
  d["h0"] = h0;
  d["V"] = v;
  d["e_norm"] = e;
  d["active"] = active;
  return d;
}

ScenarioOverrides overrides(std::optional<std::uint64_t> seed, std::optional<double> dt,
                            std::optional<double> horizon) {
  return {seed, dt, horizon};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dual relative degree control barrier functions: simulation and verification";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<RankError>(m, "RankError", PyExc_ArithmeticError);
  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);

  m.def("ellipse_h0", &ellipse_h0, py::arg("y"), py::arg("center"), py::arg("weights"));
  m.def("obstacle_h", &obstacle_h, py::arg("y"), py::arg("obstacle"), py::arg("radius"));
  m.def("geofence_h", &geofence_h, py::arg("y"), py::arg("limit"), py::arg("axis") = 0);

  m.def(
      "check_parameter_condition",
      [](double gamma, double epsilon, double mu, double beta, double lambda) {
        const ParameterCheck c = check_parameter_condition(gamma, epsilon, mu, beta, lambda);
        return py::dict(py::arg("pass") = c.pass, py::arg("slack") = c.slack,
                        py::arg("threshold") = c.threshold);
      },
      py::arg("gamma"), py::arg("epsilon"), py::arg("mu"), py::arg("beta"), py::arg("lambda_"));

  m.def(
      "qp_filter",
      [](const Vec& u_nom, const Vec& a, double b) {
        const FilterResult r = cbf_qp_filter({u_nom, a, b});
        return py::dict(py::arg("u") = r.u, py::arg("active") = r.active,
                        py::arg("infeasible") = r.infeasible, py::arg("residual") = r.residual);
      },
      py::arg("u_nom"), py::arg("a"), py::arg("b"),
      "min |u - u_nom|^2 subject to a.u + b >= 0");

  m.def(
      "lemma_bound",
      [](int dim, int n, std::uint64_t seed) {
        const LemmaReport r = lemma_bound_sampler(dim, n, seed);
        return py::dict(py::arg("samples") = r.samples,
                        py::arg("bound_violations") = r.bound_violations,
                        py::arg("angle_violations") = r.angle_violations,
                        py::arg("min_bound_margin") = r.min_bound_margin);
      },
      py::arg("dim"), py::arg("n"), py::arg("seed") = 0);

  m.def("bundled_scenario", &bundled_scenario_path, py::arg("name"),
        "path of a bundled scenario file");

  m.def(
      "simulate",
      [](const std::string& config, std::optional<std::uint64_t> seed, std::optional<double> dt,
         std::optional<double> horizon) {
        const Scenario sc = load_scenario(config, overrides(seed, dt, horizon));
        std::vector<RunResult> runs;
        {
          py::gil_scoped_release release;
          runs = run_scenario(sc);
        }
        py::list out;
        for (const RunResult& r : runs) {
          py::dict d = trajectory_dict(r.filtered);
          d["label"] = r.label;
          d["monitor_pass"] = r.monitor.pass;
          d["min_h"] = r.monitor.min_h;
          d["min_h0"] = r.monitor.min_h0;
          if (r.unfiltered) d["unfiltered"] = trajectory_dict(*r.unfiltered);
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("dt") = py::none(),
      py::arg("horizon") = py::none(), "run a scenario file; one dict per run");

  m.def(
      "simulate_csv",
      [](const std::string& config, std::optional<std::uint64_t> seed) {
        const Scenario sc = load_scenario(config, overrides(seed, std::nullopt, std::nullopt));
        const auto runs = run_scenario(sc);
        std::ostringstream os;
        write_csv(runs.front().filtered, os);
        return os.str();
      },
      py::arg("config"), py::arg("seed") = py::none(), "CSV text of the first run");

  m.def(
      "verify",
      [](const std::string& config) {
        const Scenario sc = load_scenario(config);
        VerifyReport r;
        {
          py::gil_scoped_release release;
          r = run_verify(sc);
        }
        return r.to_json();
      },
      py::arg("config"), "run the scenario's verify suites; returns the JSON report");

  m.def(
      "audit",
      [](const std::string& csv_path, double gamma, double tol) {
        const AuditReport r = audit_trajectory(read_csv_file(csv_path), gamma, tol);
        return py::dict(py::arg("pass") = r.pass, py::arg("min_margin") = r.min_margin,
                        py::arg("decay_violations") = r.decay_violations,
                        py::arg("h0_violations") = r.h0_violations);
      },
      py::arg("csv_path"), py::arg("gamma"), py::arg("tol") = 1e-2);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"drdcbf"};
        for (const std::string& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "run the command-line tool; returns (exit code, stdout, stderr)");
}
