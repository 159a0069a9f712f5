// Python bindings. Scenarios go in as JSON text, results come back as JSON
// text; the Python side round-trips through json.loads.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "aloha/harness.hpp"

namespace py = pybind11;
using namespace aloha;

namespace {

Scenario scenario_from_json(const std::string& text) {
  return parse_scenario_text(text);
}

std::string run_mindc(const std::string& scenario_json) {
  const Scenario sc = scenario_from_json(scenario_json);
  const MinDcResult r = min_delay_constraint(sc.topology);
  std::ostringstream os;
  os << "{\"min_dc\":" << r.min_dc << ",\"maxmin_x\":" << r.maxmin_x << "}";
  return os.str();
}

std::string run_mac(const std::string& scenario_json, const std::string& solver,
                    int max_iter) {
  const Scenario sc = scenario_from_json(scenario_json);
  const MacScenario m = sc.mac();
  if (solver == "centralized")
    return mac_solution_to_json(m, solve_mac_centralized(m));
  if (solver == "suboptimal")
    return mac_solution_to_json(m, solve_mac_suboptimal(m));
  if (solver == "distributed") {
    const MacSolution ref = solve_mac_centralized(m);
    const MacDistResult r = run_mac_distributed(m, MacStepParams{}, max_iter, ref);
    return mac_solution_to_json(m, r.solution);
  }
  throw std::invalid_argument("unknown solver: " + solver);
}

std::string run_xlayer_py(const std::string& scenario_json,
                          const std::string& solver, int max_iter) {
  const Scenario sc = scenario_from_json(scenario_json);
  const XLayerScenario x = sc.xlayer();
  if (solver == "centralized")
    return xlayer_solution_to_json(x, solve_xlayer_centralized(x));
  if (solver == "gradient" || solver == "newton") {
    const XLayerSolution ref = solve_xlayer_centralized(x);
    const XMethod method =
        solver == "gradient" ? XMethod::gradient : XMethod::newton;
    const XIterState start = sc.xlayer_start();
    const XDistResult r = run_xlayer(x, method, sc.xlayer_steps(method),
                                     max_iter, ref, sc.xlayer_init_prob, 0,
                                     &start);
    return xlayer_solution_to_json(x, r.solution);
  }
  throw std::invalid_argument("unknown solver: " + solver);
}

py::dict run_validate(const std::string& scenario_json, long slots,
                      std::uint64_t seed, double tol) {
  const Scenario sc = scenario_from_json(scenario_json);
  ProbabilityVector probs;
  std::vector<double> link_rates, session_rates;
  if (sc.topology.num_sessions() > 0) {
    const XLayerSolution sol = solve_xlayer_centralized(sc.xlayer());
    probs = sol.probs;
    link_rates = sol.link_rates;
    session_rates = sol.session_rates;
  } else {
    const MacSolution sol = solve_mac_centralized(sc.mac());
    probs = sol.probs;
    link_rates = sol.link_rates;
  }
  const ValidationResult res = validate_solution(
      sc, probs, link_rates, session_rates, slots, seed, true, tol);
  py::dict d;
  d["pass"] = res.pass;
  d["unstable"] = res.unstable;
  py::list rows;
  for (const auto& r : res.rows) {
    py::dict row;
    row["scope"] = r.scope;
    row["id"] = r.id;
    row["metric"] = r.metric;
    row["analytic"] = r.analytic;
    row["empirical"] = r.empirical;
    row["rel_dev"] = r.rel_dev;
    rows.append(row);
  }
  d["rows"] = rows;
  return d;
}

std::string gen_scenario(const std::string& kind, int n) {
  Scenario sc;
  sc.topology = kind == "star" ? Topology::star(n) : Topology::linear(n);
  return scenario_to_json(sc);
}

}  // namespace

PYBIND11_MODULE(_alohanet, m) {
  m.doc() = "Delay-constrained slotted-Aloha optimization core";

  m.def("mindc", &run_mindc, py::arg("scenario_json"),
        "Minimum feasible link delay constraint of the scenario's topology.");
  m.def("mac_opt", &run_mac, py::arg("scenario_json"),
        py::arg("solver") = "centralized", py::arg("max_iter") = 20000,
        "MAC optimization; solver is centralized, distributed or suboptimal.");
  m.def("xlayer_opt", &run_xlayer_py, py::arg("scenario_json"),
        py::arg("solver") = "centralized", py::arg("max_iter") = 20000,
        "Cross-layer optimization; solver is centralized, gradient or newton.");
  m.def("validate", &run_validate, py::arg("scenario_json"),
        py::arg("slots") = 200000, py::arg("seed") = 1, py::arg("tol") = 0.10,
        "Solve, simulate and compare; returns the deviation table.");
  m.def("gen", &gen_scenario, py::arg("kind"), py::arg("n"),
        "Scenario JSON for a star or linear network of n nodes.");
  m.def("link_delay",
        [](double x, double r) -> py::object {
          const auto d = link_delay(x, r);
          if (!d) return py::none();
          return py::float_(*d);
        },
        py::arg("success_prob"), py::arg("rate"),
        "Average link delay in slots, or None when the queue is unstable.");
}
