// Command-line front end: solvers, simulator, sweeps and validation over
// scenario JSON files.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "aloha/harness.hpp"

using namespace aloha;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitInvalidInput = 2;
constexpr int kExitDivergence = 3;

void write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream os(out_path);
    os << text << "\n";
  }
}

void write_trace(const std::string& path, const IterationTrace& trace) {
  if (path.empty()) return;
  std::ofstream os(path);
  trace.write_csv(os);
}

std::string resolve_preset(const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::exists(name)) return name;
  const std::vector<std::string> roots = {
      "data/presets/", "../data/presets/",
      std::getenv("ALOHANET_DATA") ? std::string(std::getenv("ALOHANET_DATA")) + "/presets/"
                                   : ""};
  for (const auto& root : roots) {
    if (root.empty()) continue;
    const std::string candidate = root + name + ".json";
    if (fs::exists(candidate)) return candidate;
  }
  throw ScenarioError("preset not found: " + name);
}

struct OperatingPoint {
  ProbabilityVector probs;
  std::vector<double> link_rates;
  std::vector<double> session_rates;  // empty in per-link mode
};

OperatingPoint load_solution(const std::string& path, const Topology& t) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open solution file: " + path);
  json j;
  in >> j;
  OperatingPoint op;
  op.probs.link_probs = j.at("probs").get<std::vector<double>>();
  op.link_rates = j.at("rates").get<std::vector<double>>();
  if (j.contains("sessions"))
    for (const auto& js : j.at("sessions"))
      op.session_rates.push_back(js.at("rate").get<double>());
  if (static_cast<int>(op.probs.link_probs.size()) != t.num_links() ||
      static_cast<int>(op.link_rates.size()) != t.num_links())
    throw ScenarioError("solution does not match the scenario topology");
  return op;
}

OperatingPoint solve_operating_point(const Scenario& sc) {
  OperatingPoint op;
  if (sc.topology.num_sessions() > 0) {
    const XLayerScenario x = sc.xlayer();
    const XLayerSolution sol = solve_xlayer_centralized(x);
    if (!sol.feasible) throw ScenarioError("operating point solve infeasible");
    op.probs = sol.probs;
    op.link_rates = sol.link_rates;
    op.session_rates = sol.session_rates;
  } else {
    const MacScenario m = sc.mac();
    const MacSolution sol = solve_mac_centralized(m);
    if (!sol.feasible) throw ScenarioError("operating point solve infeasible");
    op.probs = sol.probs;
    op.link_rates = sol.link_rates;
  }
  return op;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-constrained utility optimization for multihop "
               "slotted-Aloha networks"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, trace_path, solution_path;
  std::uint64_t seed = 1;
  int max_iter = 20000;
  double tol = 0.10;

  // mindc
  auto* cmd_mindc = app.add_subcommand("mindc", "Minimum feasible link delay constraint");
  cmd_mindc->add_option("--scenario", scenario_path)->required();
  cmd_mindc->add_option("--out", out_path);

  // mac-opt
  auto* cmd_mac = app.add_subcommand("mac-opt", "Delay-constrained MAC optimization");
  std::string mac_solver = "centralized";
  cmd_mac->add_option("--scenario", scenario_path)->required();
  cmd_mac->add_option("--solver", mac_solver)
      ->check(CLI::IsMember({"centralized", "distributed", "suboptimal"}));
  cmd_mac->add_option("--out", out_path);
  cmd_mac->add_option("--trace", trace_path);
  cmd_mac->add_option("--max-iter", max_iter);

  // xlayer-opt
  auto* cmd_x = app.add_subcommand("xlayer-opt", "Cross-layer optimization with end-to-end delay constraints");
  std::string x_solver = "centralized";
  cmd_x->add_option("--scenario", scenario_path)->required();
  cmd_x->add_option("--solver", x_solver)
      ->check(CLI::IsMember({"centralized", "gradient", "newton"}));
  cmd_x->add_option("--out", out_path);
  cmd_x->add_option("--trace", trace_path);
  cmd_x->add_option("--max-iter", max_iter);

  // simulate
  auto* cmd_sim = app.add_subcommand("simulate", "Discrete-event slotted-Aloha simulation");
  long slots = 1000000;
  bool no_dummy = false;
  cmd_sim->add_option("--scenario", scenario_path)->required();
  cmd_sim->add_option("--solution", solution_path,
                      "Operating point JSON; solved centrally when omitted");
  cmd_sim->add_option("--slots", slots);
  cmd_sim->add_option("--seed", seed);
  cmd_sim->add_flag("--no-dummy", no_dummy, "Silence empty queues");
  cmd_sim->add_option("--out", out_path);

  // validate
  auto* cmd_val = app.add_subcommand("validate", "Simulate the solved operating point and compare with the analytic model");
  cmd_val->add_option("--scenario", scenario_path)->required();
  cmd_val->add_option("--solution", solution_path);
  cmd_val->add_option("--slots", slots);
  cmd_val->add_option("--seed", seed);
  cmd_val->add_option("--tol", tol, "Relative deviation tolerance");
  cmd_val->add_flag("--no-dummy", no_dummy);
  cmd_val->add_option("--out", out_path);

  // sweep
  auto* cmd_sweep = app.add_subcommand("sweep", "Grid sweeps over weights, delay constraints or network size");
  std::string preset;
  cmd_sweep->add_option("--preset", preset, "Preset name (fig2..fig7) or config path")->required();
  cmd_sweep->add_option("--scenario", scenario_path, "Override the preset's scenario");
  cmd_sweep->add_option("--out", out_path);
  cmd_sweep->add_option("--max-iter", max_iter);

  // gen
  auto* cmd_gen = app.add_subcommand("gen", "Generate a star or linear scenario file");
  std::string kind = "star";
  int n = 4;
  cmd_gen->add_option("--kind", kind)->check(CLI::IsMember({"star", "linear"}));
  cmd_gen->add_option("--n", n)->required();
  cmd_gen->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_mindc->parsed()) {
      const Scenario sc = parse_scenario(scenario_path);
      const MinDcResult r = min_delay_constraint(sc.topology);
      json j;
      j["min_dc"] = r.min_dc;
      j["maxmin_x"] = r.maxmin_x;
      j["probs"] = r.probs.link_probs;
      j["status"] = to_string(r.report.status);
      write_output(out_path, j.dump(2));
      return r.report.status == SolveStatus::optimal ? kExitOk : kExitInfeasible;
    }

    if (cmd_mac->parsed()) {
      const Scenario sc = parse_scenario(scenario_path);
      const MacScenario m = sc.mac();
      MacSolution sol;
      if (mac_solver == "centralized") {
        sol = solve_mac_centralized(m);
      } else if (mac_solver == "suboptimal") {
        sol = solve_mac_suboptimal(m);
      } else {
        const MacSolution ref = solve_mac_centralized(m);
        if (!ref.feasible) {
          write_output(out_path, mac_solution_to_json(m, ref));
          return kExitInfeasible;
        }
        const MacDistResult r =
            run_mac_distributed(m, MacStepParams{}, max_iter, ref);
        write_trace(trace_path, r.trace);
        write_output(out_path, mac_solution_to_json(m, r.solution));
        if (r.diverged) return kExitDivergence;
        return r.converged ? kExitOk : kExitInfeasible;
      }
      write_output(out_path, mac_solution_to_json(m, sol));
      return sol.feasible ? kExitOk : kExitInfeasible;
    }

    if (cmd_x->parsed()) {
      const Scenario sc = parse_scenario(scenario_path);
      const XLayerScenario x = sc.xlayer();
      if (x_solver == "centralized") {
        const XLayerSolution sol = solve_xlayer_centralized(x);
        write_output(out_path, xlayer_solution_to_json(x, sol));
        return sol.feasible ? kExitOk : kExitInfeasible;
      }
      const XLayerSolution ref = solve_xlayer_centralized(x);
      if (!ref.feasible) {
        write_output(out_path, xlayer_solution_to_json(x, ref));
        return kExitInfeasible;
      }
      const XMethod method =
          x_solver == "gradient" ? XMethod::gradient : XMethod::newton;
      const XIterState start = sc.xlayer_start();
      const XDistResult r = run_xlayer(x, method, sc.xlayer_steps(method),
                                       max_iter, ref, sc.xlayer_init_prob, 0,
                                       &start);
      write_trace(trace_path, r.trace);
      write_output(out_path, xlayer_solution_to_json(x, r.solution));
      if (r.diverged) return kExitDivergence;
      return r.converged ? kExitOk : kExitInfeasible;
    }

    if (cmd_sim->parsed() || cmd_val->parsed()) {
      const Scenario sc = parse_scenario(scenario_path);
      const OperatingPoint op = solution_path.empty()
                                    ? solve_operating_point(sc)
                                    : load_solution(solution_path, sc.topology);
      if (cmd_val->parsed()) {
        const ValidationResult res = validate_solution(
            sc, op.probs, op.link_rates, op.session_rates, slots, seed,
            !no_dummy, tol);
        std::ostringstream os;
        write_compare_csv(os, res.rows);
        os << (res.unstable ? "result,UNSTABLE"
                            : (res.pass ? "result,PASS" : "result,FAIL"));
        write_output(out_path, os.str());
        return res.pass ? kExitOk : kExitInfeasible;
      }
      SimConfig cfg;
      cfg.topology = sc.topology;
      cfg.probs = op.probs;
      cfg.slots = slots;
      cfg.seed = seed;
      cfg.dummy_packets = !no_dummy;
      if (!op.session_rates.empty()) {
        cfg.mode = TrafficMode::per_session;
        cfg.session_rates = op.session_rates;
      } else {
        cfg.mode = TrafficMode::per_link;
        cfg.link_rates = op.link_rates;
      }
      const SimReport rep = simulate(cfg);
      std::ostringstream os;
      write_compare_csv(os, compare(rep, sc.topology, op.probs, op.link_rates));
      write_output(out_path, os.str());
      return kExitOk;
    }

    if (cmd_sweep->parsed()) {
      SweepSpec spec = parse_sweep_config(resolve_preset(preset));
      if (!scenario_path.empty()) spec.scenario_path = scenario_path;
      if (!out_path.empty()) spec.output_path = out_path;
      const std::vector<SweepRow> rows = run_sweep(spec);
      std::ostringstream os;
      write_sweep_csv(os, spec, rows);
      write_output(spec.output_path, os.str());
      return kExitOk;
    }

    if (cmd_gen->parsed()) {
      Scenario sc;
      sc.topology = kind == "star" ? Topology::star(n) : Topology::linear(n);
      write_output(out_path, scenario_to_json(sc));
      return kExitOk;
    }
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const TopologyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }
  return kExitOk;
}
