#include "aloha/harness.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace aloha {

using nlohmann::json;

namespace {

void apply_step_overrides(const json& j, XStepParams& p) {
  try {
    p.alpha = j.value("alpha", p.alpha);
    p.beta = j.value("beta", p.beta);
    p.phi = j.value("phi", p.phi);
    p.curvature_floor = j.value("curvature_floor", p.curvature_floor);
    p.prob_min = j.value("prob_min", p.prob_min);
    p.prob_max = j.value("prob_max", p.prob_max);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario parse error: ") + e.what());
  }
  if (p.alpha <= 0.0 || p.beta <= 0.0 || p.phi <= 0.0)
    throw ScenarioError("step sizes must be positive");
  if (!(p.prob_min > 0.0 && p.prob_min < p.prob_max && p.prob_max < 1.0))
    throw ScenarioError("probability bounds must satisfy 0 < min < max < 1");
}

Scenario scenario_from_json(const json& j) {
  Scenario sc;
  std::vector<NodeSpec> nodes;
  std::vector<Link> links;
  std::vector<Session> sessions;
  try {
    for (const auto& jn : j.at("nodes")) {
      NodeSpec n;
      n.id = jn.at("id").get<int>();
      n.energy_per_packet = jn.value("energy", 1.0);
      if (n.energy_per_packet <= 0.0)
        throw ScenarioError("node " + std::to_string(n.id) +
                            ": energy must be positive");
      nodes.push_back(n);
    }
    for (const auto& jl : j.at("links"))
      links.push_back({jl.at("tx").get<int>(), jl.at("rx").get<int>()});
    if (j.contains("sessions")) {
      for (const auto& js : j.at("sessions")) {
        Session s;
        s.id = js.at("id").get<int>();
        for (const auto& hop : js.at("route"))
          s.route.push_back({hop.at(0).get<int>(), hop.at(1).get<int>()});
        s.delay_limit = js.value("delay_limit", 0.0);
        sessions.push_back(s);
      }
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario parse error: ") + e.what());
  }

  try {
    sc.topology = Topology::build(std::move(nodes), std::move(links),
                                  std::move(sessions));
  } catch (const TopologyError& e) {
    throw ScenarioError(std::string("scenario validation error: ") + e.what());
  }
  sc.lambda1 = j.value("lambda1", 1.0);
  sc.lambda2 = j.value("lambda2", 1.0);
  if (j.contains("Dc")) sc.delay_constraint = j.at("Dc").get<double>();
  if (j.contains("xlayer_steps")) {
    apply_step_overrides(j.at("xlayer_steps"), sc.xlayer_gradient_steps);
    apply_step_overrides(j.at("xlayer_steps"), sc.xlayer_newton_steps);
  }
  if (j.contains("xlayer_newton_steps"))
    apply_step_overrides(j.at("xlayer_newton_steps"), sc.xlayer_newton_steps);
  sc.xlayer_init = j.value("xlayer_init", sc.xlayer_init);
  if (sc.xlayer_init != "uniform" && sc.xlayer_init != "maxmin")
    throw ScenarioError("xlayer_init must be \"uniform\" or \"maxmin\"");
  sc.xlayer_init_prob = j.value("xlayer_init_prob", sc.xlayer_init_prob);
  if (!(sc.xlayer_init_prob > 0.0 && sc.xlayer_init_prob < 1.0))
    throw ScenarioError("xlayer_init_prob must lie in (0, 1)");
  return sc;
}

}  // namespace

double Scenario::resolve_dc() const {
  if (delay_constraint) return *delay_constraint;
  return 4.0 * min_delay_constraint(topology).min_dc;
}

MacScenario Scenario::mac() const {
  MacScenario m;
  m.topology = topology;
  m.lambda1 = lambda1;
  m.lambda2 = lambda2;
  m.delay_constraint = resolve_dc();
  return m;
}

XLayerScenario Scenario::xlayer() const {
  XLayerScenario x;
  x.topology = topology;
  x.lambda1 = lambda1;
  x.lambda2 = lambda2;
  return x;
}

XIterState Scenario::xlayer_start() const {
  if (xlayer_init == "maxmin")
    return xlayer_initial_state(xlayer(), min_delay_constraint(topology).probs);
  return xlayer_initial_state(xlayer(), xlayer_init_prob);
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario parse error: ") + e.what());
  }
  return scenario_from_json(j);
}

Scenario parse_scenario_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario parse error: ") + e.what());
  }
  return scenario_from_json(j);
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["nodes"] = json::array();
  for (const NodeSpec& n : s.topology.nodes())
    j["nodes"].push_back({{"id", n.id}, {"energy", n.energy_per_packet}});
  j["links"] = json::array();
  for (const Link& l : s.topology.links())
    j["links"].push_back({{"tx", l.tx}, {"rx", l.rx}});
  j["sessions"] = json::array();
  for (const Session& se : s.topology.sessions()) {
    json route = json::array();
    for (const Link& hop : se.route) route.push_back({hop.tx, hop.rx});
    j["sessions"].push_back({{"id", se.id},
                             {"route", route},
                             {"delay_limit", se.delay_limit}});
  }
  j["lambda1"] = s.lambda1;
  j["lambda2"] = s.lambda2;
  if (s.delay_constraint) j["Dc"] = *s.delay_constraint;
  auto steps_json = [](const XStepParams& p) {
    return json{{"alpha", p.alpha},
                {"beta", p.beta},
                {"phi", p.phi},
                {"curvature_floor", p.curvature_floor},
                {"prob_min", p.prob_min},
                {"prob_max", p.prob_max}};
  };
  const json defaults = steps_json(XStepParams{});
  const json grad = steps_json(s.xlayer_gradient_steps);
  const json newt = steps_json(s.xlayer_newton_steps);
  if (grad != defaults) j["xlayer_steps"] = grad;
  if (newt != grad && newt != defaults) j["xlayer_newton_steps"] = newt;
  if (s.xlayer_init != "uniform") j["xlayer_init"] = s.xlayer_init;
  if (s.xlayer_init_prob != 0.1) j["xlayer_init_prob"] = s.xlayer_init_prob;
  return j.dump(2);
}

std::string mac_solution_to_json(const MacScenario& sc, const MacSolution& sol) {
  const Topology& t = sc.topology;
  json j;
  j["probs"] = sol.probs.link_probs;
  j["rates"] = sol.link_rates;
  j["energy"] = sol.energy;
  j["rate_utility"] = sol.rate_utility;
  j["objective"] = sol.objective;
  j["feasible"] = sol.feasible;
  j["status"] = to_string(sol.status);
  j["per_link"] = json::array();
  for (int li = 0; li < t.num_links(); ++li) {
    const double x = success_prob(t, sol.probs, li);
    const auto d = link_delay(x, sol.link_rates[li]);
    j["per_link"].push_back(
        {{"tx", t.link(li).tx},
         {"rx", t.link(li).rx},
         {"x", x},
         {"D", d ? json(*d) : json(nullptr)},
         {"ok", sol.link_ok.empty() ? true : bool(sol.link_ok[li])}});
  }
  return j.dump(2);
}

std::string xlayer_solution_to_json(const XLayerScenario& sc,
                                    const XLayerSolution& sol) {
  const Topology& t = sc.topology;
  json j;
  j["probs"] = sol.probs.link_probs;
  j["rates"] = sol.link_rates;
  j["energy"] = sol.energy;
  j["rate_utility"] = sol.rate_utility;
  j["objective"] = sol.objective;
  j["feasible"] = sol.feasible;
  j["status"] = to_string(sol.status);
  j["per_link"] = json::array();
  for (int li = 0; li < t.num_links(); ++li) {
    const double x = success_prob(t, sol.probs, li);
    const auto d = link_delay(x, sol.link_rates[li]);
    j["per_link"].push_back({{"tx", t.link(li).tx},
                             {"rx", t.link(li).rx},
                             {"x", x},
                             {"D", d ? json(*d) : json(nullptr)},
                             {"budget", sol.link_delay_budgets[li]}});
  }
  j["sessions"] = json::array();
  for (int s = 0; s < t.num_sessions(); ++s) {
    double budget_sum = 0.0;
    for (int li : t.route_links(s)) budget_sum += sol.link_delay_budgets[li];
    j["sessions"].push_back({{"id", s},
                             {"rate", sol.session_rates[s]},
                             {"delay_budget_sum", budget_sum}});
  }
  return j.dump(2);
}

SweepAxis parse_axis(const std::string& s) {
  if (s == "lambda_ratio") return SweepAxis::lambda_ratio;
  if (s == "Dc" || s == "dc") return SweepAxis::dc;
  if (s == "Ds" || s == "ds") return SweepAxis::ds;
  if (s == "network_size") return SweepAxis::network_size;
  throw ScenarioError("unknown sweep axis: " + s);
}

SweepSolver parse_solver(const std::string& s) {
  if (s == "centralized") return SweepSolver::centralized;
  if (s == "distributed") return SweepSolver::distributed;
  if (s == "suboptimal") return SweepSolver::suboptimal;
  if (s == "gradient") return SweepSolver::gradient;
  if (s == "newton") return SweepSolver::newton;
  throw ScenarioError("unknown solver: " + s);
}

namespace {

std::string solver_name(SweepSolver s) {
  switch (s) {
    case SweepSolver::centralized: return "centralized";
    case SweepSolver::distributed: return "distributed";
    case SweepSolver::suboptimal: return "suboptimal";
    case SweepSolver::gradient: return "gradient";
    case SweepSolver::newton: return "newton";
  }
  return "?";
}

SweepRow mac_row(const MacScenario&, const MacSolution& sol) {
  SweepRow row;
  row.status = to_string(sol.status);
  row.energy = sol.energy;
  row.rate_utility = sol.rate_utility;
  row.objective = sol.objective;
  row.feasible = sol.feasible;
  return row;
}

SweepRow xlayer_row(const XLayerSolution& sol) {
  SweepRow row;
  row.status = to_string(sol.status);
  row.energy = sol.energy;
  row.rate_utility = sol.rate_utility;
  row.objective = sol.objective;
  row.feasible = sol.feasible;
  return row;
}

SweepRow solve_point(const Scenario& base, const SweepSpec& spec,
                     double value) {
  Scenario sc = base;
  switch (spec.axis) {
    case SweepAxis::lambda_ratio:
      sc.lambda1 = value * sc.lambda2;
      break;
    case SweepAxis::dc:
      sc.delay_constraint = value;
      break;
    case SweepAxis::ds: {
      // uniform end-to-end limit across sessions
      std::vector<Session> sessions = sc.topology.sessions();
      for (Session& s : sessions) s.delay_limit = value;
      sc.topology = Topology::build(sc.topology.nodes(), sc.topology.links(),
                                    std::move(sessions));
      break;
    }
    case SweepAxis::network_size:
      break;  // handled by the caller
  }

  switch (spec.solver) {
    case SweepSolver::centralized: {
      // A session-delay sweep is a cross-layer question; the other axes
      // exercise the MAC problem.
      if (spec.axis == SweepAxis::ds) {
        const XLayerScenario x = sc.xlayer();
        return xlayer_row(solve_xlayer_centralized(x));
      }
      const MacScenario m = sc.mac();
      return mac_row(m, solve_mac_centralized(m));
    }
    case SweepSolver::suboptimal: {
      const MacScenario m = sc.mac();
      return mac_row(m, solve_mac_suboptimal(m));
    }
    case SweepSolver::distributed: {
      const MacScenario m = sc.mac();
      const MacSolution ref = solve_mac_centralized(m);
      const MacDistResult r =
          run_mac_distributed(m, MacStepParams{}, spec.max_iter, ref);
      SweepRow row = mac_row(m, r.solution);
      row.iterations = r.iterations;
      if (r.diverged) row.status = "diverged";
      return row;
    }
    case SweepSolver::gradient:
    case SweepSolver::newton: {
      const XLayerScenario x = sc.xlayer();
      const XLayerSolution ref = solve_xlayer_centralized(x);
      const XMethod method = spec.solver == SweepSolver::gradient
                                 ? XMethod::gradient
                                 : XMethod::newton;
      const XIterState start = sc.xlayer_start();
      const XDistResult r =
          run_xlayer(x, method, sc.xlayer_steps(method), spec.max_iter, ref,
                     sc.xlayer_init_prob, 0, &start);
      SweepRow row = xlayer_row(r.solution);
      row.iterations = r.iterations;
      if (r.diverged) row.status = "diverged";
      return row;
    }
  }
  throw ScenarioError("unreachable solver");
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  if (spec.grid.empty()) throw ScenarioError("sweep grid is empty");
  for (size_t i = 1; i < spec.grid.size(); ++i)
    if (!(spec.grid[i] > spec.grid[i - 1]))
      throw ScenarioError("sweep grid must be strictly increasing");

  std::vector<SweepRow> rows;
  if (spec.axis == SweepAxis::network_size) {
    for (double v : spec.grid) {
      SweepRow row;
      row.axis_value = v;
      try {
        const int n = static_cast<int>(v);
        const Topology t = spec.network_kind == "linear" ? Topology::linear(n)
                                                         : Topology::star(n);
        const MinDcResult r = min_delay_constraint(t);
        row.min_dc = r.min_dc;
        row.status = to_string(r.report.status);
        row.feasible = r.report.status == SolveStatus::optimal;
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      rows.push_back(row);
    }
    return rows;
  }

  const Scenario base = parse_scenario(spec.scenario_path);
  for (double v : spec.grid) {
    SweepRow row;
    row.axis_value = v;
    try {
      row = solve_point(base, spec, v);
      row.axis_value = v;
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const SweepSpec& spec,
                     const std::vector<SweepRow>& rows) {
  os << "axis,solver,value,status,feasible,energy,rate_utility,objective,"
        "min_dc,iterations\n";
  const char* axis = spec.axis == SweepAxis::lambda_ratio ? "lambda_ratio"
                     : spec.axis == SweepAxis::dc         ? "Dc"
                     : spec.axis == SweepAxis::ds         ? "Ds"
                                                          : "network_size";
  for (const SweepRow& r : rows)
    os << axis << "," << solver_name(spec.solver) << "," << r.axis_value << ","
       << r.status << "," << (r.feasible ? 1 : 0) << "," << r.energy << ","
       << r.rate_utility << "," << r.objective << "," << r.min_dc << ","
       << r.iterations << "\n";
}

SweepSpec parse_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open sweep config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("sweep config parse error: ") + e.what());
  }
  SweepSpec spec;
  spec.scenario_path = j.value("scenario", "");
  spec.axis = parse_axis(j.at("axis").get<std::string>());
  spec.solver = parse_solver(j.value("solver", "centralized"));
  spec.network_kind = j.value("network_kind", "star");
  spec.max_iter = j.value("max_iter", 20000);
  for (const auto& v : j.at("grid")) spec.grid.push_back(v.get<double>());
  spec.output_path = j.value("out", "");
  return spec;
}

ValidationResult validate_solution(const Scenario& scenario,
                                   const ProbabilityVector& probs,
                                   const std::vector<double>& link_rates,
                                   const std::vector<double>& session_rates,
                                   long slots, std::uint64_t seed,
                                   bool dummy_packets, double tolerance) {
  const Topology& t = scenario.topology;
  ValidationResult res;

  for (int li = 0; li < t.num_links(); ++li) {
    const double x = success_prob(t, probs, li);
    if (link_rates[li] >= x) res.unstable = true;
  }
  if (res.unstable) {
    res.pass = false;
    return res;
  }

  SimConfig cfg;
  cfg.topology = t;
  cfg.probs = probs;
  cfg.slots = slots;
  cfg.seed = seed;
  cfg.dummy_packets = dummy_packets;
  if (!session_rates.empty()) {
    cfg.mode = TrafficMode::per_session;
    cfg.session_rates = session_rates;
  } else {
    cfg.mode = TrafficMode::per_link;
    cfg.link_rates = link_rates;
  }
  const SimReport rep = simulate(cfg);
  res.rows = compare(rep, t, probs, link_rates);

  res.pass = true;
  for (const CompareRow& row : res.rows) {
    if (row.metric != "delay") continue;
    if (row.scope == "link") {
      // only links that carry traffic have a meaningful delay estimate
      const int li = row.id;
      if (link_rates[li] <= 10.0 * kRateFloor) continue;
      if (row.rel_dev > tolerance) res.pass = false;
    } else if (row.scope == "session") {
      if (row.rel_dev > tolerance) res.pass = false;
    }
  }
  return res;
}

}  // namespace aloha
