#include "aloha/mac.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace aloha {

namespace {

// Nodes whose (1 - P) factor enters x_ij: the receiver j plus N_j \ {i}.
std::vector<int> blocking_nodes(const Topology& t, int link_idx) {
  const Link& l = t.link(link_idx);
  std::vector<int> out{l.rx};
  for (int nb : t.neighbors(l.rx))
    if (nb != l.tx) out.push_back(nb);
  return out;
}

struct LinkGeom {
  std::vector<std::vector<int>> blockers;   // per link: blocking node set
  std::vector<std::vector<int>> out_links;  // per node
};

std::shared_ptr<LinkGeom> make_geom(const Topology& t) {
  auto g = std::make_shared<LinkGeom>();
  g->blockers.resize(t.num_links());
  for (int li = 0; li < t.num_links(); ++li)
    g->blockers[li] = blocking_nodes(t, li);
  g->out_links.resize(t.num_nodes());
  for (int i = 0; i < t.num_nodes(); ++i) g->out_links[i] = t.out_links(i);
  return g;
}

// log x_ij as a function of the p block v[0..L-1]; accumulates the gradient.
double log_x(const LinkGeom& g, int link_idx, const std::vector<double>& v,
             std::vector<double>* grad, double sign = 1.0) {
  double val = std::log(v[link_idx]);
  if (grad) (*grad)[link_idx] += sign / v[link_idx];
  for (int node : g.blockers[link_idx]) {
    double pn = 0.0;
    for (int m : g.out_links[node]) pn += v[m];
    val += std::log(1.0 - pn);
    if (grad)
      for (int m : g.out_links[node]) (*grad)[m] += -sign / (1.0 - pn);
  }
  return sign * val;
}

// Single-out-link nodes are covered by the p box; only multi-link nodes need
// an explicit total-probability constraint.
void add_node_cap_constraints(ConvexProgram& prog, const Topology& t) {
  for (int i = 0; i < t.num_nodes(); ++i) {
    const auto& out = t.out_links(i);
    if (out.size() < 2) continue;
    prog.constraints.push_back(
        [out, dim = prog.dim](const std::vector<double>& v,
                              std::vector<double>* grad) {
          if (grad) grad->assign(dim, 0.0);
          double pn = 0.0;
          for (int m : out) {
            pn += v[m];
            if (grad) (*grad)[m] = 1.0;
          }
          return pn - (1.0 - kProbMargin);
        });
  }
}

}  // namespace

void MacScenario::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0 || (lambda1 == 0.0 && lambda2 == 0.0))
    throw std::invalid_argument("weights must be nonnegative, not both zero");
  if (!(delay_constraint > 1.0))
    throw std::invalid_argument("delay constraint must exceed one slot");
  if (topology.num_links() == 0)
    throw std::invalid_argument("scenario has no links");
}

ConvexProgram assemble_maxmin_problem(const Topology& t) {
  const int L = t.num_links();
  auto geom = make_geom(t);

  ConvexProgram prog;
  prog.dim = L + 1;
  prog.lower.assign(L, 0.0);
  prog.upper.assign(L, 1.0 - kProbMargin);
  prog.lower.push_back(-30.0);
  prog.upper.push_back(1.0);

  prog.objective = [L](const std::vector<double>& v, std::vector<double>* grad) {
    if (grad) {
      grad->assign(L + 1, 0.0);
      (*grad)[L] = -1.0;
    }
    return -v[L];
  };
  for (int li = 0; li < L; ++li) {
    prog.constraints.push_back(
        [geom, li, L](const std::vector<double>& v, std::vector<double>* grad) {
          if (grad) grad->assign(L + 1, 0.0);
          const double lx = log_x(*geom, li, v, grad, -1.0);
          if (grad) (*grad)[L] += 1.0;
          return v[L] + lx;  // z - log x <= 0
        });
  }
  add_node_cap_constraints(prog, t);

  prog.initial.assign(L + 1, 0.0);
  for (int i = 0; i < t.num_nodes(); ++i)
    for (int m : t.out_links(i))
      prog.initial[m] = 0.4 / static_cast<double>(t.out_links(i).size());
  double min_lx = 0.0;
  for (int li = 0; li < L; ++li)
    min_lx = std::min(min_lx, log_x(*geom, li, prog.initial, nullptr));
  prog.initial[L] = min_lx - 1.0;
  return prog;
}

ConvexProgram assemble_mac_problem(const MacScenario& scenario) {
  scenario.validate();
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  auto geom = make_geom(t);

  const double Dc = scenario.delay_constraint;
  const double A = 1.0 - 1.0 / (2.0 * Dc);
  const double B = 1.0 / Dc;

  ConvexProgram prog;
  prog.dim = 2 * L;
  prog.lower.assign(L, 0.0);
  prog.upper.assign(L, 1.0 - kProbMargin);
  prog.lower.insert(prog.lower.end(), L, std::log(kRateFloor));
  prog.upper.insert(prog.upper.end(), L, std::log(1.0 - kProbMargin));

  std::vector<double> energies(L);
  for (int li = 0; li < L; ++li)
    energies[li] = t.node_energy(t.link(li).tx);

  prog.objective = [L, energies, l1 = scenario.lambda1, l2 = scenario.lambda2](
                       const std::vector<double>& v, std::vector<double>* grad) {
    if (grad) grad->assign(2 * L, 0.0);
    double val = 0.0;
    for (int li = 0; li < L; ++li) {
      val += l1 * energies[li] * v[li] - l2 * v[L + li];
      if (grad) {
        (*grad)[li] = l1 * energies[li];
        (*grad)[L + li] = -l2;
      }
    }
    return val;
  };

  // log(1/Dc + e^z (1 - 1/2Dc)) - log x_ij <= 0  (delay bound of the link)
  for (int li = 0; li < L; ++li) {
    prog.constraints.push_back(
        [geom, li, L, A, B](const std::vector<double>& v,
                            std::vector<double>* grad) {
          if (grad) grad->assign(2 * L, 0.0);
          const double ez = std::exp(v[L + li]);
          const double u = B + A * ez;
          double val = std::log(u);
          if (grad) (*grad)[L + li] = A * ez / u;
          val += log_x(*geom, li, v, grad, -1.0);
          return val;
        });
  }
  add_node_cap_constraints(prog, t);
  return prog;
}

MinDcResult min_delay_constraint(const Topology& t) {
  if (t.num_links() == 0)
    throw std::invalid_argument("topology has no links");
  ConvexProgram prog = assemble_maxmin_problem(t);
  MinDcResult res;
  res.report = barrier_solve(prog);
  const int L = t.num_links();
  res.maxmin_x = std::exp(res.report.point[L]);
  res.min_dc = 1.0 / res.maxmin_x;
  res.probs.link_probs.assign(res.report.point.begin(),
                              res.report.point.begin() + L);
  return res;
}

void fill_mac_metrics(const MacScenario& scenario, MacSolution& sol) {
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  sol.energy = 0.0;
  for (int i = 0; i < t.num_nodes(); ++i)
    sol.energy += t.node_energy(i) * sol.probs.node_prob(t, i);
  sol.rate_utility = 0.0;
  for (int li = 0; li < L; ++li)
    sol.rate_utility += std::log(sol.link_rates[li]);
  sol.objective =
      scenario.lambda1 * sol.energy - scenario.lambda2 * sol.rate_utility;

  sol.link_ok.assign(L, true);
  for (int li = 0; li < L; ++li) {
    const double x = success_prob(t, sol.probs, li);
    const auto d = link_delay(x, sol.link_rates[li]);
    // relative slack: (x - r) suffers cancellation when the delay sits
    // exactly on the bound, which inflates the absolute error at large Dc
    if (!d || *d > scenario.delay_constraint * (1.0 + 1e-9) + 1e-6)
      sol.link_ok[li] = false;
  }
}

MacSolution solve_mac_centralized(const MacScenario& scenario) {
  scenario.validate();
  const Topology& t = scenario.topology;
  const int L = t.num_links();

  MacSolution sol;
  const MinDcResult mindc = min_delay_constraint(t);
  if (scenario.delay_constraint < mindc.min_dc * (1.0 + 1e-6)) {
    sol.status = SolveStatus::infeasible;
    sol.probs = mindc.probs;
    sol.link_rates.assign(L, kRateFloor);
    fill_mac_metrics(scenario, sol);
    sol.feasible = false;
    return sol;
  }

  ConvexProgram prog = assemble_mac_problem(scenario);
  prog.initial.assign(2 * L, 0.0);
  for (int li = 0; li < L; ++li) {
    prog.initial[li] =
        std::max(1e-6, mindc.probs.link_probs[li] * (1.0 - 1e-3));
    prog.initial[L + li] = std::log(2.0 * kRateFloor);
  }

  const SolveReport rep = barrier_solve(prog);
  sol.status = rep.status;
  sol.kkt_residual = rep.kkt_residual;
  sol.probs.link_probs.assign(rep.point.begin(), rep.point.begin() + L);
  sol.link_rates.resize(L);
  for (int li = 0; li < L; ++li)
    sol.link_rates[li] = std::exp(rep.point[L + li]);
  fill_mac_metrics(scenario, sol);
  sol.feasible = rep.status == SolveStatus::optimal;
  for (bool ok : sol.link_ok) sol.feasible = sol.feasible && ok;
  return sol;
}

MacSolution solve_mac_suboptimal(const MacScenario& scenario) {
  scenario.validate();
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  auto geom = make_geom(t);

  // Delay-unconstrained base: same objective, delay bound relaxed to r <= x.
  MacScenario base = scenario;
  ConvexProgram prog = assemble_mac_problem(base);
  prog.constraints.clear();
  for (int li = 0; li < L; ++li) {
    prog.constraints.push_back(
        [geom, li, L](const std::vector<double>& v, std::vector<double>* grad) {
          if (grad) grad->assign(2 * L, 0.0);
          double val = v[L + li];  // z - log x <= 0
          if (grad) (*grad)[L + li] = 1.0;
          val += log_x(*geom, li, v, grad, -1.0);
          return val;
        });
  }
  add_node_cap_constraints(prog, t);

  const SolveReport rep = barrier_solve(prog);

  MacSolution sol;
  sol.status = rep.status;
  sol.kkt_residual = rep.kkt_residual;
  sol.probs.link_probs.assign(rep.point.begin(), rep.point.begin() + L);
  sol.link_rates.resize(L);
  const double Dc = scenario.delay_constraint;
  bool all_ok = true;
  for (int li = 0; li < L; ++li) {
    const double x = success_prob(t, sol.probs, li);
    const double r = (Dc * x - 1.0) / (Dc - 0.5);
    if (r <= 0.0) {
      sol.link_rates[li] = kRateFloor;  // Dc <= 1/x: bound unsatisfiable here
      all_ok = false;
    } else {
      sol.link_rates[li] = r;
    }
  }
  fill_mac_metrics(scenario, sol);
  if (!all_ok)
    for (int li = 0; li < L; ++li)
      if (sol.link_rates[li] == kRateFloor) sol.link_ok[li] = false;
  sol.feasible = rep.status == SolveStatus::optimal && all_ok;
  for (bool ok : sol.link_ok) sol.feasible = sol.feasible && ok;
  return sol;
}

}  // namespace aloha
