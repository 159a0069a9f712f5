#include "aloha/xlayer.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace aloha {

namespace {

struct Geom {
  std::vector<std::vector<int>> blockers;   // per link
  std::vector<std::vector<int>> out_links;  // per node
};

std::shared_ptr<Geom> make_geom(const Topology& t) {
  auto g = std::make_shared<Geom>();
  g->blockers.resize(t.num_links());
  for (int li = 0; li < t.num_links(); ++li) {
    const Link& l = t.link(li);
    g->blockers[li].push_back(l.rx);
    for (int nb : t.neighbors(l.rx))
      if (nb != l.tx) g->blockers[li].push_back(nb);
  }
  g->out_links.resize(t.num_nodes());
  for (int i = 0; i < t.num_nodes(); ++i) g->out_links[i] = t.out_links(i);
  return g;
}

double log_x(const Geom& g, int link_idx, const std::vector<double>& v,
             std::vector<double>* grad, double sign) {
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

}  // namespace

void XLayerScenario::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0 || (lambda1 == 0.0 && lambda2 == 0.0))
    throw std::invalid_argument("weights must be nonnegative, not both zero");
  if (topology.num_sessions() == 0)
    throw std::invalid_argument("cross-layer scenario needs sessions");
  for (const Session& s : topology.sessions()) {
    if (s.route.empty())
      throw std::invalid_argument("session with empty route");
    if (!(s.delay_limit > static_cast<double>(s.route.size())))
      throw std::invalid_argument(
          "session delay limit must exceed its hop count");
  }
}

ConvexProgram assemble_xlayer_problem(const XLayerScenario& scenario) {
  scenario.validate();
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  const int S = t.num_sessions();
  auto geom = make_geom(t);

  double max_ds = 0.0;
  for (const Session& s : t.sessions()) max_ds = std::max(max_ds, s.delay_limit);

  ConvexProgram prog;
  prog.dim = L + S + L;
  prog.lower.assign(L, 0.0);
  prog.upper.assign(L, 1.0 - kProbMargin);
  prog.lower.insert(prog.lower.end(), S, std::log(kRateFloor));
  prog.upper.insert(prog.upper.end(), S, std::log(1.0 - kProbMargin));
  for (int li = 0; li < L; ++li) {
    prog.lower.push_back(kBudgetFloor);
    prog.upper.push_back(t.sessions_on_link(li).empty() ? 1e6 : max_ds + 1.0);
  }

  std::vector<double> energies(L);
  for (int li = 0; li < L; ++li)
    energies[li] = t.node_energy(t.link(li).tx);

  prog.objective = [L, S, energies, l1 = scenario.lambda1,
                    l2 = scenario.lambda2](const std::vector<double>& v,
                                           std::vector<double>* grad) {
    if (grad) grad->assign(2 * L + S, 0.0);
    double val = 0.0;
    for (int li = 0; li < L; ++li) {
      val += l1 * energies[li] * v[li];
      if (grad) (*grad)[li] = l1 * energies[li];
    }
    for (int s = 0; s < S; ++s) {
      val -= l2 * v[L + s];
      if (grad) (*grad)[L + s] = -l2;
    }
    return val;
  };

  // Per link: log(1/D + (sum_s e^{z_s})(1 - 1/2D)) - log x <= 0.
  for (int li = 0; li < L; ++li) {
    const std::vector<int> sess = t.sessions_on_link(li);
    prog.constraints.push_back([geom, li, L, S, sess](
                                   const std::vector<double>& v,
                                   std::vector<double>* grad) {
      if (grad) grad->assign(2 * L + S, 0.0);
      const double D = v[L + S + li];
      double R = 0.0;
      for (int s : sess) R += std::exp(v[L + s]);
      const double u = R + (1.0 - R / 2.0) / D;
      double val = std::log(u);
      if (grad) {
        for (int s : sess)
          (*grad)[L + s] = std::exp(v[L + s]) * (1.0 - 1.0 / (2.0 * D)) / u;
        (*grad)[L + S + li] = -(1.0 - R / 2.0) / (D * D * u);
      }
      val += log_x(*geom, li, v, grad, -1.0);
      return val;
    });
  }

  // Per session: sum of budgets along the route <= D_s.
  for (int s = 0; s < S; ++s) {
    const std::vector<int> route = t.route_links(s);
    const double ds = t.sessions()[s].delay_limit;
    prog.constraints.push_back(
        [route, ds, L, S](const std::vector<double>& v,
                          std::vector<double>* grad) {
          if (grad) grad->assign(2 * L + S, 0.0);
          double sum = 0.0;
          for (int li : route) {
            sum += v[L + S + li];
            if (grad) (*grad)[L + S + li] = 1.0;
          }
          return sum - ds;
        });
  }

  // Node totals for nodes with several outgoing links (single-link nodes are
  // covered by the p box).
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
  return prog;
}

void fill_xlayer_metrics(const XLayerScenario& scenario, XLayerSolution& sol) {
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  sol.link_rates.assign(L, 0.0);
  for (int s = 0; s < t.num_sessions(); ++s)
    for (int li : t.route_links(s)) sol.link_rates[li] += sol.session_rates[s];

  sol.energy = 0.0;
  for (int i = 0; i < t.num_nodes(); ++i)
    sol.energy += t.node_energy(i) * sol.probs.node_prob(t, i);
  sol.rate_utility = 0.0;
  for (double y : sol.session_rates) sol.rate_utility += std::log(y);
  sol.objective =
      scenario.lambda1 * sol.energy - scenario.lambda2 * sol.rate_utility;
}

XLayerSolution solve_xlayer_centralized(const XLayerScenario& scenario) {
  scenario.validate();
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  const int S = t.num_sessions();

  ConvexProgram prog = assemble_xlayer_problem(scenario);

  // Interior start: max-min probabilities, tiny rates, budgets split evenly.
  const MinDcResult mindc = min_delay_constraint(t);
  prog.initial.assign(prog.dim, 0.0);
  for (int li = 0; li < L; ++li)
    prog.initial[li] =
        std::max(1e-6, mindc.probs.link_probs[li] * (1.0 - 1e-3));
  for (int s = 0; s < S; ++s) prog.initial[L + s] = std::log(2.0 * kRateFloor);
  for (int li = 0; li < L; ++li) {
    double budget = prog.upper[L + S + li] - 1.0;
    for (int s : t.sessions_on_link(li)) {
      const double share = t.sessions()[s].delay_limit /
                           static_cast<double>(t.route_links(s).size());
      budget = std::min(budget, share * (1.0 - 1e-3));
    }
    prog.initial[L + S + li] = std::max(budget, kBudgetFloor + 1e-6);
  }

  const SolveReport rep = barrier_solve(prog);

  XLayerSolution sol;
  sol.status = rep.status;
  sol.kkt_residual = rep.kkt_residual;
  sol.probs.link_probs.assign(rep.point.begin(), rep.point.begin() + L);
  sol.session_rates.resize(S);
  for (int s = 0; s < S; ++s) sol.session_rates[s] = std::exp(rep.point[L + s]);
  sol.link_delay_budgets.assign(rep.point.begin() + L + S, rep.point.end());
  fill_xlayer_metrics(scenario, sol);

  sol.feasible = rep.status == SolveStatus::optimal;
  for (int s = 0; s < S && sol.feasible; ++s) {
    double sum = 0.0;
    for (int li : t.route_links(s)) sum += sol.link_delay_budgets[li];
    if (sum > t.sessions()[s].delay_limit + 1e-6) sol.feasible = false;
  }
  for (int li = 0; li < L && sol.feasible; ++li) {
    if (t.sessions_on_link(li).empty()) continue;
    const double x = success_prob(t, sol.probs, li);
    const auto d = link_delay(x, sol.link_rates[li]);
    if (!d || *d > sol.link_delay_budgets[li] + 1e-6) sol.feasible = false;
  }
  return sol;
}

}  // namespace aloha
