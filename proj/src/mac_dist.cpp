#include "aloha/mac_dist.hpp"

#include <algorithm>
#include <cmath>

namespace aloha {

double rate_update(double mu, double lambda2, double delay_constraint,
                   const MacStepParams& params) {
  if (!(delay_constraint > 0.5))
    throw std::invalid_argument("delay constraint must exceed 0.5 slots");
  if (mu <= lambda2) return params.rate_max;  // no interior stationary point
  const double r = lambda2 / ((mu - lambda2) * (delay_constraint - 0.5));
  return project_interval(r, params.rate_min, params.rate_max);
}

NodeLocalDuals gather_node_duals(const Topology& t, int node,
                                 const std::vector<double>& duals) {
  NodeLocalDuals out;
  for (int li : t.out_links(node)) out.own.push_back(duals.at(li));
  const auto& nbrs = t.neighbors(node);
  for (int li = 0; li < t.num_links(); ++li) {
    const Link& l = t.link(li);
    if (l.tx == node) continue;
    const bool hits_node =
        l.rx == node ||
        std::binary_search(nbrs.begin(), nbrs.end(), l.rx);
    if (hits_node) out.interference_sum += duals[li];
  }
  return out;
}

NodeProbUpdate node_prob_update(double lambda1_e, const NodeLocalDuals& duals,
                                const MacStepParams& params) {
  NodeProbUpdate out;
  double own_sum = 0.0;
  for (double m : duals.own) own_sum += m;

  const double a = lambda1_e;
  const double b = duals.interference_sum + own_sum + lambda1_e;
  const double c = own_sum;

  double P;
  if (a < 1e-15) {
    if (b < 1e-15) {
      P = params.prob_min * static_cast<double>(duals.own.size());
      out.clamped = true;
    } else {
      P = c / b;  // linear case
    }
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
      P = params.prob_max;
      out.clamped = true;
    } else {
      P = (b - std::sqrt(disc)) / (2.0 * a);  // the root in (0, 1)
    }
  }
  if (!(P > 0.0 && P < 1.0)) {
    P = project_interval(P, params.prob_min, params.prob_max);
    out.clamped = true;
  }
  out.node_prob = P;

  const double denom_base =
      lambda1_e + duals.interference_sum / (1.0 - std::min(P, 1.0 - 1e-12));
  out.link_probs.resize(duals.own.size());
  double sum = 0.0;
  for (size_t k = 0; k < duals.own.size(); ++k) {
    double p = denom_base > 0.0 ? duals.own[k] / denom_base : params.prob_min;
    p = project_interval(p, params.prob_min, params.prob_max);
    out.link_probs[k] = p;
    sum += p;
  }
  if (sum > 1.0 - kProbMargin) {
    const double scale = (1.0 - kProbMargin) / sum;
    for (double& p : out.link_probs) p *= scale;
    sum *= scale;
  }
  out.node_prob = sum;
  return out;
}

std::vector<double> dual_update(const MacIterState& state,
                                const MacScenario& scenario, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const Topology& t = scenario.topology;
  const double Dc = scenario.delay_constraint;
  const double A = 1.0 - 1.0 / (2.0 * Dc);
  const double B = 1.0 / Dc;

  std::vector<double> next(t.num_links());
  for (int li = 0; li < t.num_links(); ++li) {
    const double x = success_prob(t, state.probs, li);
    const double sub = std::log(A * state.rates[li] + B) - std::log(x);
    next[li] = std::max(0.0, state.duals[li] + alpha * sub);
  }
  return next;
}

MacIterState mac_distributed_step(const MacIterState& state,
                                  const MacScenario& scenario,
                                  const MacStepParams& params) {
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  MacIterState next = state;
  // (14): per-link rates from the local dual
  for (int li = 0; li < L; ++li)
    next.rates[li] = rate_update(state.duals[li], scenario.lambda2,
                                 scenario.delay_constraint, params);
  // (16)/(17): per-node probabilities
  for (int i = 0; i < t.num_nodes(); ++i) {
    const auto& out = t.out_links(i);
    if (out.empty()) continue;
    const NodeLocalDuals local = gather_node_duals(t, i, state.duals);
    const NodeProbUpdate upd =
        node_prob_update(scenario.lambda1 * t.node_energy(i), local, params);
    for (size_t k = 0; k < out.size(); ++k)
      next.probs.link_probs[out[k]] = upd.link_probs[k];
  }
  // (18): dual ascent on the delay constraints
  next.duals = dual_update(next, scenario, params.alpha);
  next.iteration = state.iteration + 1;
  return next;
}

MacIterState mac_initial_state(const MacScenario& scenario,
                               const MacStepParams& params,
                               double initial_prob) {
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  MacIterState state;
  state.probs.link_probs.assign(L, initial_prob);
  for (int i = 0; i < t.num_nodes(); ++i) {
    const double pn = state.probs.node_prob(t, i);
    if (pn > 1.0 - kProbMargin)
      for (int li : t.out_links(i))
        state.probs.link_probs[li] *= (1.0 - kProbMargin) / pn;
  }
  state.duals.assign(L, std::max(1.0, 2.0 * scenario.lambda2));
  state.rates.assign(L, params.rate_min);
  return state;
}

MacDistResult run_mac_distributed(const MacScenario& scenario,
                                  const MacStepParams& params, int max_iter,
                                  const MacSolution& reference,
                                  double initial_prob, int tracked_link,
                                  const MacIterState* initial_state) {
  scenario.validate();
  const Topology& t = scenario.topology;
  const int L = t.num_links();

  MacIterState state = initial_state
                           ? *initial_state
                           : mac_initial_state(scenario, params, initial_prob);

  MacDistResult res;
  res.trace.columns = {"objective_err_pct", "p_err_pct", "r_err_pct"};

  double min_obj_err = 1e300;
  int last_improve = 0;
  for (int it = 0; it < max_iter; ++it) {
    state = mac_distributed_step(state, scenario, params);

    double energy = 0.0, utility = 0.0;
    for (int i = 0; i < t.num_nodes(); ++i)
      energy += t.node_energy(i) * state.probs.node_prob(t, i);
    for (int li = 0; li < L; ++li) utility += std::log(state.rates[li]);
    const double obj = scenario.lambda1 * energy - scenario.lambda2 * utility;

    const double obj_err = error_pct(obj, reference.objective);
    const double p_err = error_pct(state.probs.link_probs[tracked_link],
                                   reference.probs.link_probs[tracked_link]);
    const double r_err = error_pct(state.rates[tracked_link],
                                   reference.link_rates[tracked_link]);
    res.trace.add_row({obj_err, p_err, r_err});

    if (obj_err < min_obj_err * 0.99) last_improve = it;
    min_obj_err = std::min(min_obj_err, obj_err);
    if (it > 10 && obj_err > 10.0 * std::max(min_obj_err, 1e-9) &&
        obj_err > 100.0) {
      res.diverged = true;
      break;
    }
    if (obj_err < 1.0 && p_err < 1.0 && r_err < 1.0) {
      res.converged = true;
      break;
    }
  }
  res.iterations = static_cast<int>(res.trace.rows.size());
  // sustained oscillation: a long run whose error stopped improving early
  // and is still far from the reference has left the convergent regime
  if (!res.converged && !res.diverged && res.iterations >= 200 &&
      res.iterations - last_improve > res.iterations / 2 &&
      res.trace.rows.back()[0] > 10.0)
    res.diverged = true;

  res.solution.probs = state.probs;
  res.solution.link_rates = state.rates;
  res.solution.status =
      res.converged ? SolveStatus::optimal : SolveStatus::max_iter;
  fill_mac_metrics(scenario, res.solution);
  res.solution.feasible = res.converged;
  for (bool ok : res.solution.link_ok)
    res.solution.feasible = res.solution.feasible && ok;
  return res;
}

}  // namespace aloha
