#include "aloha/xlayer_dist.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aloha {

std::string to_string(XMethod m) {
  return m == XMethod::gradient ? "gradient" : "newton";
}

BudgetUpdate budget_update(double mu, double sum_rates,
                           double sum_session_duals, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("budget_update: x must be positive");
  const double floor = (1.0 / x) * (1.0 + 1e-9);
  BudgetUpdate out;
  if (sum_session_duals <= 0.0 || sum_rates >= 2.0) {
    out.budget = floor;  // stationary point at infinity or negative numerator
    out.flagged = true;
    return out;
  }
  const double d =
      std::sqrt(mu * (2.0 - sum_rates) / (2.0 * sum_session_duals));
  out.budget = std::max(d, floor);
  return out;
}

RateUpdate session_rate_update(double lambda2, double price_sum,
                               const XStepParams& params) {
  RateUpdate out;
  if (price_sum <= 0.0) {
    out.rate = params.rate_max;
    out.flagged = true;
    return out;
  }
  out.rate = project_interval(lambda2 / price_sum, params.rate_min,
                              params.rate_max);
  return out;
}

XGradients eval_gradients(const XLayerScenario& scenario,
                          const XIterState& state) {
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  const int S = t.num_sessions();

  XGradients out;
  out.h.resize(L);
  out.g.resize(S);
  out.f.resize(L);

  std::vector<double> x(L), node_probs = state.probs.node_probs(t);
  for (int li = 0; li < L; ++li) x[li] = success_prob(t, state.probs, li);

  for (int li = 0; li < L; ++li) {
    const double D = state.budgets[li];
    double sum_y = 0.0;
    for (int s : t.sessions_on_link(li)) sum_y += state.session_rates[s];
    out.h[li] = (1.0 - 1.0 / (2.0 * D)) * sum_y + 1.0 / D - x[li];
  }
  for (int s = 0; s < S; ++s) {
    double sum_d = 0.0;
    for (int li : t.route_links(s)) sum_d += state.budgets[li];
    out.g[s] = sum_d - t.sessions()[s].delay_limit;
  }

  // f_ij = lambda1 e_i - sum_{(s,t)} mu_st dx_st/dp_ij. Nonzero partials:
  // the link's own (x/p) and, for links whose receiver hears node i,
  // -x/(1 - P_i).
  for (int li = 0; li < L; ++li) {
    const int i = t.link(li).tx;
    double f = scenario.lambda1 * t.node_energy(i);
    f -= state.link_duals[li] * x[li] / state.probs.link_probs[li];
    const double blocked = 1.0 - node_probs[i];
    for (int m = 0; m < L; ++m) {
      if (t.link(m).tx == i) continue;
      const int rx = t.link(m).rx;
      bool hears_i = rx == i;
      if (!hears_i) {
        const auto& nb = t.neighbors(rx);
        hears_i = std::binary_search(nb.begin(), nb.end(), i);
      }
      if (hears_i) f += state.link_duals[m] * x[m] / blocked;
    }
    out.f[li] = f;
  }
  return out;
}

XIterState xlayer_step(const XIterState& state, const XLayerScenario& scenario,
                       const XStepParams& params, XMethod method) {
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  const int S = t.num_sessions();

  XIterState next = state;
  std::vector<double> x(L);
  for (int li = 0; li < L; ++li) x[li] = success_prob(t, state.probs, li);

  // (26): per-link delay budgets from previous rates and session prices
  for (int li = 0; li < L; ++li) {
    const auto& sess = t.sessions_on_link(li);
    if (sess.empty()) {
      next.budgets[li] = std::max((1.0 / x[li]) * (1.0 + 1e-9), kBudgetFloor);
      continue;
    }
    double sum_y = 0.0, sum_v = 0.0;
    for (int s : sess) {
      sum_y += state.session_rates[s];
      sum_v += state.session_duals[s];
    }
    next.budgets[li] =
        budget_update(state.link_duals[li], sum_y, sum_v, x[li]).budget;
  }
  // (27): session rates from previous budgets and link prices
  for (int s = 0; s < S; ++s) {
    double price = 0.0;
    for (int li : t.route_links(s))
      price += state.link_duals[li] *
               (1.0 - 1.0 / (2.0 * state.budgets[li]));
    next.session_rates[s] = session_rate_update(scenario.lambda2, price, params).rate;
  }

  // (28)-(29) / (31)-(32): dual steps at the refreshed primal point
  XIterState eval = next;
  const XGradients grads = eval_gradients(scenario, eval);
  const bool use_secant = method == XMethod::newton && state.have_history;

  for (int li = 0; li < L; ++li) {
    const double h = grads.h[li];
    double step = params.alpha * h;
    if (use_secant) {
      const double dmu = state.link_duals[li] - state.prev_mu[li];
      if (std::abs(dmu) >= params.secant_min_delta) {
        const double ratio = (h - state.prev_h[li]) / dmu;
        if (ratio > params.curvature_floor) step = params.alpha * h / ratio;
      }
    }
    next.link_duals[li] = std::max(0.0, state.link_duals[li] + step);
  }
  for (int s = 0; s < S; ++s) {
    const double g = grads.g[s];
    double step = params.beta * g;
    if (use_secant) {
      const double dv = state.session_duals[s] - state.prev_v[s];
      if (std::abs(dv) >= params.secant_min_delta) {
        const double ratio = (g - state.prev_g[s]) / dv;
        if (ratio > params.curvature_floor) step = params.beta * g / ratio;
      }
    }
    next.session_duals[s] = std::max(0.0, state.session_duals[s] + step);
  }

  // (30) / (33): probability step with the fresh prices
  XIterState feval = next;
  feval.probs = state.probs;
  const XGradients fgrads = eval_gradients(scenario, feval);
  for (int li = 0; li < L; ++li) {
    const double f = fgrads.f[li];
    double step = params.phi * f;
    if (use_secant) {
      const double dp = state.probs.link_probs[li] - state.prev_p[li];
      if (std::abs(dp) >= params.secant_min_delta) {
        const double ratio = (f - state.prev_f[li]) / dp;
        if (ratio > params.curvature_floor) step = params.phi * f / ratio;
      }
    }
    next.probs.link_probs[li] = project_interval(
        state.probs.link_probs[li] - step, params.prob_min, params.prob_max);
  }
  for (int i = 0; i < t.num_nodes(); ++i) {
    const double pn = next.probs.node_prob(t, i);
    if (pn > 1.0 - kProbMargin) {
      const double scale = (1.0 - kProbMargin) / pn;
      for (int li : t.out_links(i)) next.probs.link_probs[li] *= scale;
    }
  }

  next.prev_h = grads.h;
  next.prev_g = grads.g;
  next.prev_f = fgrads.f;
  next.prev_mu = state.link_duals;
  next.prev_v = state.session_duals;
  next.prev_p = state.probs.link_probs;
  next.have_history = true;
  next.iteration = state.iteration + 1;
  return next;
}

XIterState xlayer_initial_state(const XLayerScenario& scenario,
                                double initial_prob) {
  const Topology& t = scenario.topology;
  ProbabilityVector probs;
  probs.link_probs.assign(t.num_links(), initial_prob);
  for (int i = 0; i < t.num_nodes(); ++i) {
    const double pn = probs.node_prob(t, i);
    if (pn > 1.0 - kProbMargin)
      for (int li : t.out_links(i))
        probs.link_probs[li] *= (1.0 - kProbMargin) / pn;
  }
  return xlayer_initial_state(scenario, probs);
}

XIterState xlayer_initial_state(const XLayerScenario& scenario,
                                const ProbabilityVector& initial_probs) {
  const Topology& t = scenario.topology;
  const int L = t.num_links();
  const int S = t.num_sessions();

  XIterState st;
  st.probs = initial_probs;

  std::vector<double> x(L), node_probs = st.probs.node_probs(t);
  for (int li = 0; li < L; ++li) x[li] = success_prob(t, st.probs, li);

  // Link prices that zero the probability gradients at the start:
  // mu_ij x_ij / p_ij = lambda1 e_i + sum_{heard} mu_m x_m / (1 - P_i).
  // This message-passing fixed point uses only neighborhood quantities and
  // keeps the first rounds from stampeding the probabilities into a bound.
  st.link_duals.resize(L);
  for (int li = 0; li < L; ++li)
    st.link_duals[li] = scenario.lambda1 * t.node_energy(t.link(li).tx) *
                        st.probs.link_probs[li] / x[li];
  for (int pass = 0; pass < 200; ++pass) {
    std::vector<double> next(L);
    for (int li = 0; li < L; ++li) {
      const int i = t.link(li).tx;
      double rhs = scenario.lambda1 * t.node_energy(i);
      for (int m = 0; m < L; ++m) {
        if (t.link(m).tx == i) continue;
        const int rx = t.link(m).rx;
        bool hears_i = rx == i;
        if (!hears_i) {
          const auto& nb = t.neighbors(rx);
          hears_i = std::binary_search(nb.begin(), nb.end(), i);
        }
        if (hears_i)
          rhs += st.link_duals[m] * x[m] / (1.0 - node_probs[i]);
      }
      next[li] = rhs * st.probs.link_probs[li] / x[li];
    }
    st.link_duals = next;
  }

  // Budgets: an even split of each crossing session's delay limit, never
  // below the achievability floor; links with no sessions sit at the floor.
  st.budgets.assign(L, 0.0);
  for (int li = 0; li < L; ++li) {
    const double floor = (1.0 / x[li]) * (1.0 + 1e-9);
    double b = floor;
    for (int s : t.sessions_on_link(li)) {
      const double split = t.sessions()[s].delay_limit /
                           static_cast<double>(t.route_links(s).size());
      b = (b == floor) ? split : std::min(b, split);
    }
    st.budgets[li] = std::max(b, floor);
  }

  // Rates priced off the balanced duals, then session duals from the
  // stationarity of the budget subproblem so the first budget refresh
  // reproduces roughly the even split.
  auto price_rates = [&] {
    for (int s = 0; s < S; ++s) {
      double price = 0.0;
      for (int li : t.route_links(s))
        price += st.link_duals[li] * (1.0 - 1.0 / (2.0 * st.budgets[li]));
      st.session_rates[s] =
          std::min(0.9, scenario.lambda2 / std::max(price, 1e-12));
    }
  };
  st.session_rates.assign(S, 0.0);
  price_rates();
  // When the balanced duals are too cheap for lambda2 (rates would overload
  // links and flag the budget subproblem), scale every link price up until
  // the busiest link carries at most 1/2 in initial rates.
  // The balanced duals know nothing about lambda2: when they are too cheap
  // the priced rates overload the links (initial h > 0) and the first dual
  // transient stampedes the probabilities. Scale all prices up until every
  // link starts delay-feasible with a 10% margin.
  for (int pass = 0; pass < 60; ++pass) {
    double worst = 0.0;
    bool capped = false;
    for (int li = 0; li < L; ++li) {
      if (t.sessions_on_link(li).empty()) continue;
      double sum_y = 0.0;
      for (int s : t.sessions_on_link(li)) sum_y += st.session_rates[s];
      const double load = sum_y * (1.0 - 1.0 / (2.0 * st.budgets[li]));
      const double capacity =
          std::max(0.9 * (x[li] - 1.0 / st.budgets[li]), 1e-9);
      worst = std::max(worst, load / capacity);
    }
    for (double y : st.session_rates) capped = capped || y >= 0.9;
    if (worst <= 1.0) break;
    const double scale = capped ? std::max(worst, 2.0) : worst;
    for (double& mu : st.link_duals) mu *= scale;
    price_rates();
  }
  st.session_duals.assign(S, 0.0);
  for (int s = 0; s < S; ++s) {
    double v = 0.0;
    for (int li : t.route_links(s)) {
      double sum_y = 0.0;
      for (int s2 : t.sessions_on_link(li)) sum_y += st.session_rates[s2];
      v += st.link_duals[li] * (2.0 - sum_y) /
           (2.0 * st.budgets[li] * st.budgets[li]);
    }
    st.session_duals[s] = v / static_cast<double>(t.route_links(s).size());
  }
  return st;
}

XDistResult run_xlayer(const XLayerScenario& scenario, XMethod method,
                       const XStepParams& params, int max_iter,
                       const XLayerSolution& reference, double initial_prob,
                       int tracked_link, const XIterState* initial_state) {
  scenario.validate();
  const Topology& t = scenario.topology;

  XIterState state = initial_state ? *initial_state
                                   : xlayer_initial_state(scenario, initial_prob);

  XDistResult res;
  res.method = method;
  res.trace.columns = {"y1_err_pct", "p_err_pct", "utility_err_pct"};

  double min_util_err = 1e300;
  int below_run = -1;  // first index of the current sub-1% run
  int last_improve = 0;
  for (int it = 0; it < max_iter; ++it) {
    state = xlayer_step(state, scenario, params, method);

    double utility = 0.0;
    for (double y : state.session_rates) utility += std::log(y);
    const double y_err = error_pct(state.session_rates[0],
                                   reference.session_rates[0]);
    const double p_err = error_pct(state.probs.link_probs[tracked_link],
                                   reference.probs.link_probs[tracked_link]);
    const double u_err = error_pct(utility, reference.rate_utility);
    res.trace.add_row({y_err, p_err, u_err});

    const bool below = y_err < 1.0 && p_err < 1.0 && u_err < 1.0;
    if (below) {
      if (below_run < 0) below_run = it;
      if (it - below_run >= 9) {
        res.converged = true;
        res.converged_iteration = below_run + 1;  // 1-based round count
        break;
      }
    } else {
      below_run = -1;
    }

    if (u_err < min_util_err * 0.99) last_improve = it;
    min_util_err = std::min(min_util_err, u_err);
    if (it > 20 && u_err > 10.0 * std::max(min_util_err, 1e-9) &&
        u_err > 100.0) {
      res.diverged = true;
      break;
    }
  }
  res.iterations = static_cast<int>(res.trace.rows.size());
  // sustained oscillation: a long run whose error stopped improving early
  // and is still far from the reference has left the convergent regime
  if (!res.converged && !res.diverged && res.iterations >= 200 &&
      res.iterations - last_improve > res.iterations / 2 &&
      res.trace.rows.back()[2] > 10.0)
    res.diverged = true;

  res.solution.probs = state.probs;
  res.solution.session_rates = state.session_rates;
  res.solution.link_delay_budgets = state.budgets;
  fill_xlayer_metrics(scenario, res.solution);
  res.solution.status =
      res.converged ? SolveStatus::optimal : SolveStatus::max_iter;

  res.solution.feasible = true;
  for (int s = 0; s < t.num_sessions(); ++s) {
    double sum = 0.0;
    for (int li : t.route_links(s)) sum += state.budgets[li];
    if (sum > t.sessions()[s].delay_limit * (1.0 + 1e-2))
      res.solution.feasible = false;
  }
  return res;
}

}  // namespace aloha
