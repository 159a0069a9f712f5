#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "aloha/xlayer_dist.hpp"

using namespace aloha;
using doctest::Approx;

namespace {

XLayerScenario single_link(double ds, double l1 = 0.0, double l2 = 1.0) {
  XLayerScenario sc;
  Session s;
  s.id = 0;
  s.route = {{0, 1}};
  s.delay_limit = ds;
  sc.topology = Topology::build({{0, 1.0}, {1, 1.0}}, {{0, 1}}, {s});
  sc.lambda1 = l1;
  sc.lambda2 = l2;
  return sc;
}

XLayerScenario chain3(double ds, double l1 = 1.0, double l2 = 1.0) {
  XLayerScenario sc;
  Session s;
  s.id = 0;
  s.route = {{0, 1}, {1, 2}};
  s.delay_limit = ds;
  sc.topology = Topology::build({{0, 1.0}, {1, 1.0}, {2, 1.0}},
                                {{0, 1}, {1, 2}}, {s});
  sc.lambda1 = l1;
  sc.lambda2 = l2;
  return sc;
}

XLayerScenario chain3_shared(double ds) {
  XLayerScenario sc;
  Session s0;
  s0.id = 0;
  s0.route = {{0, 1}, {1, 2}};
  s0.delay_limit = ds;
  Session s1;
  s1.id = 1;
  s1.route = {{0, 1}};
  s1.delay_limit = ds;
  sc.topology = Topology::build({{0, 1.0}, {1, 1.0}, {2, 1.0}},
                                {{0, 1}, {1, 2}}, {s0, s1});
  sc.lambda1 = 1.0;
  sc.lambda2 = 1.0;
  return sc;
}

// Exact multipliers of an interior KKT point, recovered from the
// probability stationarity balance and the budget stationarity.
void kkt_multipliers(const XLayerScenario& sc, const XLayerSolution& sol,
                     std::vector<double>& mu, std::vector<double>& v) {
  const Topology& t = sc.topology;
  const int L = t.num_links();
  const int S = t.num_sessions();

  std::vector<double> x(L);
  for (int li = 0; li < L; ++li) x[li] = success_prob(t, sol.probs, li);

  mu.assign(L, 1.0);
  for (int pass = 0; pass < 20000; ++pass) {
    double delta = 0.0;
    for (int li = 0; li < L; ++li) {
      const int i = t.link(li).tx;
      double rhs = sc.lambda1 * t.node_energy(i);
      const double blocked = 1.0 - sol.probs.node_prob(t, i);
      for (int m = 0; m < L; ++m) {
        if (t.link(m).tx == i) continue;
        const int rx = t.link(m).rx;
        bool hears = rx == i;
        if (!hears) {
          const auto& nb = t.neighbors(rx);
          hears = std::binary_search(nb.begin(), nb.end(), i);
        }
        if (hears) rhs += mu[m] * x[m] / blocked;
      }
      const double nu = rhs * sol.probs.link_probs[li] / x[li];
      delta = std::max(delta, std::abs(nu - mu[li]));
      mu[li] = nu;
    }
    if (delta < 1e-15) break;
  }

  v.assign(S, 0.0);
  for (int s = 0; s < S; ++s) {
    double acc = 0.0;
    for (int li : t.route_links(s)) {
      double sum_y = 0.0;
      for (int s2 : t.sessions_on_link(li)) sum_y += sol.session_rates[s2];
      const double D = sol.link_delay_budgets[li];
      acc += mu[li] * (2.0 - sum_y) / (2.0 * D * D);
    }
    v[s] = acc / static_cast<double>(t.route_links(s).size());
  }
}

XIterState kkt_state(const XLayerScenario& sc, const XLayerSolution& sol) {
  XIterState st;
  st.probs = sol.probs;
  st.session_rates = sol.session_rates;
  st.budgets = sol.link_delay_budgets;
  kkt_multipliers(sc, sol, st.link_duals, st.session_duals);
  return st;
}

double state_drift(const XIterState& a, const XIterState& b) {
  double drift = 0.0;
  auto acc = [&](const std::vector<double>& u, const std::vector<double>& w) {
    for (size_t i = 0; i < u.size(); ++i)
      drift = std::max(drift,
                       std::abs(u[i] - w[i]) / std::max(1.0, std::abs(u[i])));
  };
  acc(a.probs.link_probs, b.probs.link_probs);
  acc(a.session_rates, b.session_rates);
  acc(a.budgets, b.budgets);
  acc(a.link_duals, b.link_duals);
  acc(a.session_duals, b.session_duals);
  return drift;
}

}  // namespace

TEST_CASE("budget_update closed forms, floor, and flags") {
  // interior minimizer sqrt(mu (2 - sum_y) / (2 sum_v))
  const BudgetUpdate b1 = budget_update(1.0, 1.0, 0.5, 0.5);
  CHECK(b1.budget == Approx(2.0).epsilon(1e-8));  // sqrt(1) floored to 1/x
  CHECK_FALSE(b1.flagged);

  const BudgetUpdate b2 = budget_update(2.0, 0.0, 1.0, 0.9);
  CHECK(b2.budget == Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK_FALSE(b2.flagged);

  // no session price: stationary point at infinity
  const BudgetUpdate b3 = budget_update(1.0, 1.0, 0.0, 0.5);
  CHECK(b3.flagged);
  CHECK(b3.budget == Approx(2.0).epsilon(1e-8));

  // overloaded link (sum_y >= 2) has a negative numerator
  const BudgetUpdate b4 = budget_update(1.0, 2.5, 1.0, 0.5);
  CHECK(b4.flagged);

  CHECK_THROWS_AS(budget_update(1.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("budget_update minimizes the link Lagrangian term") {
  const double mu = 1.7, sum_y = 0.8, sum_v = 0.35, x = 0.6;
  const double d_star = budget_update(mu, sum_y, sum_v, x).budget;
  auto phi = [&](double d) {
    return d * sum_v + mu * (1.0 - sum_y / 2.0) / d;
  };
  const double floor = (1.0 / x) * (1.0 + 1e-9);
  for (double d = floor; d < 10.0; d += 1e-3)
    CHECK(phi(d_star) <= phi(d) + 1e-9);
}

TEST_CASE("session_rate_update closed forms and flags") {
  const XStepParams params;
  const RateUpdate r1 = session_rate_update(0.1, 0.5, params);
  CHECK(r1.rate == Approx(0.2));
  CHECK_FALSE(r1.flagged);

  // lambda2/price beyond 1 projects to the box
  const RateUpdate r2 = session_rate_update(1.0, 0.5, params);
  CHECK(r2.rate == Approx(params.rate_max));
  CHECK_FALSE(r2.flagged);

  const RateUpdate r3 = session_rate_update(1.0, 0.0, params);
  CHECK(r3.rate == Approx(params.rate_max));
  CHECK(r3.flagged);
}

TEST_CASE("eval_gradients matches the constraint formulas") {
  const XLayerScenario sc = chain3_shared(20.0);
  XIterState st;
  st.probs.link_probs = {0.4, 0.3};
  st.session_rates = {0.1, 0.05};
  st.budgets = {6.0, 8.0};
  st.link_duals = {1.2, 0.7};
  st.session_duals = {0.1, 0.1};

  const XGradients g = eval_gradients(sc, st);
  const double x0 = success_prob(sc.topology, st.probs, 0);
  const double x1 = success_prob(sc.topology, st.probs, 1);
  // h = (1 - 1/2D) sum_y + 1/D - x
  CHECK(g.h[0] ==
        Approx((1.0 - 1.0 / 12.0) * 0.15 + 1.0 / 6.0 - x0).epsilon(1e-12));
  CHECK(g.h[1] ==
        Approx((1.0 - 1.0 / 16.0) * 0.1 + 1.0 / 8.0 - x1).epsilon(1e-12));
  // g = sum D - Ds
  CHECK(g.g[0] == Approx(14.0 - 20.0));
  CHECK(g.g[1] == Approx(6.0 - 20.0));

  // f = lambda1 e - d/dp [ sum_m mu_m x_m ], checked by central differences
  for (int li = 0; li < 2; ++li) {
    const double h = 1e-7;
    auto weighted_x = [&](double p) {
      XIterState pert = st;
      pert.probs.link_probs[li] = p;
      double acc = 0.0;
      for (int m = 0; m < 2; ++m)
        acc += st.link_duals[m] * success_prob(sc.topology, pert.probs, m);
      return acc;
    };
    const double p0 = st.probs.link_probs[li];
    const double fd = (weighted_x(p0 + h) - weighted_x(p0 - h)) / (2.0 * h);
    CHECK(g.f[li] == Approx(sc.lambda1 * 1.0 - fd).epsilon(1e-6));
  }
}

TEST_CASE("gradient step recomposes from the published update rules") {
  const XLayerScenario sc = chain3_shared(20.0);
  const XStepParams params;
  XIterState st;
  st.probs.link_probs = {0.4, 0.3};
  st.session_rates = {0.1, 0.05};
  st.budgets = {6.0, 8.0};
  st.link_duals = {1.2, 0.7};
  st.session_duals = {0.1, 0.1};

  const XIterState next = xlayer_step(st, sc, params, XMethod::gradient);
  const Topology& t = sc.topology;

  // primal refresh from the closed forms
  XIterState expect = st;
  for (int li = 0; li < 2; ++li) {
    const double x = success_prob(t, st.probs, li);
    double sum_y = 0.0, sum_v = 0.0;
    for (int s : t.sessions_on_link(li)) {
      sum_y += st.session_rates[s];
      sum_v += st.session_duals[s];
    }
    expect.budgets[li] =
        budget_update(st.link_duals[li], sum_y, sum_v, x).budget;
  }
  for (int s = 0; s < 2; ++s) {
    double price = 0.0;
    for (int li : t.route_links(s))
      price += st.link_duals[li] * (1.0 - 1.0 / (2.0 * st.budgets[li]));
    expect.session_rates[s] =
        session_rate_update(sc.lambda2, price, params).rate;
  }
  CHECK(next.budgets[0] == Approx(expect.budgets[0]).epsilon(1e-14));
  CHECK(next.budgets[1] == Approx(expect.budgets[1]).epsilon(1e-14));
  CHECK(next.session_rates[0] == Approx(expect.session_rates[0]).epsilon(1e-14));
  CHECK(next.session_rates[1] == Approx(expect.session_rates[1]).epsilon(1e-14));

  // duals stepped at the refreshed primal
  const XGradients grads = eval_gradients(sc, expect);
  for (int li = 0; li < 2; ++li)
    CHECK(next.link_duals[li] ==
          Approx(std::max(0.0, st.link_duals[li] + params.alpha * grads.h[li]))
              .epsilon(1e-14));
  for (int s = 0; s < 2; ++s)
    CHECK(next.session_duals[s] ==
          Approx(std::max(0.0,
                          st.session_duals[s] + params.beta * grads.g[s]))
              .epsilon(1e-14));

  // probabilities stepped with the fresh prices but the old probs
  XIterState feval = expect;
  feval.link_duals = next.link_duals;
  feval.session_duals = next.session_duals;
  const XGradients fgrads = eval_gradients(sc, feval);
  for (int li = 0; li < 2; ++li)
    CHECK(next.probs.link_probs[li] ==
          Approx(project_interval(
                     st.probs.link_probs[li] - params.phi * fgrads.f[li],
                     params.prob_min, params.prob_max))
              .epsilon(1e-14));
}

TEST_CASE("dual subgradient arithmetic") {
  // mu' = [mu + alpha h]+ : h = 0.02, mu = 1, alpha = 0.1 -> 1.002
  CHECK(std::max(0.0, 1.0 + 0.1 * 0.02) == Approx(1.002));
  // v' = [v + beta g]+ : g = -5, v = 0.1, beta = 0.05 -> 0
  CHECK(std::max(0.0, 0.1 + 0.05 * -5.0) == 0.0);
}

TEST_CASE("newton secant ratio rescales the dual step") {
  const XLayerScenario sc = single_link(100.0);
  const Topology& t = sc.topology;
  XStepParams params;
  params.alpha = 0.1;

  XIterState st;
  st.probs.link_probs = {0.8};
  st.session_rates = {0.3};
  st.budgets = {50.0};
  st.link_duals = {1.0};
  st.session_duals = {0.01};
  st.have_history = true;
  st.prev_mu = {0.8};   // d mu = 0.2
  st.prev_v = {0.01};   // unchanged -> fallback for v
  st.prev_p = st.probs.link_probs;
  st.prev_g = {0.0};
  st.prev_f = {0.0};

  // refreshed primal, mirroring the step order
  XIterState eval = st;
  const double x = success_prob(t, st.probs, 0);
  eval.budgets[0] = budget_update(1.0, 0.3, 0.01, x).budget;
  const double price = 1.0 * (1.0 - 1.0 / (2.0 * st.budgets[0]));
  eval.session_rates[0] = session_rate_update(sc.lambda2, price, params).rate;
  const double h = eval_gradients(sc, eval).h[0];

  // choose prev_h so the secant slope is exactly 0.5
  st.prev_h = {h - 0.1};
  const XIterState next = xlayer_step(st, sc, params, XMethod::newton);
  const double ratio = 0.1 / 0.2;
  CHECK(next.link_duals[0] ==
        Approx(std::max(0.0, 1.0 + params.alpha * h / ratio)).epsilon(1e-12));

  // worked secant example: h -0.2 -> -0.1 as mu 0.8 -> 1.0 gives slope 0.5
  // and mu' = 1 + 0.1 * (-0.1) / 0.5 = 0.98
  CHECK(1.0 + 0.1 * (-0.1) / ((-0.1 - -0.2) / (1.0 - 0.8)) == Approx(0.98));
}

TEST_CASE("newton falls back to gradient steps bit for bit") {
  const XLayerScenario sc = chain3(12.0);
  XStepParams guarded;
  guarded.curvature_floor = 1e18;  // every secant ratio rejected
  XIterState a = xlayer_initial_state(sc, 0.1);
  XIterState b = a;
  for (int k = 0; k < 50; ++k) {
    a = xlayer_step(a, sc, XStepParams{}, XMethod::gradient);
    b = xlayer_step(b, sc, guarded, XMethod::newton);
    for (int li = 0; li < 2; ++li) {
      CHECK(a.probs.link_probs[li] == b.probs.link_probs[li]);
      CHECK(a.budgets[li] == b.budgets[li]);
      CHECK(a.link_duals[li] == b.link_duals[li]);
    }
    CHECK(a.session_rates[0] == b.session_rates[0]);
    CHECK(a.session_duals[0] == b.session_duals[0]);
  }
}

TEST_CASE("newton iteration without history is a gradient step") {
  const XLayerScenario sc = chain3(12.0);
  const XIterState st = xlayer_initial_state(sc, 0.1);
  REQUIRE_FALSE(st.have_history);
  const XIterState a = xlayer_step(st, sc, XStepParams{}, XMethod::gradient);
  const XIterState b = xlayer_step(st, sc, XStepParams{}, XMethod::newton);
  for (int li = 0; li < 2; ++li) {
    CHECK(a.probs.link_probs[li] == b.probs.link_probs[li]);
    CHECK(a.link_duals[li] == b.link_duals[li]);
  }
}

TEST_CASE("the centralized optimum is a fixed point of both methods") {
  // one session per link: the route-mean dual recovery is exact there
  const XLayerScenario sc = chain3(12.0);
  const XLayerSolution sol = solve_xlayer_centralized(sc);
  REQUIRE(sol.feasible);
  REQUIRE(sol.kkt_residual < 1e-6);
  const XIterState st = kkt_state(sc, sol);

  for (XMethod m : {XMethod::gradient, XMethod::newton}) {
    const XIterState next = xlayer_step(st, sc, XStepParams{}, m);
    CHECK(state_drift(st, next) < 1e-8);
  }
}

TEST_CASE("already-optimal start converges within a couple of rounds") {
  const XLayerScenario sc = chain3(12.0);
  const XLayerSolution sol = solve_xlayer_centralized(sc);
  REQUIRE(sol.feasible);
  const XIterState st = kkt_state(sc, sol);
  const XDistResult r = run_xlayer(sc, XMethod::gradient, XStepParams{}, 100,
                                   sol, 0.1, 0, &st);
  CHECK(r.converged);
  CHECK(r.converged_iteration <= 2);
}

TEST_CASE("oversized steps trip the divergence flag") {
  const XLayerScenario sc = chain3(12.0);
  const XLayerSolution sol = solve_xlayer_centralized(sc);
  REQUIRE(sol.feasible);
  XStepParams params;
  params.alpha = 20.0;
  params.beta = 20.0;
  params.phi = 5.0;
  const XDistResult r =
      run_xlayer(sc, XMethod::gradient, params, 5000, sol, 0.1);
  CHECK_FALSE(r.converged);
  CHECK(r.diverged);
}
