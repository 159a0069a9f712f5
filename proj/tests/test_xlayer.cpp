#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "aloha/xlayer.hpp"

using namespace aloha;
using doctest::Approx;

namespace {

// Two nodes, one link, one session over it.
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

// Forward chain 0 -> 1 -> 2 with one two-hop session.
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

// Same chain with a second single-hop session sharing link (0, 1).
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

std::vector<double> random_feasible(const ConvexProgram& prog,
                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  for (int tries = 0; tries < 100000; ++tries) {
    std::vector<double> v(prog.dim);
    for (int i = 0; i < prog.dim; ++i) {
      const double lo = std::max(prog.lower[i], -25.0);
      const double hi = std::min(prog.upper[i], 25.0);
      v[i] = lo + unif(rng) * (hi - lo);
    }
    bool ok = true;
    for (const auto& g : prog.constraints)
      if (g(v, nullptr) > -1e-3) { ok = false; break; }
    if (ok) return v;
  }
  throw std::runtime_error("no feasible point found");
}

void check_gradients(const ConvexProgram& prog, std::uint64_t seed,
                     int points) {
  std::mt19937_64 rng(seed);
  std::vector<double> g;
  for (int k = 0; k < points; ++k) {
    const std::vector<double> v = random_feasible(prog, rng);
    auto check_fn = [&](const std::function<double(const std::vector<double>&,
                                                   std::vector<double>*)>& fn) {
      fn(v, &g);
      std::vector<double> grad = g;
      for (int i = 0; i < prog.dim; ++i) {
        const double h = 1e-6 * (1.0 + std::abs(v[i]));
        std::vector<double> vp = v, vm = v;
        vp[i] += h;
        vm[i] -= h;
        const double fd = (fn(vp, nullptr) - fn(vm, nullptr)) / (2.0 * h);
        const double scale = std::max({1.0, std::abs(grad[i]), std::abs(fd)});
        CHECK(std::abs(grad[i] - fd) / scale < 1e-5);
      }
    };
    check_fn(prog.objective);
    for (const auto& c : prog.constraints) check_fn(c);
  }
}

}  // namespace

TEST_CASE("scenario validation rejects malformed inputs") {
  XLayerScenario sc = single_link(100.0);
  sc.lambda1 = 0.0;
  sc.lambda2 = 0.0;
  CHECK_THROWS_AS(sc.validate(), std::invalid_argument);

  // delay limit must exceed the hop count
  CHECK_THROWS_AS(single_link(1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(chain3(2.0).validate(), std::invalid_argument);
  CHECK_NOTHROW(chain3(2.5).validate());

  // sessions are mandatory in the cross-layer formulation
  XLayerScenario no_sessions;
  no_sessions.topology = Topology::linear(2);
  no_sessions.lambda2 = 1.0;
  CHECK_THROWS_AS(no_sessions.validate(), std::invalid_argument);
}

TEST_CASE("assembled program has the documented shape") {
  const ConvexProgram p1 = assemble_xlayer_problem(single_link(100.0));
  CHECK(p1.dim == 3);  // [p, z, D]
  CHECK(p1.constraints.size() == 2);  // link delay + session budget
  CHECK(p1.lower[2] == Approx(kBudgetFloor));
  CHECK(p1.upper[2] == Approx(101.0));

  const ConvexProgram p2 = assemble_xlayer_problem(chain3_shared(20.0));
  CHECK(p2.dim == 2 + 2 + 2);
  // 2 link-delay + 2 session; no node has two outgoing links
  CHECK(p2.constraints.size() == 4);
}

TEST_CASE("shared link aggregates both session rates") {
  const XLayerScenario sc = chain3_shared(20.0);
  const ConvexProgram prog = assemble_xlayer_problem(sc);
  const int L = 2, S = 2;
  // v = [p01, p12, z0, z1, D01, D12]
  std::vector<double> v = {0.5, 0.5, std::log(0.1), std::log(0.05), 5.0, 5.0};
  const double R = 0.1 + 0.05;
  const double u = R + (1.0 - R / 2.0) / 5.0;
  // x01 = p01 (1 - P1)(1 - P2); node 2 transmits nothing
  const double x01 = 0.5 * (1.0 - 0.5) * 1.0;
  CHECK(prog.constraints[0](v, nullptr) ==
        Approx(std::log(u) - std::log(x01)).epsilon(1e-12));
  // session constraints follow the link block: sum of budgets minus D_s
  CHECK(prog.constraints[L + 0](v, nullptr) == Approx(10.0 - 20.0));
  CHECK(prog.constraints[L + 1](v, nullptr) == Approx(5.0 - 20.0));
  (void)S;
}

TEST_CASE("single-link reduction matches the closed form") {
  // lambda1 = 0: transmit always, spend the whole budget, rate on the bound:
  // y = (x - 1/Ds) / (1 - 1/(2 Ds)) with x -> 1.
  const XLayerScenario sc = single_link(100.0);
  const XLayerSolution sol = solve_xlayer_centralized(sc);
  REQUIRE(sol.feasible);
  CHECK(sol.kkt_residual < 1e-6);
  CHECK(sol.probs.link_probs[0] == Approx(1.0).epsilon(1e-3));
  CHECK(sol.link_delay_budgets[0] == Approx(100.0).epsilon(1e-3));
  CHECK(sol.session_rates[0] == Approx(99.0 / 99.5).epsilon(1e-3));
  CHECK(sol.link_rates[0] == Approx(sol.session_rates[0]));
}

TEST_CASE("impossible per-hop budgets are reported infeasible") {
  // Two hops in 2.2 slots: each budget <= 1.2 forces x >= ~0.83 on both
  // links simultaneously, which the interference product forbids.
  const XLayerScenario sc = chain3(2.2);
  const XLayerSolution sol = solve_xlayer_centralized(sc);
  CHECK_FALSE(sol.feasible);
  CHECK(sol.status == SolveStatus::infeasible);
}

TEST_CASE("session delay bound is tight at the optimum") {
  const XLayerScenario sc = chain3(12.0);
  const XLayerSolution sol = solve_xlayer_centralized(sc);
  REQUIRE(sol.feasible);
  const double sum =
      sol.link_delay_budgets[0] + sol.link_delay_budgets[1];
  CHECK(sum == Approx(12.0).epsilon(1e-5));
  // per-link delays actually fit their budgets
  for (int li = 0; li < 2; ++li) {
    const double x = success_prob(sc.topology, sol.probs, li);
    const auto d = link_delay(x, sol.link_rates[li]);
    REQUIRE(d.has_value());
    CHECK(*d <= sol.link_delay_budgets[li] * (1.0 + 1e-6) + 1e-6);
  }
  // end-to-end check through the queueing model
  const auto pd = path_delay(sc.topology, sol.probs, sol.link_rates, 0);
  REQUIRE(pd.has_value());
  CHECK(*pd <= 12.0 * (1.0 + 1e-6));
}

TEST_CASE("relaxing the delay limit never worsens the objective") {
  double prev = 1e300;
  for (double ds : {6.0, 10.0, 20.0, 40.0, 80.0}) {
    const XLayerSolution sol = solve_xlayer_centralized(chain3(ds));
    REQUIRE(sol.feasible);
    CHECK(sol.objective <= prev + 1e-6);
    prev = sol.objective;
  }
}

TEST_CASE("assembled gradients match finite differences") {
  check_gradients(assemble_xlayer_problem(single_link(100.0)), 31, 20);
  check_gradients(assemble_xlayer_problem(chain3_shared(100.0)), 32, 10);
}

TEST_CASE("constraints are convex along random segments") {
  const ConvexProgram prog = assemble_xlayer_problem(chain3_shared(100.0));
  std::mt19937_64 rng(33);
  for (int k = 0; k < 30; ++k) {
    const std::vector<double> a = random_feasible(prog, rng);
    const std::vector<double> b = random_feasible(prog, rng);
    std::vector<double> mid(prog.dim);
    for (int i = 0; i < prog.dim; ++i) mid[i] = 0.5 * (a[i] + b[i]);
    for (const auto& g : prog.constraints)
      CHECK(g(mid, nullptr) <=
            0.5 * g(a, nullptr) + 0.5 * g(b, nullptr) + 1e-9);
    CHECK(prog.objective(mid, nullptr) <=
          0.5 * prog.objective(a, nullptr) +
              0.5 * prog.objective(b, nullptr) + 1e-9);
  }
}
