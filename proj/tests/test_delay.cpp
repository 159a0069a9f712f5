#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "aloha/delay.hpp"

using namespace aloha;
using doctest::Approx;

namespace {

Topology pair_topology() {
  return Topology::build({{0, 1.0}, {1, 1.0}}, {{0, 1}, {1, 0}}, {});
}

}  // namespace

TEST_CASE("service stats: direct substitution") {
  auto s = service_stats(1.0);
  CHECK(s.mean == Approx(1.0));
  CHECK(s.variance == Approx(0.0));
  s = service_stats(0.5);
  CHECK(s.mean == Approx(2.0));
  CHECK(s.variance == Approx(2.0));
  s = service_stats(0.25);
  CHECK(s.mean == Approx(4.0));
  CHECK(s.variance == Approx(12.0));
  CHECK_THROWS_AS(service_stats(0.0), std::invalid_argument);
  CHECK_THROWS_AS(service_stats(1.5), std::invalid_argument);
}

TEST_CASE("link delay: closed form values") {
  CHECK(*link_delay(1.0, 0.0) == Approx(1.0));
  CHECK(*link_delay(0.5, 0.0) == Approx(2.0));
  CHECK(*link_delay(0.5, 0.25) == Approx(3.5));
  CHECK(!link_delay(0.5, 0.5).has_value());  // rho = 1, unstable
  CHECK(!link_delay(0.3, 0.4).has_value());
  CHECK_THROWS_AS(link_delay(0.0, 0.1), std::invalid_argument);
}

TEST_CASE("closed form equals the two-moment composition") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const double x = 1e-3 + (1.0 - 1e-3) * unif(rng);
    const double r = x * unif(rng) * 0.999;
    const double a = *link_delay(x, r);
    const double b = *link_delay_pk(x, r);
    CHECK(std::abs(a - b) / a < 1e-12);
  }
}

TEST_CASE("link delay monotone: decreasing in x, increasing in r") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double x = 0.05 + 0.9 * unif(rng);
    const double r = x * 0.9 * unif(rng);
    const double h = 1e-7;
    const double d = *link_delay(x, r);
    CHECK(*link_delay(x + h, r) < d);
    CHECK(*link_delay(x, r + h) > d);
  }
}

TEST_CASE("zero-load limit approaches 1/x") {
  for (double x : {0.2, 0.5, 0.9}) {
    CHECK(*link_delay(x, 1e-9) == Approx(1.0 / x).epsilon(1e-6));
  }
}

TEST_CASE("success prob: isolated link") {
  const Topology t = Topology::build({{0, 1.0}, {1, 1.0}}, {{0, 1}}, {});
  const auto pv = ProbabilityVector::validated(t, {0.6});
  CHECK(success_prob(t, pv, 0) == Approx(0.6));
}

TEST_CASE("success prob: bidirectional pair") {
  const Topology t = pair_topology();
  const auto pv = ProbabilityVector::uniform(t, 0.5);
  CHECK(success_prob(t, pv, Link{0, 1}) == Approx(0.25));
  CHECK(success_prob(t, pv, Link{1, 0}) == Approx(0.25));
}

TEST_CASE("success prob: one interfering neighbor") {
  // links 0->1 and 2->1; transmission 0->1 sees interferer 2
  const Topology t =
      Topology::build({{0, 1.0}, {1, 1.0}, {2, 1.0}}, {{0, 1}, {2, 1}}, {});
  const auto pv = ProbabilityVector::uniform(t, 0.5);
  CHECK(success_prob(t, pv, Link{0, 1}) == Approx(0.25));
}

TEST_CASE("success prob is multilinear and zeroed by a saturated interferer") {
  const Topology t = pair_topology();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const auto pv =
        ProbabilityVector::validated(t, {unif(rng), unif(rng)});
    const double x = success_prob(t, pv, 0);
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
    CHECK(x == Approx(pv.link_probs[0] * (1.0 - pv.link_probs[1])));
  }
  const auto saturated = ProbabilityVector::validated(t, {0.3, 1.0});
  CHECK(success_prob(t, saturated, 0) == Approx(0.0));
}

TEST_CASE("path delay sums link delays") {
  // two-hop path over links that do not interfere is not possible in a
  // chain; use two identical isolated hops glued as a route on a chain
  // where the middle node is shared, and check additivity directly.
  std::vector<NodeSpec> nodes{{0, 1.0}, {1, 1.0}, {2, 1.0}};
  std::vector<Link> links{{0, 1}, {1, 2}};
  Session s;
  s.route = {{0, 1}, {1, 2}};
  s.delay_limit = 100.0;
  const Topology t = Topology::build(nodes, links, {s});
  const auto pv = ProbabilityVector::validated(t, {0.4, 0.3});
  const std::vector<double> rates{0.01, 0.01};

  const double d0 = *link_delay(success_prob(t, pv, 0), rates[0]);
  const double d1 = *link_delay(success_prob(t, pv, 1), rates[1]);
  CHECK(*path_delay(t, pv, rates, 0) == Approx(d0 + d1));

  // single-hop session equals its link delay
  Session one;
  one.route = {{0, 1}};
  const Topology t1 = Topology::build(nodes, links, {one});
  CHECK(*path_delay(t1, pv, rates, 0) ==
        Approx(*link_delay(success_prob(t1, pv, 0), rates[0])));

  // unstable hop propagates
  const std::vector<double> bad{0.99, 0.01};
  CHECK(!path_delay(t, pv, bad, 0).has_value());
}

TEST_CASE("two identical independent hops double the delay") {
  const double d = 3.5;
  CHECK(2.0 * d == Approx(7.0));  // additivity by definition
  // and through the api: two disjoint pairs, route over both
  std::vector<NodeSpec> nodes{{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}};
  std::vector<Link> links{{0, 1}, {1, 2}};
  Session s;
  s.route = {{0, 1}, {1, 2}};
  const Topology t = Topology::build(nodes, links, {s});
  // hops share node 1 so their x values interact; verify against the
  // independent per-hop evaluation
  const auto pv = ProbabilityVector::validated(t, {0.5, 0.25});
  const std::vector<double> rates{0.05, 0.05};
  const double sum = *link_delay(success_prob(t, pv, 0), 0.05) +
                     *link_delay(success_prob(t, pv, 1), 0.05);
  CHECK(*path_delay(t, pv, rates, 0) == Approx(sum));
}

TEST_CASE("probability vector invariants") {
  const Topology t = Topology::star(3);
  CHECK_THROWS_AS(ProbabilityVector::validated(t, {0.7, 0.2, 0.7, 0.2}),
                  std::invalid_argument);  // center sums to 1.4
  CHECK_THROWS_AS(ProbabilityVector::validated(t, {-0.1, 0.2, 0.1, 0.2}),
                  std::invalid_argument);
  const auto pv = ProbabilityVector::validated(t, {0.3, 0.2, 0.3, 0.2});
  CHECK(pv.node_prob(t, 0) == Approx(0.6));
  CHECK(pv.node_prob(t, 1) == Approx(0.2));
}
