#include "aloha/delay.hpp"

#include <cmath>
#include <stdexcept>

namespace aloha {

ServiceStats service_stats(double x) {
  if (!(x > 0.0) || x > 1.0)
    throw std::invalid_argument("success probability must be in (0, 1]");
  ServiceStats s;
  s.success_prob = x;
  s.mean = 1.0 / x;
  s.variance = (1.0 - x) / (x * x);
  return s;
}

ProbabilityVector ProbabilityVector::uniform(const Topology& t, double p) {
  return validated(t, std::vector<double>(t.num_links(), p));
}

ProbabilityVector ProbabilityVector::validated(const Topology& t,
                                               std::vector<double> p) {
  if (static_cast<int>(p.size()) != t.num_links())
    throw std::invalid_argument("probability vector size mismatch");
  ProbabilityVector pv{std::move(p)};
  for (double v : pv.link_probs)
    if (!(v >= 0.0) || v > 1.0)
      throw std::invalid_argument("link probability outside [0, 1]");
  for (int i = 0; i < t.num_nodes(); ++i)
    if (pv.node_prob(t, i) > 1.0 + 1e-12)
      throw std::invalid_argument("node transmission probability exceeds 1");
  return pv;
}

double ProbabilityVector::node_prob(const Topology& t, int node) const {
  double sum = 0.0;
  for (int li : t.out_links(node)) sum += link_probs.at(li);
  return sum;
}

std::vector<double> ProbabilityVector::node_probs(const Topology& t) const {
  std::vector<double> out(t.num_nodes());
  for (int i = 0; i < t.num_nodes(); ++i) out[i] = node_prob(t, i);
  return out;
}

std::optional<double> link_delay(double x, double r) {
  if (!(x > 0.0) || x > 1.0)
    throw std::invalid_argument("success probability must be in (0, 1]");
  if (r < 0.0) throw std::invalid_argument("arrival rate must be nonnegative");
  if (r >= x) return std::nullopt;  // unstable queue
  return (1.0 - r / 2.0) / (x - r);
}

std::optional<double> link_delay_pk(double x, double r) {
  if (!(x > 0.0) || x > 1.0)
    throw std::invalid_argument("success probability must be in (0, 1]");
  if (r < 0.0) throw std::invalid_argument("arrival rate must be nonnegative");
  if (r >= x) return std::nullopt;
  const ServiceStats s = service_stats(x);
  const double second_moment = s.variance + s.mean * s.mean;
  const double rho = r * s.mean;
  return s.mean + r * second_moment / (2.0 * (1.0 - rho));
}

double success_prob(const Topology& t, const ProbabilityVector& probs,
                    int link_idx) {
  const Link& l = t.link(link_idx);
  double x = probs.link_probs.at(link_idx);
  x *= 1.0 - probs.node_prob(t, l.rx);
  for (int nb : t.neighbors(l.rx)) {
    if (nb == l.tx) continue;
    x *= 1.0 - probs.node_prob(t, nb);
  }
  return x;
}

double success_prob(const Topology& t, const ProbabilityVector& probs,
                    const Link& l) {
  return success_prob(t, probs, t.link_index(l.tx, l.rx));
}

std::optional<double> path_delay(const Topology& t,
                                 const ProbabilityVector& probs,
                                 const std::vector<double>& link_rates,
                                 int session_id) {
  double total = 0.0;
  for (int li : t.route_links(session_id)) {
    const double x = success_prob(t, probs, li);
    const auto d = link_delay(x, link_rates.at(li));
    if (!d) return std::nullopt;
    total += *d;
  }
  return total;
}

}  // namespace aloha
