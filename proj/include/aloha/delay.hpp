#pragma once

#include <optional>
#include <vector>

#include "aloha/topology.hpp"

namespace aloha {

/// First two moments of the geometric link service time, per-slot success
/// probability x.
struct ServiceStats {
  double mean = 0.0;      // 1/x
  double variance = 0.0;  // (1-x)/x^2
  double success_prob = 0.0;
};

ServiceStats service_stats(double x);

/// Per-link transmission probabilities p_ij with derived node totals
/// P_i = sum over out-links of i.
struct ProbabilityVector {
  std::vector<double> link_probs;  // indexed by link index

  static ProbabilityVector uniform(const Topology& t, double p);
  static ProbabilityVector validated(const Topology& t, std::vector<double> p);

  double node_prob(const Topology& t, int node) const;
  std::vector<double> node_probs(const Topology& t) const;
};

/// Pollaczek-Khinchin link delay in slots, (1 - r/2)/(x - r).
/// Empty optional signals an unstable queue (r >= x).
std::optional<double> link_delay(double x, double r);

/// Same delay via the two-moment M/G/1 composition; agrees with the closed
/// form up to round-off. Kept separate so the two routes can be checked
/// against each other.
std::optional<double> link_delay_pk(double x, double r);

/// Success probability of link (i,j): p_ij (1-P_j) prod_{l in N_j \ {i}} (1-P_l).
double success_prob(const Topology& t, const ProbabilityVector& probs,
                    int link_idx);
double success_prob(const Topology& t, const ProbabilityVector& probs,
                    const Link& l);

/// Sum of link delays over a session's route; empty if any hop is unstable.
std::optional<double> path_delay(const Topology& t,
                                 const ProbabilityVector& probs,
                                 const std::vector<double>& link_rates,
                                 int session_id);

}  // namespace aloha
