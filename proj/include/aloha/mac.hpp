#pragma once

#include <vector>

#include "aloha/delay.hpp"
#include "aloha/numerics.hpp"
#include "aloha/topology.hpp"

namespace aloha {

/// Delay-constrained MAC instance: minimize lambda1*E - lambda2*U_r subject
/// to a common link delay bound Dc (slots).
struct MacScenario {
  Topology topology;
  double lambda1 = 0.0;  // energy weight
  double lambda2 = 1.0;  // rate-utility weight
  double delay_constraint = 0.0;  // Dc, slots

  void validate() const;
};

struct MacSolution {
  ProbabilityVector probs;
  std::vector<double> link_rates;  // r_ij, packets/slot
  double objective = 0.0;          // lambda1*energy - lambda2*rate_utility
  double energy = 0.0;             // sum e_i P_i
  double rate_utility = 0.0;       // sum log r_ij
  bool feasible = false;
  std::vector<bool> link_ok;       // per-link delay constraint satisfied
  SolveStatus status = SolveStatus::max_iter;
  double kkt_residual = 0.0;
};

struct MinDcResult {
  double min_dc = 0.0;       // 1 / maxmin_x
  double maxmin_x = 0.0;     // optimal value of the max-min throughput problem
  ProbabilityVector probs;   // argmax probabilities
  SolveReport report;
};

// Node totals are kept below this bound so every (1 - P) factor stays positive.
inline constexpr double kProbMargin = 1e-6;
inline constexpr double kRateFloor = 1e-9;  // floor on rates, log-space box

/// Variable layout of the assembled programs: [p_0..p_{L-1}, z_0..z_{L-1}]
/// with z_ij = log r_ij.
ConvexProgram assemble_mac_problem(const MacScenario& scenario);

/// Max-min throughput program: variables [p_0..p_{L-1}, z] maximizing z
/// subject to z <= log x_ij.
ConvexProgram assemble_maxmin_problem(const Topology& topology);

MinDcResult min_delay_constraint(const Topology& topology);

MacSolution solve_mac_centralized(const MacScenario& scenario);

/// Non-iterative scheme: solve the delay-unconstrained problem (delay bound
/// replaced by r <= x), then set r = (Dc*x - 1)/(Dc - 1/2) per link. Links
/// with Dc <= 1/x cannot meet the bound and are flagged.
MacSolution solve_mac_suboptimal(const MacScenario& scenario);

/// Objective/energy/utility bookkeeping shared by the solvers.
void fill_mac_metrics(const MacScenario& scenario, MacSolution& sol);

}  // namespace aloha
