#pragma once

#include <vector>

#include "aloha/mac.hpp"
#include "aloha/trace.hpp"

namespace aloha {

struct MacStepParams {
  double alpha = 0.05;      // constant dual step
  double rate_min = kRateFloor;
  double rate_max = 1.0 - kProbMargin;
  double prob_min = 1e-6;
  double prob_max = 1.0 - kProbMargin;
};

struct MacIterState {
  ProbabilityVector probs;
  std::vector<double> rates;  // r_ij
  std::vector<double> duals;  // mu_ij >= 0, delay constraint prices
  int iteration = 0;
};

/// Stationarity of the Lagrangian in the rate: r = lambda2 / ((mu - lambda2)
/// (Dc - 1/2)) when mu > lambda2; otherwise no interior solution exists and
/// the rate saturates at its upper bound.
double rate_update(double mu, double lambda2, double delay_constraint,
                   const MacStepParams& params);

/// Dual prices local to node i: its own outgoing-link duals and the duals of
/// links it interferes with (receiver in N_i or i itself, transmitter != i).
struct NodeLocalDuals {
  std::vector<double> own;         // mu_il, l in O_i, in out-link order
  double interference_sum = 0.0;   // sum of mu_kl, l in N_i or l = i, k != i
};

NodeLocalDuals gather_node_duals(const Topology& t, int node,
                                 const std::vector<double>& duals);

struct NodeProbUpdate {
  double node_prob = 0.0;
  std::vector<double> link_probs;  // out-link order
  bool clamped = false;            // no root in (0,1)
};

/// Solves the per-node quadratic for P_i, then splits into p_ij.
NodeProbUpdate node_prob_update(double lambda1_e, const NodeLocalDuals& duals,
                                const MacStepParams& params);

/// Subgradient ascent on the delay-constraint prices.
std::vector<double> dual_update(const MacIterState& state,
                                const MacScenario& scenario, double alpha);

struct MacDistResult {
  MacSolution solution;
  IterationTrace trace;
  bool converged = false;
  bool diverged = false;
  int iterations = 0;
};

/// One synchronous round: rates, then probabilities, then duals.
MacIterState mac_distributed_step(const MacIterState& state,
                                  const MacScenario& scenario,
                                  const MacStepParams& params);

MacIterState mac_initial_state(const MacScenario& scenario,
                               const MacStepParams& params,
                               double initial_prob = 0.1);

/// Synchronous rounds of (14) -> (16)/(17) -> (18). Errors are tracked
/// against the given reference solution (normally the centralized optimum)
/// for the objective and the first link's p and r; converged when all three
/// fall below 1%.
MacDistResult run_mac_distributed(const MacScenario& scenario,
                                  const MacStepParams& params, int max_iter,
                                  const MacSolution& reference,
                                  double initial_prob = 0.1,
                                  int tracked_link = 0,
                                  const MacIterState* initial_state = nullptr);

}  // namespace aloha
