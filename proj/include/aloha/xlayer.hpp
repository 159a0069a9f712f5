#pragma once

#include <vector>

#include "aloha/delay.hpp"
#include "aloha/mac.hpp"
#include "aloha/numerics.hpp"
#include "aloha/topology.hpp"

namespace aloha {

/// MAC + transport instance: session rates y_s, auxiliary per-link delay
/// budgets D_ij, end-to-end bounds D_s taken from the topology's sessions.
struct XLayerScenario {
  Topology topology;
  double lambda1 = 0.0;
  double lambda2 = 1.0;

  void validate() const;
};

struct XLayerSolution {
  ProbabilityVector probs;
  std::vector<double> session_rates;       // y_s
  std::vector<double> link_rates;          // r_ij = sum of y_s over S(i,j)
  std::vector<double> link_delay_budgets;  // D_ij
  double objective = 0.0;
  double energy = 0.0;
  double rate_utility = 0.0;  // sum log y_s
  bool feasible = false;
  SolveStatus status = SolveStatus::max_iter;
  double kkt_residual = 0.0;
};

inline constexpr double kBudgetFloor = 1.0 + 1e-9;  // a hop takes >= 1 slot

/// Variable layout: [p_0..p_{L-1}, z_0..z_{S-1}, D_0..D_{L-1}],
/// z_s = log y_s.
ConvexProgram assemble_xlayer_problem(const XLayerScenario& scenario);

XLayerSolution solve_xlayer_centralized(const XLayerScenario& scenario);

void fill_xlayer_metrics(const XLayerScenario& scenario, XLayerSolution& sol);

}  // namespace aloha
