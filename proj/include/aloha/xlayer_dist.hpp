#pragma once

#include <string>
#include <vector>

#include "aloha/trace.hpp"
#include "aloha/xlayer.hpp"

namespace aloha {

enum class XMethod { gradient, newton };

std::string to_string(XMethod m);

struct XStepParams {
  double alpha = 0.05;  // link dual step
  double beta = 0.05;   // session dual step
  double phi = 0.01;    // probability step
  double secant_min_delta = 1e-12;  // |denominator| guard
  double curvature_floor = 1e-9;    // secant ratios below this fall back
  double rate_min = kRateFloor;
  double rate_max = 1.0 - kProbMargin;
  double prob_min = 1e-6;
  double prob_max = 1.0 - kProbMargin;
};

struct XIterState {
  ProbabilityVector probs;
  std::vector<double> session_rates;  // y_s
  std::vector<double> budgets;        // D_ij
  std::vector<double> link_duals;     // mu_ij >= 0
  std::vector<double> session_duals;  // v_s >= 0
  // previous-iteration values for the secant ratios
  std::vector<double> prev_h, prev_g, prev_f;
  std::vector<double> prev_mu, prev_v, prev_p;
  bool have_history = false;
  int iteration = 0;
};

struct BudgetUpdate {
  double budget = 0.0;
  bool flagged = false;  // stationary point at/beyond the projection floor
};

/// Minimizer of D*sum_v + mu*(1 - sum_y/2)/D over D > 1/x:
/// sqrt(mu (2 - sum_y) / (2 sum_v)) projected up to 1/x.
BudgetUpdate budget_update(double mu, double sum_rates, double sum_session_duals,
                           double x);

struct RateUpdate {
  double rate = 0.0;
  bool flagged = false;  // zero denominator, rate pinned at the upper bound
};

/// Maximizer of lambda2 log y - y * sum mu (1 - 1/(2D)) over y > 0,
/// projected into (0, 1).
RateUpdate session_rate_update(double lambda2, double price_sum,
                               const XStepParams& params);

/// Constraint subgradients of the current state.
struct XGradients {
  std::vector<double> h;  // per link: (1 - 1/2D) sum_y + 1/D - x
  std::vector<double> g;  // per session: sum D - D_s
  std::vector<double> f;  // per link: lambda1 e_i - sum mu dx/dp
};

XGradients eval_gradients(const XLayerScenario& scenario,
                          const XIterState& state);

/// One synchronous round: closed-form D and y, then duals, then
/// probabilities. Newton scales each coordinate's step by its secant ratio,
/// falling back to the plain gradient step when the ratio is unusable.
XIterState xlayer_step(const XIterState& state, const XLayerScenario& scenario,
                       const XStepParams& params, XMethod method);

XIterState xlayer_initial_state(const XLayerScenario& scenario,
                                double initial_prob = 0.1);
XIterState xlayer_initial_state(const XLayerScenario& scenario,
                                const ProbabilityVector& initial_probs);

struct XDistResult {
  XLayerSolution solution;
  IterationTrace trace;
  XMethod method = XMethod::gradient;
  bool converged = false;
  bool diverged = false;
  int iterations = 0;            // rounds executed
  int converged_iteration = -1;  // first round of the final sub-1% run
};

XDistResult run_xlayer(const XLayerScenario& scenario, XMethod method,
                       const XStepParams& params, int max_iter,
                       const XLayerSolution& reference,
                       double initial_prob = 0.1, int tracked_link = 0,
                       const XIterState* initial_state = nullptr);

}  // namespace aloha
