#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aloha/mac.hpp"
#include "aloha/mac_dist.hpp"
#include "aloha/sim.hpp"
#include "aloha/xlayer.hpp"
#include "aloha/xlayer_dist.hpp"

namespace aloha {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parsed scenario file: topology plus weights and delay constraints.
/// Dc defaults to 4x MinDc of the topology when the file leaves it out.
struct Scenario {
  Topology topology;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  std::optional<double> delay_constraint;  // Dc, slots
  // Per-scenario step calibration for the distributed cross-layer solvers
  // ("xlayer_steps" / "xlayer_newton_steps" objects in the scenario file).
  XStepParams xlayer_gradient_steps;
  XStepParams xlayer_newton_steps;
  // Initial point policy for those solvers: "uniform" (all links at
  // xlayer_init_prob) or "maxmin" (the max-min throughput profile).
  std::string xlayer_init = "uniform";
  double xlayer_init_prob = 0.1;

  double resolve_dc() const;  // Dc or 4 * MinDc
  MacScenario mac() const;
  XLayerScenario xlayer() const;
  const XStepParams& xlayer_steps(XMethod m) const {
    return m == XMethod::newton ? xlayer_newton_steps : xlayer_gradient_steps;
  }
  XIterState xlayer_start() const;  // initial state per the init policy
};

Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& json_text);
std::string scenario_to_json(const Scenario& s);

std::string mac_solution_to_json(const MacScenario& sc, const MacSolution& sol);
std::string xlayer_solution_to_json(const XLayerScenario& sc,
                                    const XLayerSolution& sol);

enum class SweepAxis { lambda_ratio, dc, ds, network_size };
enum class SweepSolver { centralized, distributed, suboptimal, gradient, newton };

SweepAxis parse_axis(const std::string& s);
SweepSolver parse_solver(const std::string& s);

struct SweepSpec {
  std::string scenario_path;  // unused for network_size
  SweepAxis axis = SweepAxis::lambda_ratio;
  std::vector<double> grid;   // strictly increasing, nonempty
  SweepSolver solver = SweepSolver::centralized;
  std::string network_kind = "star";  // network_size axis: star | linear
  std::string output_path;
  int max_iter = 20000;
};

struct SweepRow {
  double axis_value = 0.0;
  std::string status;
  double energy = 0.0;
  double rate_utility = 0.0;
  double objective = 0.0;
  bool feasible = false;
  double min_dc = 0.0;  // network_size axis only
  int iterations = 0;   // distributed solvers only
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec);
void write_sweep_csv(std::ostream& os, const SweepSpec& spec,
                     const std::vector<SweepRow>& rows);

struct ValidationResult {
  std::vector<CompareRow> rows;
  bool pass = false;
  bool unstable = false;  // some link had r >= x
};

/// Simulates the solved operating point and checks tracked deviations.
/// Session end-to-end delays (and link delays on used links) must stay
/// within the relative tolerance.
ValidationResult validate_solution(const Scenario& scenario,
                                   const ProbabilityVector& probs,
                                   const std::vector<double>& link_rates,
                                   const std::vector<double>& session_rates,
                                   long slots, std::uint64_t seed,
                                   bool dummy_packets, double tolerance);

/// Loads a sweep spec from a JSON config (the figN preset files).
SweepSpec parse_sweep_config(const std::string& path);

}  // namespace aloha
