#pragma once

#include <functional>
#include <string>
#include <vector>

namespace aloha {

double project_interval(double v, double lo, double hi);

/// Smooth scalar function: returns the value at v and, when grad != nullptr,
/// writes the gradient into *grad (resized to v.size()).
using SmoothFn =
    std::function<double(const std::vector<double>& v, std::vector<double>* grad)>;

/// min f0(v)  s.t.  g_k(v) <= 0,  lo_i < v_i < hi_i.
/// Objective and constraints must be smooth on the open feasible box.
struct ConvexProgram {
  int dim = 0;
  SmoothFn objective;
  std::vector<SmoothFn> constraints;
  std::vector<double> lower;  // open box bounds, size dim
  std::vector<double> upper;
  std::vector<double> initial;  // optional strictly feasible start (may be empty)
};

enum class SolveStatus { optimal, infeasible, max_iter };

std::string to_string(SolveStatus s);

struct SolveReport {
  std::vector<double> point;
  std::vector<double> multipliers;  // one per constraint, mu/(-g_k) estimate
  double objective = 0.0;
  double max_violation = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iter;
};

struct BarrierParams {
  double mu_start = 1.0;
  double mu_end = 1e-10;
  double mu_shrink = 0.1;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  double grad_tol = 1e-7;   // inner stop: barrier gradient inf-norm <= max(tol, 1e-2*mu)
  int max_inner = 200;
};

/// Log-barrier interior point solve. Deterministic given identical inputs.
/// A strictly feasible start is taken from program.initial when valid,
/// otherwise found by a phase-1 pass.
SolveReport barrier_solve(const ConvexProgram& program,
                          const BarrierParams& params = {});

/// Exhaustive grid search over the box, dimension <= 4. Ground-truth oracle
/// for desk-scale instances; test/provenance use only.
SolveReport grid_oracle(const ConvexProgram& program, double step);

}  // namespace aloha
