#include "aloha/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aloha {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool in_open_box(const ConvexProgram& p, const std::vector<double>& v) {
  for (int i = 0; i < p.dim; ++i)
    if (!(v[i] > p.lower[i] && v[i] < p.upper[i])) return false;
  return true;
}

bool strictly_feasible(const ConvexProgram& p, const std::vector<double>& v) {
  if (!in_open_box(p, v)) return false;
  for (const auto& g : p.constraints)
    if (!(g(v, nullptr) < 0.0)) return false;
  return true;
}

// Barrier-augmented objective f0 + mu * (-sum log(-g_k) - sum log box slacks).
// Returns +inf outside the strictly feasible region.
double barrier_value(const ConvexProgram& p, double mu,
                     const std::vector<double>& v, std::vector<double>* grad) {
  if (grad) grad->assign(p.dim, 0.0);
  if (!in_open_box(p, v)) return kInf;

  std::vector<double> gbuf;
  double val = p.objective(v, grad);
  for (const auto& g : p.constraints) {
    const double gv = g(v, grad ? &gbuf : nullptr);
    if (!(gv < 0.0)) return kInf;
    val += mu * -std::log(-gv);
    if (grad)
      for (int i = 0; i < p.dim; ++i) (*grad)[i] += mu * gbuf[i] / (-gv);
  }
  for (int i = 0; i < p.dim; ++i) {
    const double lo = v[i] - p.lower[i], hi = p.upper[i] - v[i];
    val += mu * (-std::log(lo) - std::log(hi));
    if (grad) (*grad)[i] += mu * (-1.0 / lo + 1.0 / hi);
  }
  if (!std::isfinite(val)) return kInf;
  return val;
}

// Cholesky factorization with ridge fallback; solves H d = -g.
// Returns false if no usable direction was found.
bool newton_direction(std::vector<double> H, int n, const std::vector<double>& g,
                      std::vector<double>& d) {
  double ridge = 0.0;
  double diag_max = 1e-12;
  for (int i = 0; i < n; ++i) diag_max = std::max(diag_max, std::abs(H[i * n + i]));
  for (int attempt = 0; attempt < 40; ++attempt) {
    std::vector<double> L = H;
    if (ridge > 0.0)
      for (int i = 0; i < n; ++i) L[i * n + i] += ridge;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = L[i * n + j];
        for (int k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
        if (i == j) {
          if (s <= 0.0 || !std::isfinite(s)) {
            ok = false;
            break;
          }
          L[i * n + i] = std::sqrt(s);
        } else {
          L[i * n + j] = s / L[j * n + j];
        }
      }
    }
    if (ok) {
      d.assign(n, 0.0);
      std::vector<double> y(n);
      for (int i = 0; i < n; ++i) {
        double s = -g[i];
        for (int k = 0; k < i; ++k) s -= L[i * n + k] * y[k];
        y[i] = s / L[i * n + i];
      }
      for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= L[k * n + i] * d[k];
        d[i] = s / L[i * n + i];
      }
      return true;
    }
    ridge = (ridge == 0.0) ? 1e-8 * diag_max : ridge * 10.0;
  }
  return false;
}

// Central-difference Hessian of a smooth function's gradient, accumulated
// into H with the given weight. Probes stay inside the open box but may
// cross constraint boundaries; the functions themselves are smooth there.
void accumulate_fd_hessian(const SmoothFn& fn, const ConvexProgram& p,
                           const std::vector<double>& v, double weight,
                           std::vector<double>& H) {
  const int n = p.dim;
  std::vector<double> gp, gm, vt = v;
  std::vector<double> col(n * n, 0.0);
  for (int j = 0; j < n; ++j) {
    double h = 1e-6 * std::max(1.0, std::abs(v[j]));
    h = std::min(h, 0.25 * (v[j] - p.lower[j]));
    h = std::min(h, 0.25 * (p.upper[j] - v[j]));
    h = std::max(h, 1e-14);
    vt[j] = v[j] + h;
    fn(vt, &gp);
    vt[j] = v[j] - h;
    fn(vt, &gm);
    vt[j] = v[j];
    for (int i = 0; i < n; ++i) col[i * n + j] = (gp[i] - gm[i]) / (2.0 * h);
  }
  // symmetrize, then accumulate
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      H[i * n + j] += weight * 0.5 * (col[i * n + j] + col[j * n + i]);
}

// Hessian of the barrier objective. The smooth pieces (objective and each
// constraint) are finite-differenced; the stiff log-barrier curvature
// mu * (grad g grad g^T / slack^2) and the box terms use the analytic
// gradients, so conditioning does not degrade as the slacks shrink.
void fd_hessian(const ConvexProgram& p, double mu, const std::vector<double>& v,
                std::vector<double>& H) {
  const int n = p.dim;
  H.assign(n * n, 0.0);
  accumulate_fd_hessian(p.objective, p, v, 1.0, H);
  std::vector<double> ggrad;
  for (const auto& g : p.constraints) {
    const double slack = -g(v, &ggrad);
    if (!(slack > 0.0)) {
      for (int i = 0; i < n; ++i) H[i * n + i] += 1e12;
      continue;
    }
    accumulate_fd_hessian(g, p, v, mu / slack, H);
    const double w = mu / (slack * slack);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) H[i * n + j] += w * ggrad[i] * ggrad[j];
  }
  for (int i = 0; i < n; ++i) {
    const double lo = v[i] - p.lower[i], hi = p.upper[i] - v[i];
    H[i * n + i] += mu * (1.0 / (lo * lo) + 1.0 / (hi * hi));
  }
}

// Minimizes the barrier objective at fixed mu. Returns iterations used.
int center(const ConvexProgram& p, double mu, const BarrierParams& bp,
           std::vector<double>& v, double tol) {
  std::vector<double> grad, d, H, trial(p.dim);
  int it = 0;
  for (; it < bp.max_inner; ++it) {
    const double f = barrier_value(p, mu, v, &grad);
    if (inf_norm(grad) <= tol) break;
    fd_hessian(p, mu, v, H);
    const bool have_newton = newton_direction(H, p.dim, grad, d);

    // Decreases smaller than the value's rounding noise cannot be certified;
    // the Armijo test is slackened by that much so stiff barrier terms do not
    // stall the iteration.
    const double noise = 1e-15 * (1.0 + std::abs(f));

    const auto line_search = [&](const std::vector<double>& dir) {
      double slope = 0.0;
      for (int i = 0; i < p.dim; ++i) slope += grad[i] * dir[i];
      if (slope >= 0.0) return false;
      double step = 1.0;
      for (int ls = 0; ls < 80; ++ls) {
        for (int i = 0; i < p.dim; ++i) trial[i] = v[i] + step * dir[i];
        const double ft = barrier_value(p, mu, trial, nullptr);
        if (std::isfinite(ft) && ft <= f + bp.armijo_c * step * slope + noise) {
          v = trial;
          return true;
        }
        step *= bp.backtrack;
      }
      return false;
    };

    if (have_newton) {
      double decrement = 0.0;
      for (int i = 0; i < p.dim; ++i) decrement -= grad[i] * d[i];
      if (decrement >= 0.0 && decrement < 1e-14 * (1.0 + std::abs(f))) break;
    }
    bool moved = have_newton && line_search(d);
    if (!moved) {
      // noisy curvature estimate; fall back to steepest descent
      std::vector<double> sd(p.dim);
      for (int i = 0; i < p.dim; ++i) sd[i] = -grad[i];
      moved = line_search(sd);
    }
    if (!moved) break;
  }
  return it;
}

ConvexProgram phase1_program(const ConvexProgram& p) {
  // Extra slack variable s; minimize s subject to g_k(v) - s <= 0.
  ConvexProgram q;
  q.dim = p.dim + 1;
  q.lower = p.lower;
  q.upper = p.upper;
  q.lower.push_back(-1e6);
  q.upper.push_back(1e6);
  q.objective = [dim = p.dim](const std::vector<double>& v,
                              std::vector<double>* grad) {
    if (grad) {
      grad->assign(dim + 1, 0.0);
      (*grad)[dim] = 1.0;
    }
    return v[dim];
  };
  for (const auto& g : p.constraints) {
    q.constraints.push_back([g, dim = p.dim](const std::vector<double>& v,
                                             std::vector<double>* grad) {
      std::vector<double> inner(v.begin(), v.begin() + dim);
      std::vector<double> gi;
      const double gv = g(inner, grad ? &gi : nullptr);
      if (grad) {
        grad->assign(dim + 1, 0.0);
        for (int i = 0; i < dim; ++i) (*grad)[i] = gi[i];
        (*grad)[dim] = -1.0;
      }
      return gv - v[dim];
    });
  }
  return q;
}

// Stationarity residual: || grad f0 + sum lambda_k grad g_k ||_inf with
// nonnegative multipliers fitted by least squares over the active set
// (constraints and box bounds with small slack). Columns whose fitted
// multiplier comes out negative are dropped and the fit is repeated.
double kkt_residual(const ConvexProgram& p, const std::vector<double>& v) {
  const int n = p.dim;
  std::vector<double> f0g;
  p.objective(v, &f0g);

  std::vector<std::vector<double>> cols;
  std::vector<double> gbuf;
  for (const auto& g : p.constraints) {
    const double gv = g(v, &gbuf);
    if (gv >= -1e-4) cols.push_back(gbuf);
  }
  for (int i = 0; i < n; ++i) {
    const double eps = 1e-4 * (1.0 + 0.1 * (p.upper[i] - p.lower[i]));
    if (v[i] - p.lower[i] <= eps) {
      std::vector<double> c(n, 0.0);
      c[i] = -1.0;
      cols.push_back(std::move(c));
    } else if (p.upper[i] - v[i] <= eps) {
      std::vector<double> c(n, 0.0);
      c[i] = 1.0;
      cols.push_back(std::move(c));
    }
  }

  std::vector<double> resid = f0g;
  for (int pass = 0; pass < 8 && !cols.empty(); ++pass) {
    const int m = static_cast<int>(cols.size());
    std::vector<double> A(m * m, 0.0), b(m, 0.0), lambda;
    for (int a = 0; a < m; ++a) {
      for (int c = 0; c < m; ++c)
        for (int i = 0; i < n; ++i) A[a * m + c] += cols[a][i] * cols[c][i];
      A[a * m + a] += 1e-12;
      for (int i = 0; i < n; ++i) b[a] += cols[a][i] * f0g[i];
    }
    if (!newton_direction(A, m, b, lambda)) break;  // lambda = -A^{-1} b
    bool dropped = false;
    std::vector<std::vector<double>> kept;
    for (int a = 0; a < m; ++a) {
      if (lambda[a] < 0.0)
        dropped = true;
      else
        kept.push_back(cols[a]);
    }
    if (!dropped) {
      resid = f0g;
      for (int a = 0; a < m; ++a)
        for (int i = 0; i < n; ++i) resid[i] += lambda[a] * cols[a][i];
      break;
    }
    cols.swap(kept);
    if (cols.empty()) resid = f0g;
  }
  return inf_norm(resid);
}

}  // namespace

double project_interval(double v, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("project_interval: lo > hi");
  return std::max(lo, std::min(v, hi));
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

SolveReport barrier_solve(const ConvexProgram& program,
                          const BarrierParams& params) {
  if (program.dim <= 0 ||
      static_cast<int>(program.lower.size()) != program.dim ||
      static_cast<int>(program.upper.size()) != program.dim)
    throw std::invalid_argument("barrier_solve: malformed program");

  SolveReport rep;

  std::vector<double> v;
  if (static_cast<int>(program.initial.size()) == program.dim &&
      strictly_feasible(program, program.initial)) {
    v = program.initial;
  } else if (program.constraints.empty()) {
    v.resize(program.dim);
    for (int i = 0; i < program.dim; ++i)
      v[i] = 0.5 * (program.lower[i] + program.upper[i]);
  } else {
    ConvexProgram q = phase1_program(program);
    q.initial.resize(q.dim);
    for (int i = 0; i < program.dim; ++i)
      q.initial[i] = 0.5 * (program.lower[i] + program.upper[i]);
    std::vector<double> inner(q.initial.begin(), q.initial.begin() + program.dim);
    double worst = -kInf;
    for (const auto& g : program.constraints)
      worst = std::max(worst, g(inner, nullptr));
    q.initial[program.dim] = worst + 1.0;
    const SolveReport ph1 = barrier_solve(q, params);
    if (ph1.point[program.dim] > -1e-9) {
      rep.status = SolveStatus::infeasible;
      rep.point = std::vector<double>(ph1.point.begin(),
                                      ph1.point.begin() + program.dim);
      rep.max_violation = std::max(0.0, ph1.point[program.dim]);
      rep.objective = program.objective(rep.point, nullptr);
      return rep;
    }
    v.assign(ph1.point.begin(), ph1.point.begin() + program.dim);
  }

  int total_it = 0;
  double mu = params.mu_start;
  for (;;) {
    const double tol = std::max(params.grad_tol, 1e-2 * mu);
    total_it += center(program, mu, params, v, tol);
    if (mu <= params.mu_end * (1.0 + 1e-9)) break;
    mu = std::max(mu * params.mu_shrink, params.mu_end);
  }

  rep.point = v;
  rep.iterations = total_it;
  rep.objective = program.objective(v, nullptr);
  rep.max_violation = 0.0;
  for (const auto& g : program.constraints) {
    const double gv = g(v, nullptr);
    rep.max_violation = std::max(rep.max_violation, gv);
    rep.multipliers.push_back(gv < 0.0 ? mu / (-gv) : 0.0);
  }
  rep.max_violation = std::max(0.0, rep.max_violation);

  rep.kkt_residual = kkt_residual(program, v);
  rep.status = (rep.kkt_residual < 1e-6 && rep.max_violation < 1e-8)
                   ? SolveStatus::optimal
                   : SolveStatus::max_iter;
  return rep;
}

SolveReport grid_oracle(const ConvexProgram& program, double step) {
  if (program.dim > 4)
    throw std::invalid_argument("grid_oracle: dimension exceeds search budget");
  if (!(step > 0.0)) throw std::invalid_argument("grid_oracle: bad step");

  std::vector<long> counts(program.dim);
  for (int i = 0; i < program.dim; ++i)
    counts[i] =
        static_cast<long>(std::floor((program.upper[i] - program.lower[i]) / step)) + 1;

  SolveReport rep;
  rep.status = SolveStatus::infeasible;
  rep.objective = kInf;

  std::vector<long> idx(program.dim, 0);
  std::vector<double> v(program.dim);
  long total = 1;
  for (long c : counts) total *= c;
  for (long n = 0; n < total; ++n) {
    long rem = n;
    for (int i = 0; i < program.dim; ++i) {
      idx[i] = rem % counts[i];
      rem /= counts[i];
      v[i] = program.lower[i] + step * static_cast<double>(idx[i]);
    }
    bool feasible = true;
    for (const auto& g : program.constraints) {
      const double gv = g(v, nullptr);
      if (!std::isfinite(gv) || gv > 1e-9) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    const double f = program.objective(v, nullptr);
    if (!std::isfinite(f)) continue;
    if (f < rep.objective) {
      rep.objective = f;
      rep.point = v;
      rep.status = SolveStatus::optimal;
    }
  }
  rep.iterations = static_cast<int>(std::min<long>(total, 1000000000L));
  return rep;
}

}  // namespace aloha
