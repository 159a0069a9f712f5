#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace aloha {

/// Per-iteration error-vs-reference percentages, one named column per
/// tracked quantity.
struct IterationTrace {
  std::vector<std::string> columns;        // e.g. {"objective_err_pct", ...}
  std::vector<std::vector<double>> rows;   // rows[i][c], percent

  void add_row(const std::vector<double>& row) { rows.push_back(row); }

  // First iteration index whose row (and all later rows) stays below the
  // threshold in every column; -1 if never.
  int converged_at(double threshold_pct) const;

  void write_csv(std::ostream& os) const;
};

inline double error_pct(double value, double reference) {
  if (reference == 0.0) return value == 0.0 ? 0.0 : 1e9;
  return 100.0 * std::abs(value - reference) / std::abs(reference);
}

}  // namespace aloha
