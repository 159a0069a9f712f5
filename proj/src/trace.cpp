#include "aloha/trace.hpp"

#include <cmath>

namespace aloha {

int IterationTrace::converged_at(double threshold_pct) const {
  int first = -1;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    bool below = true;
    for (double v : rows[i])
      if (!(v < threshold_pct)) below = false;
    if (below) {
      if (first < 0) first = i;
    } else {
      first = -1;
    }
  }
  return first;
}

void IterationTrace::write_csv(std::ostream& os) const {
  os << "iteration";
  for (const auto& c : columns) os << "," << c;
  os << "\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    os << i;
    for (double v : rows[i]) os << "," << v;
    os << "\n";
  }
}

}  // namespace aloha
