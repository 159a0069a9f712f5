#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aloha/delay.hpp"
#include "aloha/topology.hpp"

namespace aloha {

/// Traffic is either independent Poisson arrivals per link queue, or Poisson
/// session sources whose packets are forwarded hop by hop.
enum class TrafficMode { per_link, per_session };

struct SimConfig {
  Topology topology;
  ProbabilityVector probs;
  TrafficMode mode = TrafficMode::per_link;
  std::vector<double> link_rates;     // per_link mode, r_ij
  std::vector<double> session_rates;  // per_session mode, y_s
  long slots = 1000000;
  long warmup = -1;  // slots excluded from statistics; -1 = 10% of horizon
  bool dummy_packets = true;
  std::uint64_t seed = 1;

  long effective_warmup() const { return warmup >= 0 ? warmup : slots / 10; }
};

struct LinkStats {
  long arrived = 0;
  long delivered = 0;
  long in_queue = 0;  // left in the queue at horizon end
  long attempts = 0;    // actual transmissions, dummies included
  long collisions = 0;  // attempts that failed
  double mean_delay = 0.0;
  double delay_ci_halfwidth = 0.0;
  double empirical_success = 0.0;  // successes / attempts
};

struct SessionStats {
  long delivered = 0;
  double mean_delay = 0.0;  // end to end, slots
  double delay_ci_halfwidth = 0.0;
};

struct SimReport {
  std::vector<LinkStats> links;
  std::vector<SessionStats> sessions;
  double mean_energy_per_slot = 0.0;
  long slots_measured = 0;
};

SimReport simulate(const SimConfig& config);

struct CompareRow {
  std::string scope;  // "link" | "session" | "network"
  int id = 0;
  std::string metric;
  double analytic = 0.0;
  double empirical = 0.0;
  double ci_halfwidth = 0.0;
  double rel_dev = 0.0;
  bool ci_overlap = false;
};

/// Analytic-vs-empirical deviation table at a given operating point. The
/// rates are per link; in session mode pass the per-link sums.
std::vector<CompareRow> compare(const SimReport& report, const Topology& t,
                                const ProbabilityVector& probs,
                                const std::vector<double>& link_rates);

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows);

}  // namespace aloha
