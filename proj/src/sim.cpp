#include "aloha/sim.hpp"

#include <cassert>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace aloha {

namespace {

struct Packet {
  long queue_arrival = 0;   // slot it joined this queue
  long origin = 0;          // slot it entered the network (session mode)
  int session = -1;
};

struct BatchAccum {
  // 20-batch means over the measurement window to blunt autocorrelation.
  static constexpr int kBatches = 20;
  double sums[kBatches] = {};
  long counts[kBatches] = {};

  void add(int batch, double v) {
    sums[batch] += v;
    counts[batch] += 1;
  }
  long total() const {
    long n = 0;
    for (long c : counts) n += c;
    return n;
  }
  double mean() const {
    double s = 0.0;
    long n = total();
    for (double v : sums) s += v;
    return n > 0 ? s / static_cast<double>(n) : 0.0;
  }
  // 1.96 * std(batch means) / sqrt(#nonempty batches)
  double ci_halfwidth() const {
    int nb = 0;
    double m = 0.0;
    for (int b = 0; b < kBatches; ++b)
      if (counts[b] > 0) {
        ++nb;
        m += sums[b] / static_cast<double>(counts[b]);
      }
    if (nb < 2) return 0.0;
    m /= nb;
    double var = 0.0;
    for (int b = 0; b < kBatches; ++b)
      if (counts[b] > 0) {
        const double bm = sums[b] / static_cast<double>(counts[b]);
        var += (bm - m) * (bm - m);
      }
    var /= (nb - 1);
    return 1.96 * std::sqrt(var / nb);
  }
};

}  // namespace

SimReport simulate(const SimConfig& config) {
  const Topology& t = config.topology;
  const int L = t.num_links();
  const int S = t.num_sessions();
  const long warmup = config.effective_warmup();
  if (config.slots <= warmup)
    throw std::invalid_argument("horizon must exceed the warmup");
  if (config.mode == TrafficMode::per_link &&
      static_cast<int>(config.link_rates.size()) != L)
    throw std::invalid_argument("link_rates size mismatch");
  if (config.mode == TrafficMode::per_session &&
      static_cast<int>(config.session_rates.size()) != S)
    throw std::invalid_argument("session_rates size mismatch");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::poisson_distribution<long>> arrivals;
  if (config.mode == TrafficMode::per_link)
    for (int li = 0; li < L; ++li)
      arrivals.emplace_back(config.link_rates[li]);
  else
    for (int s = 0; s < S; ++s)
      arrivals.emplace_back(config.session_rates[s]);

  std::vector<std::deque<Packet>> queues(L);
  std::vector<LinkStats> links(L);
  std::vector<SessionStats> sessions(S);
  std::vector<BatchAccum> link_delays(L);
  std::vector<BatchAccum> session_delays(S);
  // next hop in the session's route after each link; -1 = last hop
  std::vector<std::vector<int>> next_hop(S);
  for (int s = 0; s < S; ++s) {
    const auto& route = t.route_links(s);
    next_hop[s].assign(route.size(), -1);
    for (size_t h = 0; h + 1 < route.size(); ++h)
      next_hop[s][h] = route[h + 1];
  }
  std::vector<std::vector<int>> hop_index(S);  // link -> position in route
  for (int s = 0; s < S; ++s) {
    hop_index[s].assign(L, -1);
    const auto& route = t.route_links(s);
    for (size_t h = 0; h < route.size(); ++h) hop_index[s][route[h]] = static_cast<int>(h);
  }

  const long span = config.slots - warmup;
  double energy = 0.0;

  std::vector<int> tx_link(t.num_nodes());   // chosen link per node, -1 idle
  std::vector<bool> tx_real(t.num_nodes());  // real packet vs dummy
  std::vector<bool> node_active(t.num_nodes());

  struct Forward {
    int link;
    Packet pkt;
  };
  std::vector<Forward> forwards;

  for (long slot = 0; slot < config.slots; ++slot) {
    const bool measured = slot >= warmup;
    const int batch =
        measured ? static_cast<int>(((slot - warmup) * BatchAccum::kBatches) / span)
                 : 0;

    // arrivals at slot start
    if (config.mode == TrafficMode::per_link) {
      for (int li = 0; li < L; ++li) {
        const long n = arrivals[li](rng);
        links[li].arrived += n;
        for (long k = 0; k < n; ++k) queues[li].push_back({slot, slot, -1});
      }
    } else {
      for (int s = 0; s < S; ++s) {
        const long n = arrivals[s](rng);
        const int first = t.route_links(s)[0];
        links[first].arrived += n;
        for (long k = 0; k < n; ++k) queues[first].push_back({slot, slot, s});
      }
    }
    for (const Forward& fw : forwards) {
      links[fw.link].arrived += 1;
      queues[fw.link].push_back(fw.pkt);
    }
    forwards.clear();

    // each node picks at most one link with a single uniform draw
    for (int i = 0; i < t.num_nodes(); ++i) {
      tx_link[i] = -1;
      tx_real[i] = false;
      node_active[i] = false;
      const auto& out = t.out_links(i);
      if (out.empty()) continue;
      const double u = unif(rng);
      double acc = 0.0;
      for (int li : out) {
        acc += config.probs.link_probs[li];
        if (u < acc) {
          const bool has_packet = !queues[li].empty();
          if (has_packet || config.dummy_packets) {
            assert(tx_link[i] == -1);  // node exclusivity
            tx_link[i] = li;
            tx_real[i] = has_packet;
            node_active[i] = true;
          }
          break;
        }
      }
    }

    // collision resolution: receiver and all other neighbors of the
    // receiver must be silent
    for (int i = 0; i < t.num_nodes(); ++i) {
      if (tx_link[i] < 0) continue;
      const int li = tx_link[i];
      const Link& l = t.link(li);
      if (measured) {
        links[li].attempts += 1;
        energy += t.node_energy(i);
      }
      bool ok = !node_active[l.rx];
      if (ok)
        for (int nb : t.neighbors(l.rx)) {
          if (nb == i) continue;
          if (node_active[nb]) {
            ok = false;
            break;
          }
        }
      if (!ok) {
        if (measured) links[li].collisions += 1;
        continue;  // head of line retries with the same probability
      }
      if (!tx_real[i]) continue;  // successful dummy, no queue change

      Packet pkt = queues[li].front();
      queues[li].pop_front();
      links[li].delivered += 1;
      if (measured)
        link_delays[li].add(batch, static_cast<double>(slot - pkt.queue_arrival + 1));

      if (pkt.session >= 0) {
        const int h = hop_index[pkt.session][li];
        const int nxt = next_hop[pkt.session][h];
        if (nxt >= 0) {
          // downstream arrival next slot; real departures, not re-randomized
          forwards.push_back({nxt, {slot + 1, pkt.origin, pkt.session}});
        } else {
          sessions[pkt.session].delivered += 1;
          if (measured)
            session_delays[pkt.session].add(
                batch, static_cast<double>(slot - pkt.origin + 1));
        }
      }
    }
  }

  SimReport rep;
  rep.slots_measured = span;
  rep.mean_energy_per_slot = energy / static_cast<double>(span);
  for (int li = 0; li < L; ++li) {
    LinkStats& ls = links[li];
    ls.mean_delay = link_delays[li].mean();
    ls.delay_ci_halfwidth = link_delays[li].ci_halfwidth();
    ls.empirical_success =
        ls.attempts > 0
            ? static_cast<double>(ls.attempts - ls.collisions) /
                  static_cast<double>(ls.attempts)
            : 0.0;
    ls.in_queue = static_cast<long>(queues[li].size());
    // conservation: everything that arrived is delivered or still queued
    assert(ls.arrived == ls.delivered + ls.in_queue);
  }
  for (int s = 0; s < S; ++s) {
    sessions[s].mean_delay = session_delays[s].mean();
    sessions[s].delay_ci_halfwidth = session_delays[s].ci_halfwidth();
  }
  rep.links = std::move(links);
  rep.sessions = std::move(sessions);
  return rep;
}

std::vector<CompareRow> compare(const SimReport& report, const Topology& t,
                                const ProbabilityVector& probs,
                                const std::vector<double>& link_rates) {
  if (static_cast<int>(report.links.size()) != t.num_links() ||
      static_cast<int>(link_rates.size()) != t.num_links())
    throw std::invalid_argument("compare: dimension mismatch");

  std::vector<CompareRow> rows;
  for (int li = 0; li < t.num_links(); ++li) {
    const double x = success_prob(t, probs, li);
    const auto d = link_delay(x, link_rates[li]);
    CompareRow row;
    row.scope = "link";
    row.id = li;
    row.metric = "delay";
    row.analytic = d ? *d : std::numeric_limits<double>::infinity();
    row.empirical = report.links[li].mean_delay;
    row.ci_halfwidth = report.links[li].delay_ci_halfwidth;
    row.rel_dev = row.analytic > 0.0 && std::isfinite(row.analytic)
                      ? std::abs(row.empirical - row.analytic) / row.analytic
                      : std::numeric_limits<double>::infinity();
    row.ci_overlap =
        std::abs(row.empirical - row.analytic) <= row.ci_halfwidth;
    rows.push_back(row);

    CompareRow xr = row;
    xr.metric = "success_prob";
    xr.analytic = x;
    // x is the per-slot success probability; empirical_success is conditional
    // on an attempt, so rescale by the attempt rate (dummies keep it ~ p)
    const long n = std::max<long>(1, report.slots_measured);
    xr.empirical = static_cast<double>(report.links[li].attempts -
                                       report.links[li].collisions) /
                   static_cast<double>(n);
    xr.ci_halfwidth = 1.96 * std::sqrt(x * (1.0 - x) / static_cast<double>(n));
    xr.rel_dev = x > 0.0 ? std::abs(xr.empirical - x) / x : 0.0;
    xr.ci_overlap = std::abs(xr.empirical - x) <= xr.ci_halfwidth;
    rows.push_back(xr);
  }
  for (int s = 0; s < t.num_sessions(); ++s) {
    const auto d = path_delay(t, probs, link_rates, s);
    CompareRow row;
    row.scope = "session";
    row.id = s;
    row.metric = "delay";
    row.analytic = d ? *d : std::numeric_limits<double>::infinity();
    row.empirical = report.sessions[s].mean_delay;
    row.ci_halfwidth = report.sessions[s].delay_ci_halfwidth;
    row.rel_dev = std::isfinite(row.analytic) && row.analytic > 0.0
                      ? std::abs(row.empirical - row.analytic) / row.analytic
                      : std::numeric_limits<double>::infinity();
    row.ci_overlap =
        std::abs(row.empirical - row.analytic) <= row.ci_halfwidth;
    rows.push_back(row);
  }
  {
    CompareRow row;
    row.scope = "network";
    row.id = 0;
    row.metric = "energy_per_slot";
    double e = 0.0;
    for (int i = 0; i < t.num_nodes(); ++i)
      e += t.node_energy(i) * probs.node_prob(t, i);
    row.analytic = e;
    row.empirical = report.mean_energy_per_slot;
    row.rel_dev = e > 0.0 ? std::abs(row.empirical - e) / e : 0.0;
    rows.push_back(row);
  }
  return rows;
}

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "scope,id,metric,analytic,empirical,ci_halfwidth,rel_dev\n";
  for (const auto& r : rows)
    os << r.scope << "," << r.id << "," << r.metric << "," << r.analytic << ","
       << r.empirical << "," << r.ci_halfwidth << "," << r.rel_dev << "\n";
}

}  // namespace aloha
