#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace aloha {

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NodeSpec {
  int id = 0;
  double energy_per_packet = 1.0;  // e_i
};

struct Link {
  int tx = 0;
  int rx = 0;

  friend bool operator==(const Link&, const Link&) = default;
};

struct Session {
  int id = 0;
  std::vector<Link> route;   // ordered hops, contiguous, loop-free
  double delay_limit = 0.0;  // D_s in slots; cross-layer only, 0 = unset
};

/// Multihop network: nodes, directed links, sessions with fixed routes.
/// Neighborhoods are induced by the link set and symmetrized, so any
/// directed link makes its endpoints mutual neighbors. Immutable after
/// build().
class Topology {
 public:
  static Topology build(std::vector<NodeSpec> nodes, std::vector<Link> links,
                        std::vector<Session> sessions);

  // Line of n nodes, both directed links between adjacent nodes, 2n-2 links.
  static Topology linear(int n);
  // Node 0 at the center, both directed links to each outer node, 2n-2 links.
  static Topology star(int n);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_links() const { return static_cast<int>(links_.size()); }
  int num_sessions() const { return static_cast<int>(sessions_.size()); }

  const std::vector<NodeSpec>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Session>& sessions() const { return sessions_; }

  const Link& link(int idx) const { return links_.at(idx); }
  double node_energy(int node) const { return nodes_.at(node).energy_per_packet; }

  // Index of directed link (tx, rx); throws if absent.
  int link_index(int tx, int rx) const;
  bool has_link(int tx, int rx) const;

  const std::vector<int>& neighbors(int node) const { return neighbors_.at(node); }
  const std::vector<int>& out_links(int node) const { return out_links_.at(node); }
  const std::vector<int>& in_links(int node) const { return in_links_.at(node); }

  // Session ids whose route contains the given link.
  const std::vector<int>& sessions_on_link(int link_idx) const {
    return link_sessions_.at(link_idx);
  }
  std::vector<int> sessions_on_link(const Link& l) const {
    return link_sessions_.at(link_index(l.tx, l.rx));
  }

  // Link indices of a session's route, in hop order.
  const std::vector<int>& route_links(int session_id) const {
    return route_links_.at(session_id);
  }

  // An empty topology; only useful as a placeholder before assignment.
  Topology() = default;

 private:
  std::vector<NodeSpec> nodes_;
  std::vector<Link> links_;
  std::vector<Session> sessions_;

  std::vector<std::vector<int>> neighbors_;      // N_i, sorted node ids
  std::vector<std::vector<int>> out_links_;      // link indices leaving i
  std::vector<std::vector<int>> in_links_;       // link indices entering i
  std::vector<std::vector<int>> link_sessions_;  // S(i,j) per link index
  std::vector<std::vector<int>> route_links_;    // link indices per session
  std::vector<std::vector<int>> link_lut_;       // (tx, rx) -> index, -1 absent
};

}  // namespace aloha
