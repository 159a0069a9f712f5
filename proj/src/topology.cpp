#include "aloha/topology.hpp"

#include <algorithm>
#include <set>

namespace aloha {

namespace {

void sort_unique(std::vector<int>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

Topology Topology::build(std::vector<NodeSpec> nodes, std::vector<Link> links,
                         std::vector<Session> sessions) {
  Topology t;
  const int n = static_cast<int>(nodes.size());

  std::sort(nodes.begin(), nodes.end(),
            [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
  for (int i = 0; i < n; ++i) {
    if (nodes[i].id != i)
      throw TopologyError("node ids must be unique and contiguous from 0");
    if (nodes[i].energy_per_packet <= 0.0)
      throw TopologyError("energy_per_packet must be positive (node " +
                          std::to_string(nodes[i].id) + ")");
  }

  t.link_lut_.assign(n, std::vector<int>(n, -1));
  for (int li = 0; li < static_cast<int>(links.size()); ++li) {
    const Link& l = links[li];
    if (l.tx < 0 || l.tx >= n || l.rx < 0 || l.rx >= n)
      throw TopologyError("link endpoint out of range");
    if (l.tx == l.rx) throw TopologyError("self-loop link");
    if (t.link_lut_[l.tx][l.rx] != -1)
      throw TopologyError("duplicate link (" + std::to_string(l.tx) + "," +
                          std::to_string(l.rx) + ")");
    t.link_lut_[l.tx][l.rx] = li;
  }

  t.neighbors_.assign(n, {});
  t.out_links_.assign(n, {});
  t.in_links_.assign(n, {});
  for (int li = 0; li < static_cast<int>(links.size()); ++li) {
    const Link& l = links[li];
    t.neighbors_[l.tx].push_back(l.rx);
    t.neighbors_[l.rx].push_back(l.tx);  // symmetric neighborhoods
    t.out_links_[l.tx].push_back(li);
    t.in_links_[l.rx].push_back(li);
  }
  for (auto& nb : t.neighbors_) sort_unique(nb);

  t.link_sessions_.assign(links.size(), {});
  t.route_links_.assign(sessions.size(), {});
  for (int si = 0; si < static_cast<int>(sessions.size()); ++si) {
    Session& s = sessions[si];
    s.id = si;
    if (s.route.empty()) throw TopologyError("session with empty route");
    std::set<int> visited;
    for (size_t h = 0; h < s.route.size(); ++h) {
      const Link& hop = s.route[h];
      if (hop.tx < 0 || hop.tx >= n || hop.rx < 0 || hop.rx >= n ||
          t.link_lut_[hop.tx][hop.rx] == -1)
        throw TopologyError("session route references missing link (" +
                            std::to_string(hop.tx) + "," +
                            std::to_string(hop.rx) + ")");
      if (h > 0 && s.route[h - 1].rx != hop.tx)
        throw TopologyError("route discontinuity in session " +
                            std::to_string(si));
      if (!visited.insert(hop.tx).second)
        throw TopologyError("route loop in session " + std::to_string(si));
      const int li = t.link_lut_[hop.tx][hop.rx];
      t.route_links_[si].push_back(li);
      t.link_sessions_[li].push_back(si);
    }
    if (visited.count(s.route.back().rx))
      throw TopologyError("route loop in session " + std::to_string(si));
  }

  t.nodes_ = std::move(nodes);
  t.links_ = std::move(links);
  t.sessions_ = std::move(sessions);
  return t;
}

Topology Topology::linear(int n) {
  if (n < 2) throw TopologyError("linear network needs at least 2 nodes");
  std::vector<NodeSpec> nodes(n);
  for (int i = 0; i < n; ++i) nodes[i].id = i;
  std::vector<Link> links;
  for (int i = 0; i + 1 < n; ++i) {
    links.push_back({i, i + 1});
    links.push_back({i + 1, i});
  }
  return build(std::move(nodes), std::move(links), {});
}

Topology Topology::star(int n) {
  if (n < 2) throw TopologyError("star network needs at least 2 nodes");
  std::vector<NodeSpec> nodes(n);
  for (int i = 0; i < n; ++i) nodes[i].id = i;
  std::vector<Link> links;
  for (int i = 1; i < n; ++i) {
    links.push_back({0, i});
    links.push_back({i, 0});
  }
  return build(std::move(nodes), std::move(links), {});
}

int Topology::link_index(int tx, int rx) const {
  if (!has_link(tx, rx))
    throw TopologyError("unknown link (" + std::to_string(tx) + "," +
                        std::to_string(rx) + ")");
  return link_lut_[tx][rx];
}

bool Topology::has_link(int tx, int rx) const {
  return tx >= 0 && tx < num_nodes() && rx >= 0 && rx < num_nodes() &&
         link_lut_[tx][rx] != -1;
}

}  // namespace aloha
