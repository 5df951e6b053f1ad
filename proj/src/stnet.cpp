#include "lipisim/stnet.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lipisim {

namespace {

u64 pack_edge(NodeId u, NodeId v) {
  const u64 lo = std::min(u, v), hi = std::max(u, v);
  return (lo << 32) | hi;
}

bool link_draw(u64 seed, u32 phase_nonce, u32 slot, u32 subslot, NodeId u, NodeId v,
               double prob) {
  if (prob >= 1.0) return true;
  const u64 edge_key = keyed_rand({seed ^ pack_edge(u, v), phase_nonce, tag::kLinkDraw});
  const u64 r = keyed_rand({edge_key, (slot << 20) | subslot, tag::kLinkDraw});
  return static_cast<double>(r >> 11) * 0x1.0p-53 < prob;
}

}  // namespace

void Topology::resize(u32 nodes) {
  n = nodes;
  adj.assign(static_cast<std::size_t>(n) + 1, {});
}

void Topology::add_edge(NodeId u, NodeId v, double prob) {
  if (u == v) throw std::invalid_argument("topology: self-loop");
  if (u < 1 || v < 1 || u > n || v > n) throw std::invalid_argument("topology: node id out of range");
  if (prob <= 0.0 || prob > 1.0) throw std::invalid_argument("topology: link probability must be in (0, 1]");
  adj[u].insert(v);
  adj[v].insert(u);
  if (prob < 1.0)
    link_prob_[pack_edge(u, v)] = prob;
  else
    link_prob_.erase(pack_edge(u, v));
}

double Topology::link_probability(NodeId u, NodeId v) const {
  const auto it = link_prob_.find(pack_edge(u, v));
  return it == link_prob_.end() ? 1.0 : it->second;
}

bool Topology::has_edge(NodeId u, NodeId v) const {
  return u >= 1 && u <= n && adj[u].count(v) > 0;
}

bool Topology::has_random_links() const { return !link_prob_.empty(); }

bool Topology::connected() const {
  std::set<NodeId> all;
  for (NodeId i = 1; i <= n; ++i) all.insert(i);
  return connected_subset(all);
}

bool Topology::connected_subset(const std::set<NodeId>& nodes) const {
  if (nodes.empty()) return true;
  std::set<NodeId> seen{*nodes.begin()};
  std::deque<NodeId> frontier{*nodes.begin()};
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    for (NodeId v : adj[u]) {
      if (nodes.count(v) && seen.insert(v).second) frontier.push_back(v);
    }
  }
  return seen.size() == nodes.size();
}

std::map<NodeId, u32> Topology::distances_from(NodeId from, const std::set<NodeId>& within) const {
  std::map<NodeId, u32> dist;
  for (NodeId v : within) dist[v] = std::numeric_limits<u32>::max();
  if (!within.count(from)) return dist;
  dist[from] = 0;
  std::deque<NodeId> frontier{from};
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    for (NodeId v : adj[u]) {
      if (within.count(v) && dist[v] == std::numeric_limits<u32>::max()) {
        dist[v] = dist[u] + 1;
        frontier.push_back(v);
      }
    }
  }
  return dist;
}

u32 Topology::diameter() const {
  std::set<NodeId> all;
  for (NodeId i = 1; i <= n; ++i) all.insert(i);
  u32 best = 0;
  for (NodeId s = 1; s <= n; ++s) {
    for (const auto& [v, d] : distances_from(s, all)) {
      if (d == std::numeric_limits<u32>::max()) return n;
      best = std::max(best, d);
    }
  }
  return best;
}

Topology Topology::complete(u32 n) {
  Topology t;
  t.resize(n);
  for (NodeId u = 1; u <= n; ++u)
    for (NodeId v = u + 1; v <= n; ++v) t.add_edge(u, v);
  return t;
}

Topology Topology::ring(u32 n) {
  if (n < 3) throw std::invalid_argument("ring: needs n >= 3");
  Topology t;
  t.resize(n);
  for (NodeId u = 1; u <= n; ++u) t.add_edge(u, u % n + 1);
  return t;
}

Topology Topology::line(u32 n) {
  if (n < 2) throw std::invalid_argument("line: needs n >= 2");
  Topology t;
  t.resize(n);
  for (NodeId u = 1; u < n; ++u) t.add_edge(u, u + 1);
  return t;
}

Topology Topology::random_geometric(u32 n, double side, double radius, u64 seed) {
  if (n == 0 || side <= 0.0 || radius <= 0.0)
    throw std::invalid_argument("random_geometric: bad parameters");
  Topology t;
  t.resize(n);
  std::vector<double> x(n + 1), y(n + 1);
  for (NodeId i = 1; i <= n; ++i) {
    x[i] = static_cast<double>(keyed_rand({seed, 2 * i, tag::kTopology}) >> 11) * 0x1.0p-53 * side;
    y[i] = static_cast<double>(keyed_rand({seed, 2 * i + 1, tag::kTopology}) >> 11) * 0x1.0p-53 * side;
  }
  for (NodeId u = 1; u <= n; ++u) {
    for (NodeId v = u + 1; v <= n; ++v) {
      const double dx = x[u] - x[v], dy = y[u] - y[v];
      if (std::sqrt(dx * dx + dy * dy) <= radius) t.add_edge(u, v);
    }
  }
  return t;
}

Topology Topology::random_geometric_connected(u32 n, double side, double radius, u64 seed) {
  for (u32 attempt = 0; attempt < 10000; ++attempt) {
    Topology t = random_geometric(n, side, radius, seed + attempt * 0x9e3779b97f4a7c15ull);
    if (t.connected()) return t;
  }
  throw std::runtime_error("random_geometric_connected: no connected sample found; grow radius or shrink area");
}

Topology Topology::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Topology t;
  bool have_n = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    if (!have_n) {
      long long n = 0;
      if (!(ls >> n)) continue;  // blank/comment before the header
      if (n < 1) throw std::runtime_error("topology: node count must be >= 1");
      t.resize(static_cast<u32>(n));
      have_n = true;
      continue;
    }
    long long u = 0, v = 0;
    double prob = 1.0;
    if (!(ls >> u)) continue;
    if (!(ls >> v)) throw std::runtime_error("topology: malformed edge at line " + std::to_string(lineno));
    ls >> prob;
    if (u < 1 || v < 1) throw std::runtime_error("topology: bad node id at line " + std::to_string(lineno));
    try {
      t.add_edge(static_cast<NodeId>(u), static_cast<NodeId>(v), prob);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string("topology: ") + e.what() + " at line " + std::to_string(lineno));
    }
  }
  if (!have_n) throw std::runtime_error("topology: missing node count header");
  return t;
}

Topology Topology::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("topology: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Topology::serialize() const {
  std::ostringstream out;
  out << n << "\n";
  for (NodeId u = 1; u <= n; ++u) {
    for (NodeId v : adj[u]) {
      if (v <= u) continue;
      out << u << " " << v;
      const double p = link_probability(u, v);
      if (p < 1.0) out << " " << p;
      out << "\n";
    }
  }
  return out.str();
}

PhaseFailures failures_for_dfke(const SimConfig& config) {
  PhaseFailures f;
  for (const auto& ev : config.failure_plan)
    if (ev.phase == FailurePhase::BeforeDfke) f.dead.insert(ev.node);
  return f;
}

PhaseFailures failures_for_sync(const SimConfig& config) {
  PhaseFailures f;
  for (const auto& ev : config.failure_plan)
    if (ev.phase == FailurePhase::BeforeDfke || ev.phase == FailurePhase::AfterDfkeSilent)
      f.dead.insert(ev.node);
  return f;
}

PhaseFailures failures_for_share(const SimConfig& config) {
  PhaseFailures f = failures_for_sync(config);
  for (const auto& ev : config.failure_plan) {
    if (ev.phase == FailurePhase::MidShare) {
      if (ev.after_k < 1) throw std::invalid_argument("MidShare failure needs after_k >= 1");
      f.mid_share[ev.node] = ev.after_k;
    }
  }
  return f;
}

void NetMetrics::accumulate(const NetMetrics& phase) {
  duration += phase.duration;
  slots += phase.slots;
  for (const auto& [id, m] : phase.per_node) {
    per_node[id].latency += m.latency;
    per_node[id].radio_on += m.radio_on;
  }
}

NetMetrics glossy_flood(const Topology& topo, const SimConfig& config,
                        const PhaseFailures& failures, NodeId initiator, u64 payload,
                        u32 phase_nonce) {
  if (initiator < 1 || initiator > topo.n)
    throw std::invalid_argument("glossy_flood: initiator not in topology");
  NetMetrics out;
  std::set<NodeId> alive;
  for (NodeId v = 1; v <= topo.n; ++v)
    if (!failures.dead.count(v)) alive.insert(v);
  if (!alive.count(initiator)) return out;  // failed initiator: no delivery

  const auto dist = topo.distances_from(initiator, alive);
  std::set<NodeId> reachable;
  for (const auto& [v, d] : dist)
    if (d != std::numeric_limits<u32>::max()) reachable.insert(v);

  std::map<NodeId, u32> rx_count;
  std::set<NodeId> holders{initiator};

  const u32 cap = config.flood_round_cap(topo.n);
  u32 round = 0;
  while (round < cap) {
    // The flood ends once every reachable node heard the packet ntx times.
    bool someone_waiting = false;
    for (NodeId v : reachable) {
      if (v == initiator) continue;  // the originator needs no reception
      if (rx_count[v] < config.ntx) {
        someone_waiting = true;
        break;
      }
    }
    if (!someone_waiting) break;

    ++round;
    std::set<NodeId> new_holders;
    for (NodeId v : alive) {
      out.per_node[v].radio_on += 1;  // transmitting or listening, one unit
      for (NodeId u : topo.adj[v]) {
        if (u == v || !holders.count(u) || !alive.count(u)) continue;
        if (link_draw(config.rng_seed, phase_nonce, round, 0, u, v,
                      topo.link_probability(u, v))) {
          rx_count[v] += 1;
          new_holders.insert(v);
          break;
        }
      }
    }
    holders.insert(new_holders.begin(), new_holders.end());
  }

  out.slots = round;
  out.duration = round;  // one sub-slot per flood round
  for (NodeId v = 1; v <= topo.n; ++v) {
    out.per_node[v].latency = out.duration;
    if (out.per_node[v].radio_on > out.per_node[v].latency)
      out.per_node[v].radio_on = out.per_node[v].latency;
  }
  for (NodeId v : holders) out.delivered[v] = {Entry{initiator, 0, payload}};
  return out;
}

NetMetrics minicast_round(const Topology& topo, const SimConfig& config,
                          const PhaseFailures& failures,
                          const std::map<NodeId, std::vector<u64>>& entries, u32 hop_limit,
                          u32 phase_nonce) {
  if (entries.empty()) throw std::invalid_argument("minicast_round: empty participant set");
  for (const auto& [id, section] : entries) {
    if (id < 1 || id > topo.n)
      throw std::invalid_argument("minicast_round: participant not in topology");
    if (section.empty())
      throw std::invalid_argument("minicast_round: participant with empty chain section");
  }

  // Flatten chain sections into a global entry list in id order.
  std::vector<Entry> all;
  std::map<NodeId, std::size_t> section_start;
  for (const auto& [id, section] : entries) {
    section_start[id] = all.size();
    for (std::size_t k = 0; k < section.size(); ++k)
      all.push_back(Entry{id, static_cast<u16>(k), section[k]});
  }
  const std::size_t n_entries = all.size();
  const u64 chain_len = static_cast<u64>(n_entries) + 2;  // header + data + trailer

  std::set<NodeId> alive;
  for (const auto& [id, section] : entries)
    if (!failures.dead.count(id)) alive.insert(id);

  std::map<NodeId, u32> budget;
  std::map<NodeId, u32> death_after;  // chain transmissions before dying
  for (NodeId v : alive) {
    budget[v] = config.ntx;
    const auto it = failures.mid_share.find(v);
    if (it != failures.mid_share.end()) death_after[v] = it->second;
  }

  // holdings[v] over global entry indices; hop distance per held entry.
  std::map<NodeId, std::vector<bool>> holds;
  std::map<NodeId, std::vector<u32>> hops;
  for (const auto& [id, section] : entries) {
    holds[id].assign(n_entries, false);
    hops[id].assign(n_entries, 0);
    for (std::size_t k = 0; k < section.size(); ++k) holds[id][section_start[id] + k] = true;
  }

  NetMetrics out;
  const bool deterministic = !topo.has_random_links();
  std::map<NodeId, u32> tx_done;
  u32 slot = 0;

  // Hop-limited sharing has a fixed delivery target per node: every entry
  // originating within hop_limit of it over the initially-alive graph.
  std::map<NodeId, std::vector<bool>> targets;
  if (hop_limit > 0) {
    for (NodeId v : alive) {
      const auto dist = topo.distances_from(v, alive);
      auto& t = targets[v];
      t.assign(n_entries, false);
      for (std::size_t e = 0; e < n_entries; ++e) {
        const auto it = dist.find(all[e].origin);
        if (it != dist.end() && it->second <= hop_limit) t[e] = true;
      }
    }
  }

  auto union_of_alive = [&]() {
    std::vector<bool> u(n_entries, false);
    for (NodeId v : alive)
      for (std::size_t e = 0; e < n_entries; ++e)
        if (holds[v][e]) u[e] = true;
    return u;
  };

  for (;;) {
    std::set<NodeId> transmitters;
    for (NodeId v : alive)
      if (budget[v] > 0) transmitters.insert(v);
    if (transmitters.empty()) break;

    bool done = true;
    if (hop_limit > 0) {
      // Target reached: every alive node holds its hop-limited entry set.
      for (NodeId v : alive) {
        const auto& t = targets[v];
        for (std::size_t e = 0; e < n_entries && done; ++e)
          if (t[e] && !holds[v][e]) done = false;
        if (!done) break;
      }
    } else {
      // Termination: all alive participants share an identical vector.
      if (alive.size() > 1) {
        const auto& first = holds[*alive.begin()];
        for (NodeId v : alive)
          if (holds[v] != first) {
            done = false;
            break;
          }
      }
    }
    if (done) break;

    ++slot;
    const auto global_union = union_of_alive();
    std::map<NodeId, bool> engaged;
    for (NodeId v : alive) {
      bool incomplete = false;
      for (std::size_t e = 0; e < n_entries; ++e)
        if (global_union[e] && !holds[v][e]) {
          incomplete = true;
          break;
        }
      engaged[v] = budget[v] > 0 || incomplete;
      if (engaged[v]) out.per_node[v].radio_on += chain_len;
    }

    // Snapshot transmissions: an entry received this slot is forwarded
    // starting next slot.
    const auto snapshot = holds;
    bool any_reception = false;
    for (std::size_t e = 0; e < n_entries; ++e) {
      const u32 subslot = static_cast<u32>(e) + 1;  // after the header
      for (NodeId v : alive) {
        if (!engaged[v] || holds[v][e]) continue;
        for (NodeId u : topo.adj[v]) {
          if (!transmitters.count(u) || !snapshot.at(u)[e]) continue;
          if (hop_limit > 0 && hops.at(u)[e] >= hop_limit) continue;  // outreach exhausted
          if (!link_draw(config.rng_seed, phase_nonce, slot, subslot, u, v,
                         topo.link_probability(u, v)))
            continue;
          holds[v][e] = true;
          hops[v][e] = hops.at(u)[e] + 1;
          any_reception = true;
          break;
        }
      }
    }

    std::vector<NodeId> died;
    for (NodeId v : transmitters) {
      budget[v] -= 1;
      tx_done[v] += 1;
      const auto it = death_after.find(v);
      if (it != death_after.end() && tx_done[v] >= it->second) died.push_back(v);
    }
    for (NodeId v : died) alive.erase(v);

    if (deterministic && !any_reception) break;  // propagation settled
  }

  out.slots = slot;
  out.duration = static_cast<u64>(slot) * chain_len;
  for (const auto& [id, section] : entries) {
    out.per_node[id].latency = out.duration;
    if (out.per_node[id].radio_on > out.duration) out.per_node[id].radio_on = out.duration;
    auto& got = out.delivered[id];
    for (std::size_t e = 0; e < n_entries; ++e)
      if (holds[id][e]) got.push_back(all[e]);
  }
  return out;
}

NetMetrics restricted_minicast(const Topology& topo, const SimConfig& config,
                               const PhaseFailures& failures,
                               const std::map<NodeId, std::vector<u64>>& entries, u32 hop_limit,
                               u32 phase_nonce) {
  if (hop_limit < 1) throw std::invalid_argument("restricted_minicast: hop_limit must be >= 1");
  return minicast_round(topo, config, failures, entries, hop_limit, phase_nonce);
}

}  // namespace lipisim
