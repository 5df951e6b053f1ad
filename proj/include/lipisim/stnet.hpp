#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lipisim/modmath.hpp"

namespace lipisim {

/// Undirected connectivity graph over node ids 1..n with optional
/// per-link reception probability (absent means 1.0, i.e. a reliable
/// link under the capture-effect abstraction).
struct Topology {
  u32 n = 0;
  std::vector<std::set<NodeId>> adj;  // 1-indexed; adj[0] unused

  void resize(u32 nodes);
  void add_edge(NodeId u, NodeId v, double prob = 1.0);
  double link_probability(NodeId u, NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const;
  bool has_random_links() const;

  bool connected() const;
  bool connected_subset(const std::set<NodeId>& nodes) const;
  /// Longest shortest path over the whole graph; n when disconnected.
  u32 diameter() const;
  /// BFS distances from `from`, restricted to `within`; unreachable = UINT32_MAX.
  std::map<NodeId, u32> distances_from(NodeId from, const std::set<NodeId>& within) const;

  static Topology complete(u32 n);
  static Topology ring(u32 n);
  static Topology line(u32 n);
  /// n points placed uniformly in a side x side square, connecting pairs
  /// within `radius`. Deterministic in the seed.
  static Topology random_geometric(u32 n, double side, double radius, u64 seed);
  /// Retries derived seeds until the sampled graph is connected.
  static Topology random_geometric_connected(u32 n, double side, double radius, u64 seed);

  /// Line-oriented file format: first line n, then one "u v [prob]" edge
  /// per line. '#' starts a comment.
  static Topology from_file(const std::string& path);
  static Topology parse(const std::string& text);
  std::string serialize() const;

 private:
  std::map<u64, double> link_prob_;  // keyed by packed (min,max); only p < 1 stored
};

enum class FailurePhase { BeforeDfke, AfterDfkeSilent, MidShare };

struct FailureEvent {
  NodeId node = 0;
  FailurePhase phase = FailurePhase::AfterDfkeSilent;
  u32 after_k = 1;  // MidShare: chain transmissions completed before dying
};

struct SimConfig {
  u32 ntx = 3;
  u64 rng_seed = 1;
  u32 max_hops = 0;  // cap on flood rounds; 0 derives 4n+8
  std::vector<FailureEvent> failure_plan;

  u32 flood_round_cap(u32 n) const { return max_hops ? max_hops : 4 * n + 8; }
};

/// Failure plan projected onto a single communication phase.
struct PhaseFailures {
  std::set<NodeId> dead;           // never active in this phase
  std::map<NodeId, u32> mid_share; // dies after its k-th chain transmission
};

PhaseFailures failures_for_dfke(const SimConfig& config);
PhaseFailures failures_for_sync(const SimConfig& config);
PhaseFailures failures_for_share(const SimConfig& config);

/// One sub-slot payload inside a MiniCast chain. `index` is the position
/// within the origin's chain section (0 for single-entry chains).
struct Entry {
  NodeId origin = 0;
  u16 index = 0;
  u64 value = 0;

  friend bool operator<(const Entry& a, const Entry& b) {
    return a.origin != b.origin ? a.origin < b.origin : a.index < b.index;
  }
  friend bool operator==(const Entry& a, const Entry& b) {
    return a.origin == b.origin && a.index == b.index && a.value == b.value;
  }
};

struct NodeMetrics {
  u64 latency = 0;   // sub-slot units
  u64 radio_on = 0;  // sub-slot units; always <= latency
};

struct NetMetrics {
  std::map<NodeId, NodeMetrics> per_node;
  std::map<NodeId, std::vector<Entry>> delivered;  // final holdings, sorted
  u64 duration = 0;  // phase length in sub-slots
  u32 slots = 0;     // chain slots (MiniCast) or flood rounds (Glossy)

  void accumulate(const NetMetrics& phase);
};

/// Network-wide flood of one payload from `initiator`. Per round, every
/// holder with remaining transmission budget transmits; a listener
/// receives when at least one alive transmitting neighbor's link draw
/// succeeds. A failed initiator yields an empty no-delivery result.
NetMetrics glossy_flood(const Topology& topo, const SimConfig& config,
                        const PhaseFailures& failures, NodeId initiator, u64 payload = 0,
                        u32 phase_nonce = 0);

/// All-to-all chain sharing. `entries` maps every participant to the
/// values of its chain section (one sub-slot each; most protocols use a
/// single entry per node). The chain is header + sections in id order +
/// trailer, one sub-slot per element. Each alive participant transmits
/// the chain once per slot while its ntx budget lasts and merges what it
/// hears otherwise; an entry advances one hop per slot. hop_limit > 0
/// stops re-forwarding an entry beyond that many hops from its origin.
NetMetrics minicast_round(const Topology& topo, const SimConfig& config,
                          const PhaseFailures& failures,
                          const std::map<NodeId, std::vector<u64>>& entries,
                          u32 hop_limit = 0, u32 phase_nonce = 0);

/// minicast_round with a mandatory hop limit (neighborhood-restricted
/// sharing).
NetMetrics restricted_minicast(const Topology& topo, const SimConfig& config,
                               const PhaseFailures& failures,
                               const std::map<NodeId, std::vector<u64>>& entries,
                               u32 hop_limit, u32 phase_nonce = 0);

}  // namespace lipisim
