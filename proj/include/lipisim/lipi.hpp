#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "lipisim/aggspec.hpp"
#include "lipisim/dfke.hpp"
#include "lipisim/stnet.hpp"

namespace lipisim {

enum class RoundPhase { SyncFlood, Share1, MissingFlood, Share2Recovery, Done };

enum class RoundStatus {
  Ok,
  InitiatorFailed,     // the initiator is in the failure plan; round aborted
  IncompleteDelivery,  // some survivor could not assemble a full vector
  RecoveryFailed,      // a node failed during the recovery share itself
};

const char* to_string(RoundPhase phase);
const char* to_string(RoundStatus status);

/// Everything that actually went over the air in one phase. Payload
/// entries are only those received by at least one node other than
/// their origin; values a failed node never transmitted do not appear.
struct PhaseRecord {
  RoundPhase phase = RoundPhase::SyncFlood;
  std::string kind;  // "glossy" | "minicast"
  std::vector<Entry> payloads;
  u64 duration = 0;
  u32 slots = 0;
};

struct RoundTrace {
  u32 seq_no = 0;
  std::vector<NodeId> participants;
  std::vector<NodeId> missing;  // the flooded recovery list, empty otherwise
  std::vector<PhaseRecord> phases;
  std::map<NodeId, std::vector<Entry>> share_view;  // per-node final share observations
  u32 minicast_rounds() const;
};

struct AggregateResult {
  RoundStatus status = RoundStatus::Ok;
  bool recovery_used = false;
  u32 seq_no = 0;
  std::set<NodeId> participants;  // expected contributors at round start
  std::set<NodeId> contributors;  // nodes whose masked value entered the demask
  std::set<NodeId> survivors;     // nodes that computed the aggregate
  std::map<NodeId, AggregateValue> per_node;
  AggregateValue aggregate;  // the agreed value when status == Ok
  NetMetrics metrics;        // per-node totals summed over all phases
  RoundTrace trace;
};

/// Ids in `expected` whose chain entry is absent from the initiator's
/// view; the initiator's observation defines the flooded missing list.
std::set<NodeId> detect_missing(const std::vector<Entry>& initiator_view,
                                const std::set<NodeId>& expected);

/// One aggregation round: sync flood, mask, all-to-all share, and (only
/// when the initiator detected absentees) missing-list flood plus one
/// recovery share over recomputed masks. initiator == 0 picks the
/// smallest participant id.
AggregateResult lipi_round(const Topology& topo, const SimConfig& config,
                           const AggregationSpec& spec, const std::map<NodeId, u64>& secrets,
                           const std::map<NodeId, KeyTable>& keys, u32 seq_no,
                           NodeId initiator = 0);

struct JoinEvent {
  u32 round = 1;  // node participates from this round on
  NodeId node = 0;
};

struct PeriodicOptions {
  u32 num_rounds = 1;
  RefreshPolicy refresh;
  std::vector<JoinEvent> joins;
  ModParams params{2147483647ull, 7};
  NodeId initiator = 0;
  u64 dfke_seed = 1;
};

/// Periodic execution: the sequence number advances every round and the
/// key exchange re-runs whenever the refresh policy fires or membership
/// changes. DFKE metrics are folded into the triggering round's totals.
std::vector<AggregateResult> run_periodic(const Topology& topo, const SimConfig& config,
                                          const AggregationSpec& spec,
                                          const std::map<NodeId, u64>& secrets,
                                          const PeriodicOptions& options);

}  // namespace lipisim
