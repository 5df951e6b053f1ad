#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "lipisim/adversary.hpp"
#include "lipisim/baselines.hpp"
#include "lipisim/lipi.hpp"

namespace lipisim::harness {

using Json = nlohmann::ordered_json;

/// One fully reproducible experiment: the pair (config, seed) pins every
/// draw the simulator makes. Serializes to/from JSON with exactly these
/// keys.
struct ExperimentConfig {
  std::string protocol = "lipi";        // lipi | ppmp | sss | nsss
  std::string topology = "complete:8";  // complete:N | ring:N | line:N | rgg:N:SIDE[:RADIUS] | file:PATH
  u32 ntx = 0;                          // 0: diameter + 1
  std::string family = "sum";           // sum | am | gm | harmonic | power:E
  std::string secrets = "ids";          // ids | uniform:LO:HI | list:v1,v2,...
  std::string failures;                 // silent:ID | before:ID | mid:ID@K, comma separated
  u32 rounds = 1;
  u64 seed = 1;
  std::string format = "json";          // json | csv
  u64 field_prime = 2305843009213693951ull;  // sss / nsss share field
  u32 degree = 0;                            // sss degree (0: n-1); nsss share count d
  u32 hop_limit = 2;                         // nsss outreach
  u64 ppmp_prime = 2147483647ull;
  u64 gm_modulus = 2305843009213693951ull;
  double power_exponent = 2.0;
  u32 refresh_threshold = 100;
  NodeId initiator = 0;  // 0: smallest participant

  Json to_json() const;
  static ExperimentConfig from_json(const Json& j);
};

Topology build_topology(const ExperimentConfig& config);
AggregationSpec build_family(const ExperimentConfig& config);
std::map<NodeId, u64> build_secrets(const ExperimentConfig& config, u32 n);
std::vector<FailureEvent> parse_failures(const std::string& text);

/// Executes the configured protocol for the requested rounds. The result
/// carries the echoed config and one record per round; see
/// docs/result_schema.json for the record layout.
Json run_experiment(const ExperimentConfig& config);

/// Runs each config (all on the identical topology/ntx/seed) and emits
/// per-protocol mean/stddev latency and radio-on plus the first
/// protocol's percentage savings against every other entry.
Json compare_experiments(const std::vector<ExperimentConfig>& configs);

/// Re-runs the base config along one axis (n | area | failures | ntx),
/// one record row per (value, round, node class).
Json sweep_experiment(const ExperimentConfig& base, const std::string& axis,
                      const std::vector<u64>& values);

std::string render_run(const Json& output, const std::string& format);
std::string render_compare(const Json& output, const std::string& format);
std::string render_sweep(const Json& output, const std::string& format);

}  // namespace lipisim::harness
