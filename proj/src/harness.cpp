#include "lipisim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lipisim::harness {

namespace {

const ModParams kDhParams{2147483647ull, 7};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, sep)) out.push_back(token);
  return out;
}

u64 parse_u64(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const u64 v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("invalid number for ") + what + ": '" + s + "'");
  }
}

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace

Json ExperimentConfig::to_json() const {
  Json j;
  j["protocol"] = protocol;
  j["topology"] = topology;
  j["ntx"] = ntx;
  j["family"] = family;
  j["secrets"] = secrets;
  j["failures"] = failures;
  j["rounds"] = rounds;
  j["seed"] = seed;
  j["format"] = format;
  j["field_prime"] = field_prime;
  j["degree"] = degree;
  j["hop_limit"] = hop_limit;
  j["ppmp_prime"] = ppmp_prime;
  j["gm_modulus"] = gm_modulus;
  j["power_exponent"] = power_exponent;
  j["refresh_threshold"] = refresh_threshold;
  j["initiator"] = initiator;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  ExperimentConfig c;
  const ExperimentConfig defaults;
  const Json known = defaults.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown config key: " + key);
  }
  c.protocol = j.value("protocol", defaults.protocol);
  c.topology = j.value("topology", defaults.topology);
  c.ntx = j.value("ntx", defaults.ntx);
  c.family = j.value("family", defaults.family);
  c.secrets = j.value("secrets", defaults.secrets);
  c.failures = j.value("failures", defaults.failures);
  c.rounds = j.value("rounds", defaults.rounds);
  c.seed = j.value("seed", defaults.seed);
  c.format = j.value("format", defaults.format);
  c.field_prime = j.value("field_prime", defaults.field_prime);
  c.degree = j.value("degree", defaults.degree);
  c.hop_limit = j.value("hop_limit", defaults.hop_limit);
  c.ppmp_prime = j.value("ppmp_prime", defaults.ppmp_prime);
  c.gm_modulus = j.value("gm_modulus", defaults.gm_modulus);
  c.power_exponent = j.value("power_exponent", defaults.power_exponent);
  c.refresh_threshold = j.value("refresh_threshold", defaults.refresh_threshold);
  c.initiator = j.value("initiator", defaults.initiator);
  return c;
}

Topology build_topology(const ExperimentConfig& config) {
  const auto parts = split(config.topology, ':');
  if (parts.empty()) throw ConfigError("empty topology spec");
  const std::string& kind = parts[0];
  if (kind == "file") {
    if (parts.size() != 2) throw ConfigError("topology file spec: file:PATH");
    return Topology::from_file(parts[1]);
  }
  if (kind == "complete" || kind == "ring" || kind == "line") {
    if (parts.size() != 2) throw ConfigError("topology spec: " + kind + ":N");
    const u32 n = static_cast<u32>(parse_u64(parts[1], "node count"));
    if (kind == "complete") return Topology::complete(n);
    if (kind == "ring") return Topology::ring(n);
    return Topology::line(n);
  }
  if (kind == "rgg") {
    if (parts.size() < 3 || parts.size() > 4)
      throw ConfigError("topology spec: rgg:N:SIDE[:RADIUS]");
    const u32 n = static_cast<u32>(parse_u64(parts[1], "node count"));
    const double side = static_cast<double>(parse_u64(parts[2], "area side"));
    const double radius = parts.size() == 4
                              ? static_cast<double>(parse_u64(parts[3], "radius"))
                              : 100.0;
    return Topology::random_geometric_connected(n, side, radius, config.seed);
  }
  throw ConfigError("unknown topology kind: " + kind);
}

AggregationSpec build_family(const ExperimentConfig& config) {
  AggregationSpec spec;
  spec.gm_modulus = config.gm_modulus;
  const auto parts = split(config.family, ':');
  const std::string& name = parts.empty() ? std::string("sum") : parts[0];
  if (name == "sum") {
    spec.family = AggregationFamily::Sum;
  } else if (name == "am") {
    spec.family = AggregationFamily::ArithmeticMean;
  } else if (name == "gm") {
    spec.family = AggregationFamily::GeometricMean;
  } else if (name == "harmonic") {
    spec.family = AggregationFamily::HarmonicMean;
  } else if (name == "power") {
    spec.family = AggregationFamily::PowerMean;
    spec.power_exponent =
        parts.size() > 1 ? std::stod(parts[1]) : config.power_exponent;
  } else {
    throw ConfigError("unknown aggregation family: " + config.family);
  }
  return spec;
}

std::map<NodeId, u64> build_secrets(const ExperimentConfig& config, u32 n) {
  std::map<NodeId, u64> out;
  const auto parts = split(config.secrets, ':');
  const std::string& mode = parts.empty() ? std::string("ids") : parts[0];
  if (mode == "ids") {
    for (NodeId i = 1; i <= n; ++i) out[i] = i;
    return out;
  }
  if (mode == "uniform") {
    if (parts.size() != 3) throw ConfigError("secrets spec: uniform:LO:HI");
    const u64 lo = parse_u64(parts[1], "secrets lo");
    const u64 hi = parse_u64(parts[2], "secrets hi");
    if (lo > hi) throw ConfigError("secrets range is empty");
    for (NodeId i = 1; i <= n; ++i)
      out[i] = keyed_rand_range({config.seed ^ (static_cast<u64>(i) << 8), i, tag::kSecrets}, lo, hi);
    return out;
  }
  if (mode == "list") {
    if (parts.size() != 2) throw ConfigError("secrets spec: list:v1,v2,...");
    const auto values = split(parts[1], ',');
    if (values.size() != n)
      throw ConfigError("secrets list length " + std::to_string(values.size()) +
                        " does not match n=" + std::to_string(n));
    for (u32 i = 0; i < n; ++i) out[i + 1] = parse_u64(values[i], "secret value");
    return out;
  }
  throw ConfigError("unknown secrets mode: " + config.secrets);
}

std::vector<FailureEvent> parse_failures(const std::string& text) {
  std::vector<FailureEvent> plan;
  if (text.empty()) return plan;
  for (const auto& token : split(text, ',')) {
    const auto kv = split(token, ':');
    if (kv.size() != 2) throw ConfigError("failure spec: kind:ID, got '" + token + "'");
    FailureEvent ev;
    if (kv[0] == "silent") {
      ev.phase = FailurePhase::AfterDfkeSilent;
      ev.node = static_cast<NodeId>(parse_u64(kv[1], "failure node"));
    } else if (kv[0] == "before") {
      ev.phase = FailurePhase::BeforeDfke;
      ev.node = static_cast<NodeId>(parse_u64(kv[1], "failure node"));
    } else if (kv[0] == "mid") {
      ev.phase = FailurePhase::MidShare;
      const auto at = split(kv[1], '@');
      ev.node = static_cast<NodeId>(parse_u64(at[0], "failure node"));
      ev.after_k = at.size() > 1 ? static_cast<u32>(parse_u64(at[1], "mid-share count")) : 1;
      if (ev.after_k < 1) throw ConfigError("mid-share failure needs at least one transmission");
    } else {
      throw ConfigError("unknown failure kind: " + kv[0]);
    }
    plan.push_back(ev);
  }
  return plan;
}

namespace {

Json aggregate_json(const AggregateValue& v) {
  Json j;
  switch (v.family) {
    case AggregationFamily::Sum: j["family"] = "sum"; break;
    case AggregationFamily::ArithmeticMean: j["family"] = "am"; break;
    case AggregationFamily::GeometricMean: j["family"] = "gm"; break;
    case AggregationFamily::HarmonicMean: j["family"] = "harmonic"; break;
    case AggregationFamily::PowerMean: j["family"] = "power"; break;
  }
  j["integer_value"] = v.integer_value;
  j["divisor"] = v.divisor;
  j["real_value"] = v.real_value;
  return j;
}

Json record_json(const std::string& protocol, u32 round, const AggregateResult& r,
                 NodeId initiator, bool overflow) {
  Json rec;
  rec["round"] = round;
  rec["protocol"] = protocol;
  rec["seq_no"] = r.seq_no;
  rec["status"] = to_string(r.status);
  rec["recovery_used"] = r.recovery_used;
  rec["overflow"] = overflow;
  rec["aggregate"] = aggregate_json(r.aggregate);
  rec["participants"] = r.participants;
  rec["survivors"] = r.survivors;
  rec["missing"] = r.trace.missing;

  Json init;
  init["id"] = initiator;
  const auto mit = r.metrics.per_node.find(initiator);
  init["latency"] = mit != r.metrics.per_node.end() ? mit->second.latency : 0;
  init["radio_on"] = mit != r.metrics.per_node.end() ? mit->second.radio_on : 0;
  rec["initiator"] = init;

  Json nodes = Json::array();
  for (const auto& [id, m] : r.metrics.per_node) {
    if (id == initiator) continue;
    Json nj;
    nj["id"] = id;
    nj["latency"] = m.latency;
    nj["radio_on"] = m.radio_on;
    nodes.push_back(nj);
  }
  rec["nodes"] = nodes;

  Json phases = Json::array();
  for (const auto& p : r.trace.phases) {
    Json pj;
    pj["phase"] = to_string(p.phase);
    pj["kind"] = p.kind;
    pj["duration"] = p.duration;
    pj["slots"] = p.slots;
    phases.push_back(pj);
  }
  rec["phases"] = phases;
  rec["minicast_rounds"] = r.trace.minicast_rounds();
  return rec;
}

NodeId pick_initiator(const ExperimentConfig& config) {
  return config.initiator ? config.initiator : 1;
}

SimConfig sim_config(const ExperimentConfig& config, const Topology& topo) {
  SimConfig sim;
  sim.ntx = config.ntx ? config.ntx : topo.diameter() + 1;
  sim.rng_seed = config.seed;
  sim.failure_plan = parse_failures(config.failures);
  for (const auto& ev : sim.failure_plan)
    if (ev.node < 1 || ev.node > topo.n) throw ConfigError("failure node outside the topology");
  return sim;
}

}  // namespace

Json run_experiment(const ExperimentConfig& config) {
  const auto topo = build_topology(config);
  const auto sim = sim_config(config, topo);
  const auto spec = build_family(config);
  auto secrets = build_secrets(config, topo.n);
  const NodeId initiator = pick_initiator(config);
  if (config.rounds < 1) throw ConfigError("rounds must be >= 1");

  Json out;
  out["config"] = config.to_json();
  Json records = Json::array();

  if (config.protocol == "lipi") {
    if (spec.quasi_arithmetic()) {
      for (auto& [id, v] : secrets) v = qam_encode(spec, static_cast<double>(v));
    }
    PeriodicOptions opts;
    opts.num_rounds = config.rounds;
    opts.refresh.round_threshold = config.refresh_threshold;
    opts.params = kDhParams;
    opts.initiator = initiator;
    opts.dfke_seed = config.seed;
    const auto results = run_periodic(topo, sim, spec, secrets, opts);
    for (u32 r = 0; r < results.size(); ++r)
      records.push_back(record_json("lipi", r + 1, results[r], initiator, false));
  } else if (config.protocol == "ppmp") {
    if (spec.family != AggregationFamily::Sum)
      throw ConfigError("ppmp computes sums only");
    PpmpParams params;
    params.p_enc = config.ppmp_prime;
    for (u32 r = 1; r <= config.rounds; ++r) {
      const auto round = ppmp_round(topo, sim, secrets, config.seed, r, params);
      records.push_back(record_json("ppmp", r, round.result, initiator, round.overflow));
    }
  } else if (config.protocol == "sss" || config.protocol == "nsss") {
    if (spec.family != AggregationFamily::Sum)
      throw ConfigError(config.protocol + " computes sums only");
    const auto exchange = dfke_round(topo, sim, kDhParams, initiator, config.seed);
    for (u32 r = 1; r <= config.rounds; ++r) {
      ShareRound round;
      if (config.protocol == "sss") {
        const u32 degree =
            config.degree ? config.degree : static_cast<u32>(exchange.tables.size()) - 1;
        round = sss_round(topo, sim, secrets, exchange.tables, config.field_prime, degree, r);
      } else {
        const u32 d = config.degree ? config.degree : 2;
        round = nsss_round(topo, sim, secrets, exchange.tables, config.field_prime, d,
                           config.hop_limit, r);
      }
      if (r == 1) round.result.metrics.accumulate(exchange.metrics);  // setup cost
      records.push_back(record_json(config.protocol, r, round.result, initiator, round.overflow));
    }
  } else {
    throw ConfigError("unknown protocol: " + config.protocol);
  }
  out["records"] = records;
  return out;
}

namespace {

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(xs.size()));
  return s;
}

void collect_metrics(const Json& record, std::vector<double>& latency,
                     std::vector<double>& radio) {
  latency.push_back(record["initiator"]["latency"].get<double>());
  radio.push_back(record["initiator"]["radio_on"].get<double>());
  for (const auto& node : record["nodes"]) {
    latency.push_back(node["latency"].get<double>());
    radio.push_back(node["radio_on"].get<double>());
  }
}

}  // namespace

Json compare_experiments(const std::vector<ExperimentConfig>& configs) {
  if (configs.size() < 2) throw ConfigError("compare needs at least two protocols");
  for (const auto& c : configs) {
    if (c.topology != configs.front().topology || c.seed != configs.front().seed ||
        c.ntx != configs.front().ntx)
      throw ConfigError("compare requires one shared topology/seed/ntx across entries");
  }

  Json out;
  out["topology"] = configs.front().topology;
  Json rows = Json::array();
  for (const auto& c : configs) {
    const auto run = run_experiment(c);
    std::vector<double> latency, radio;
    u32 comm_rounds = 0;
    for (const auto& rec : run["records"]) {
      collect_metrics(rec, latency, radio);
      comm_rounds = std::max(comm_rounds, rec["minicast_rounds"].get<u32>());
    }
    const auto ls = stats_of(latency);
    const auto rs = stats_of(radio);
    Json row;
    row["protocol"] = c.protocol;
    row["latency_mean"] = ls.mean;
    row["latency_stddev"] = ls.stddev;
    row["radio_on_mean"] = rs.mean;
    row["radio_on_stddev"] = rs.stddev;
    row["communication_rounds"] = comm_rounds;
    rows.push_back(row);
  }
  // Savings of the first entry against every other.
  const double base_l = rows[0]["latency_mean"].get<double>();
  const double base_r = rows[0]["radio_on_mean"].get<double>();
  Json savings = Json::array();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double other_l = rows[i]["latency_mean"].get<double>();
    const double other_r = rows[i]["radio_on_mean"].get<double>();
    Json s;
    s["baseline"] = rows[i]["protocol"];
    s["latency_savings_pct"] = other_l == 0.0 ? 0.0 : (other_l - base_l) / other_l * 100.0;
    s["radio_on_savings_pct"] = other_r == 0.0 ? 0.0 : (other_r - base_r) / other_r * 100.0;
    savings.push_back(s);
  }
  out["reference"] = configs.front().protocol;
  out["protocols"] = rows;
  out["savings"] = savings;
  return out;
}

Json sweep_experiment(const ExperimentConfig& base, const std::string& axis,
                      const std::vector<u64>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one axis value");
  if (axis != "n" && axis != "area" && axis != "failures" && axis != "ntx")
    throw ConfigError("sweep axis must be one of n | area | failures | ntx");

  Json out;
  out["axis"] = axis;
  out["base"] = base.to_json();
  Json rows = Json::array();
  for (u64 value : values) {
    ExperimentConfig c = base;
    auto parts = split(base.topology, ':');
    if (axis == "n") {
      if (parts.size() < 2) throw ConfigError("n sweep needs a generator topology");
      parts[1] = std::to_string(value);
    } else if (axis == "area") {
      if (parts[0] != "rgg" || parts.size() < 3)
        throw ConfigError("area sweep needs an rgg topology");
      parts[2] = std::to_string(value);
    } else if (axis == "ntx") {
      c.ntx = static_cast<u32>(value);
    }
    std::string topo_spec;
    for (std::size_t i = 0; i < parts.size(); ++i)
      topo_spec += (i ? ":" : "") + parts[i];
    c.topology = topo_spec;

    if (axis == "failures") {
      // Fail the requested number of highest-id nodes, sparing the initiator.
      const auto probe = build_topology(c);
      const NodeId initiator = pick_initiator(c);
      if (value >= probe.n) throw ConfigError("more failures than nodes");
      std::string plan;
      NodeId v = probe.n;
      for (u64 k = 0; k < value; --v) {
        if (v == initiator) continue;
        plan += (plan.empty() ? "" : ",") + std::string("silent:") + std::to_string(v);
        ++k;
      }
      c.failures = plan;
    }

    const auto run = run_experiment(c);
    for (const auto& rec : run["records"]) {
      for (const char* cls : {"initiator", "other"}) {
        std::vector<double> latency, radio;
        if (std::string(cls) == "initiator") {
          latency.push_back(rec["initiator"]["latency"].get<double>());
          radio.push_back(rec["initiator"]["radio_on"].get<double>());
        } else {
          for (const auto& node : rec["nodes"]) {
            latency.push_back(node["latency"].get<double>());
            radio.push_back(node["radio_on"].get<double>());
          }
        }
        Json row;
        row["value"] = value;
        row["round"] = rec["round"];
        row["node_class"] = cls;
        row["latency_mean"] = stats_of(latency).mean;
        row["radio_on_mean"] = stats_of(radio).mean;
        row["status"] = rec["status"];
        row["aggregate"] = rec["aggregate"]["integer_value"];
        row["recovery_used"] = rec["recovery_used"];
        rows.push_back(row);
      }
    }
  }
  out["rows"] = rows;
  return out;
}

namespace {

std::string records_csv(const Json& output) {
  std::ostringstream out;
  out << "round,protocol,status,aggregate_integer,aggregate_real,recovery_used,node,class,"
         "latency,radio_on\n";
  for (const auto& rec : output["records"]) {
    const auto row_prefix = [&](std::ostringstream& line) {
      line << rec["round"] << "," << rec["protocol"].get<std::string>() << ","
           << rec["status"].get<std::string>() << "," << rec["aggregate"]["integer_value"] << ","
           << rec["aggregate"]["real_value"] << "," << (rec["recovery_used"].get<bool>() ? 1 : 0)
           << ",";
    };
    std::ostringstream line;
    row_prefix(line);
    line << rec["initiator"]["id"] << ",initiator," << rec["initiator"]["latency"] << ","
         << rec["initiator"]["radio_on"] << "\n";
    out << line.str();
    for (const auto& node : rec["nodes"]) {
      std::ostringstream nline;
      row_prefix(nline);
      nline << node["id"] << ",other," << node["latency"] << "," << node["radio_on"] << "\n";
      out << nline.str();
    }
  }
  return out.str();
}

}  // namespace

std::string render_run(const Json& output, const std::string& format) {
  if (format == "csv") return records_csv(output);
  if (format == "json") {
    std::string text;
    for (const auto& rec : output["records"]) text += rec.dump() + "\n";
    return text;
  }
  throw ConfigError("unknown output format: " + format);
}

std::string render_compare(const Json& output, const std::string& format) {
  if (format == "json") return output.dump(2) + "\n";
  if (format == "csv") {
    std::ostringstream out;
    out << "protocol,latency_mean,latency_stddev,radio_on_mean,radio_on_stddev,"
           "communication_rounds\n";
    for (const auto& row : output["protocols"]) {
      out << row["protocol"].get<std::string>() << "," << row["latency_mean"] << ","
          << row["latency_stddev"] << "," << row["radio_on_mean"] << ","
          << row["radio_on_stddev"] << "," << row["communication_rounds"] << "\n";
    }
    for (const auto& s : output["savings"]) {
      out << "# " << output["reference"].get<std::string>() << " vs "
          << s["baseline"].get<std::string>() << ": latency " << s["latency_savings_pct"]
          << "% radio_on " << s["radio_on_savings_pct"] << "%\n";
    }
    return out.str();
  }
  throw ConfigError("unknown output format: " + format);
}

std::string render_sweep(const Json& output, const std::string& format) {
  if (format == "json") return output.dump(2) + "\n";
  if (format == "csv") {
    std::ostringstream out;
    out << "value,round,node_class,latency_mean,radio_on_mean,status,aggregate,recovery_used\n";
    for (const auto& row : output["rows"]) {
      out << row["value"] << "," << row["round"] << "," << row["node_class"].get<std::string>()
          << "," << row["latency_mean"] << "," << row["radio_on_mean"] << ","
          << row["status"].get<std::string>() << "," << row["aggregate"] << ","
          << (row["recovery_used"].get<bool>() ? 1 : 0) << "\n";
    }
    return out.str();
  }
  throw ConfigError("unknown output format: " + format);
}

}  // namespace lipisim::harness
