#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "lipisim/harness.hpp"

namespace {

using lipisim::harness::ExperimentConfig;
using lipisim::harness::Json;

struct CommonFlags {
  std::string config_file;
  std::string out_path;
  ExperimentConfig values;
};

void add_config_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_file, "JSON config file (flags override its keys)");
  cmd->add_option("--protocol", flags.values.protocol, "lipi | ppmp | sss | nsss");
  cmd->add_option("--topology", flags.values.topology,
                  "complete:N | ring:N | line:N | rgg:N:SIDE[:RADIUS] | file:PATH");
  cmd->add_option("--ntx", flags.values.ntx, "chain transmissions per node (0: diameter+1)");
  cmd->add_option("--family", flags.values.family, "sum | am | gm | harmonic | power:E");
  cmd->add_option("--secrets", flags.values.secrets, "ids | uniform:LO:HI | list:v1,v2,...");
  cmd->add_option("--failures", flags.values.failures, "silent:ID | before:ID | mid:ID@K, comma separated");
  cmd->add_option("--rounds", flags.values.rounds, "aggregation rounds to run");
  cmd->add_option("--seed", flags.values.seed, "run seed; fixes every draw");
  cmd->add_option("--format", flags.values.format, "json | csv");
  cmd->add_option("--field-prime", flags.values.field_prime, "share field prime (sss/nsss)");
  cmd->add_option("--degree", flags.values.degree, "sss polynomial degree / nsss share count");
  cmd->add_option("--hop-limit", flags.values.hop_limit, "nsss share outreach in hops");
  cmd->add_option("--ppmp-prime", flags.values.ppmp_prime, "ppmp expansion prime");
  cmd->add_option("--gm-modulus", flags.values.gm_modulus, "GM field prime");
  cmd->add_option("--refresh", flags.values.refresh_threshold, "rounds between key refreshes");
  cmd->add_option("--initiator", flags.values.initiator, "initiator node id (0: smallest)");
  cmd->add_option("--out", flags.out_path, "also write the output to this file");
}

ExperimentConfig resolve_config(const CLI::App* cmd, const CommonFlags& flags) {
  ExperimentConfig config;
  if (!flags.config_file.empty()) {
    std::ifstream in(flags.config_file);
    if (!in) throw std::invalid_argument("cannot open config file: " + flags.config_file);
    Json j;
    in >> j;
    config = ExperimentConfig::from_json(j);
  }
  const auto apply = [&](const char* flag, auto member) {
    if (cmd->count(flag)) config.*member = flags.values.*member;
  };
  apply("--protocol", &ExperimentConfig::protocol);
  apply("--topology", &ExperimentConfig::topology);
  apply("--ntx", &ExperimentConfig::ntx);
  apply("--family", &ExperimentConfig::family);
  apply("--secrets", &ExperimentConfig::secrets);
  apply("--failures", &ExperimentConfig::failures);
  apply("--rounds", &ExperimentConfig::rounds);
  apply("--seed", &ExperimentConfig::seed);
  apply("--format", &ExperimentConfig::format);
  apply("--field-prime", &ExperimentConfig::field_prime);
  apply("--degree", &ExperimentConfig::degree);
  apply("--hop-limit", &ExperimentConfig::hop_limit);
  apply("--ppmp-prime", &ExperimentConfig::ppmp_prime);
  apply("--gm-modulus", &ExperimentConfig::gm_modulus);
  apply("--refresh", &ExperimentConfig::refresh_threshold);
  apply("--initiator", &ExperimentConfig::initiator);
  return config;
}

void emit(const std::string& text, const std::string& out_path) {
  std::cout << text;
  if (out_path.empty()) return;
  std::filesystem::path path(out_path);
  if (path.is_relative()) {
    if (const char* dir = std::getenv("LIPISIM_OUT_DIR")) path = std::filesystem::path(dir) / path;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file: " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synchronous-transmission simulator for privacy-preserving aggregation protocols"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "Execute one protocol and stream per-round records");
  add_config_flags(run_cmd, run_flags);

  CommonFlags cmp_flags;
  std::string protocols_csv;
  auto* cmp_cmd = app.add_subcommand("compare", "Run several protocols on one topology");
  add_config_flags(cmp_cmd, cmp_flags);
  cmp_cmd->add_option("--protocols", protocols_csv, "comma-separated protocol list")->required();

  CommonFlags sweep_flags;
  std::string axis;
  std::string values_csv;
  auto* sweep_cmd = app.add_subcommand("sweep", "Re-run one config along an axis");
  add_config_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--axis", axis, "n | area | failures | ntx")->required();
  sweep_cmd->add_option("--values", values_csv, "comma-separated axis values")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto config = resolve_config(run_cmd, run_flags);
      const auto output = lipisim::harness::run_experiment(config);
      emit(lipisim::harness::render_run(output, config.format), run_flags.out_path);
    } else if (cmp_cmd->parsed()) {
      const auto base = resolve_config(cmp_cmd, cmp_flags);
      std::vector<ExperimentConfig> configs;
      std::istringstream in(protocols_csv);
      std::string name;
      while (std::getline(in, name, ',')) {
        ExperimentConfig c = base;
        c.protocol = name;
        configs.push_back(c);
      }
      const auto output = lipisim::harness::compare_experiments(configs);
      emit(lipisim::harness::render_compare(output, base.format), cmp_flags.out_path);
    } else if (sweep_cmd->parsed()) {
      const auto base = resolve_config(sweep_cmd, sweep_flags);
      std::vector<lipisim::u64> values;
      std::istringstream in(values_csv);
      std::string v;
      while (std::getline(in, v, ',')) values.push_back(std::stoull(v));
      const auto output = lipisim::harness::sweep_experiment(base, axis, values);
      emit(lipisim::harness::render_sweep(output, base.format.empty() ? "csv" : base.format),
           sweep_flags.out_path);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
