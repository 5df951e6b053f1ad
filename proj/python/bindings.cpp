#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lipisim/harness.hpp"

namespace py = pybind11;

namespace {

using lipisim::harness::ExperimentConfig;
using lipisim::harness::Json;

ExperimentConfig config_from_str(const std::string& text) {
  return ExperimentConfig::from_json(Json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Synchronous-transmission simulator for privacy-preserving aggregation";

  m.def("mod_pow", &lipisim::mod_pow, py::arg("base"), py::arg("exp"), py::arg("modulus"));
  m.def("mod_inv", &lipisim::mod_inv, py::arg("value"), py::arg("modulus"));
  m.def("bit_reverse", &lipisim::bit_reverse, py::arg("value"), py::arg("width"));
  m.def(
      "keyed_rand",
      [](lipisim::u64 key, lipisim::u32 seq_no, lipisim::u8 tag) {
        return lipisim::keyed_rand({key, seq_no, tag});
      },
      py::arg("key"), py::arg("seq_no"), py::arg("tag") = 0);
  m.def("find_generator", &lipisim::find_generator, py::arg("prime"));
  m.def("is_prime", &lipisim::is_prime, py::arg("n"));

  m.def(
      "generate_topology",
      [](const std::string& spec, lipisim::u64 seed) {
        ExperimentConfig c;
        c.topology = spec;
        c.seed = seed;
        return lipisim::harness::build_topology(c).serialize();
      },
      py::arg("spec"), py::arg("seed") = 1,
      "Expands a topology spec (complete:N, ring:N, line:N, rgg:N:SIDE[:RADIUS]) "
      "into the line-oriented edge-list format.");

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        return lipisim::harness::run_experiment(config_from_str(config_json)).dump();
      },
      py::arg("config_json"),
      "Runs one experiment; takes and returns JSON text. See lipisim.run().");

  m.def(
      "compare_experiments",
      [](const std::vector<std::string>& config_jsons) {
        std::vector<ExperimentConfig> configs;
        for (const auto& text : config_jsons) configs.push_back(config_from_str(text));
        return lipisim::harness::compare_experiments(configs).dump();
      },
      py::arg("config_jsons"));

  m.def(
      "sweep_experiment",
      [](const std::string& base_json, const std::string& axis,
         const std::vector<lipisim::u64>& values) {
        return lipisim::harness::sweep_experiment(config_from_str(base_json), axis, values).dump();
      },
      py::arg("base_json"), py::arg("axis"), py::arg("values"));

  m.def("default_config", [] {
    return ExperimentConfig{}.to_json().dump();
  });
}
