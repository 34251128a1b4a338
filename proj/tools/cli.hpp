#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "qmslab/report.hpp"
#include "qmslab/operator_core.hpp"

namespace qmslab::cli {

using json = nlohmann::json;

// Top-level keys are typed; model, channel, graph, history, gibbs, rho and estimate stay YAML nodes
// (inline maps or paths to YAML files relative to the config) and are interpreted by each command.
struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 1;
  std::size_t samples = 200;
  int workers = 1;
  Tolerance tol;
  std::string out = "out";
  std::vector<double> times;
  YAML::Node model, model_prime, channel, graph, history, gibbs, rho, estimate;
  std::string base_dir = ".";  // not serialized
};

ExperimentConfig parse_config(const YAML::Node& root, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
std::string emit_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);  // FNV-1a 64 of the emitted config without out, hex

// Dense complex matrices are lists of rows; an entry is [re, im] or a plain number.
Mat parse_matrix(const YAML::Node& node, const std::string& path);
YAML::Node emit_matrix(const Mat& M);
json matrix_json(const Mat& M);

struct Artifact {
  std::string name;
  std::string content;
};

struct RunResult {
  json manifest;
  std::vector<Artifact> files;
  bool failed = false;
};

extern const char* const kCommands[6];

// Throws ConfigError (or another qmslab::Error for invalid models).
RunResult run(const ExperimentConfig& cfg);
std::string manifest_text(const RunResult& r);  // exact bytes written to manifest.json
void write_outputs(const RunResult& r, const std::string& out_dir, double wall_seconds);

// 17 significant digits, the CSV number format.
std::string fmt17(double x);

int main_entry(int argc, char** argv);

}  // namespace qmslab::cli
