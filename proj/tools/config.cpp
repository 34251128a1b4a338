#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "qmslab/errors.hpp"

namespace qmslab::cli {

namespace {

const std::set<std::string> kTopKeys{"command", "seed",    "samples", "workers", "tolerance", "out",  "times",
                                     "model",   "model_prime", "channel", "graph", "history", "gibbs", "rho",
                                     "estimate"};

template <class T>
T scalar_as(const YAML::Node& n, const std::string& path, const char* what) {
  if (!n.IsScalar()) throw ConfigError(path + ": expected " + what);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": expected " + what + ", got '" + n.Scalar() + "'");
  }
}

double finite_double(const YAML::Node& n, const std::string& path) {
  const double x = scalar_as<double>(n, path, "a number");
  if (!std::isfinite(x)) throw ConfigError(path + ": expected a finite number");
  return x;
}

cplx parse_entry(const YAML::Node& n, const std::string& path) {
  if (n.IsScalar()) return cplx(finite_double(n, path), 0.0);
  if (!n.IsSequence() || n.size() != 2) throw ConfigError(path + ": expected [re, im] or a number");
  return cplx(finite_double(n[0], path + "[0]"), finite_double(n[1], path + "[1]"));
}

YAML::Node section(const YAML::Node& root, const char* key) {
  const YAML::Node n = root[key];
  if (!n || n.IsNull()) return YAML::Node(YAML::NodeType::Undefined);
  if (!n.IsMap() && !n.IsScalar()) throw ConfigError(std::string(key) + ": expected a map or a file path");
  return YAML::Clone(n);
}

void emit_double(YAML::Emitter& e, double x) { e << x; }

}  // namespace

Mat parse_matrix(const YAML::Node& node, const std::string& path) {
  if (!node || !node.IsSequence() || node.size() == 0) throw ConfigError(path + ": expected a list of rows");
  const std::size_t rows = node.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!node[i].IsSequence() || node[i].size() == 0) throw ConfigError(rp + ": expected a row");
    if (i == 0) cols = node[i].size();
    if (node[i].size() != cols) throw ConfigError(rp + ": ragged row");
  }
  Mat M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      M(i, j) = parse_entry(node[i][j], path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  return M;
}

YAML::Node emit_matrix(const Mat& M) {
  YAML::Node rows(YAML::NodeType::Sequence);
  for (int i = 0; i < M.rows(); ++i) {
    YAML::Node row(YAML::NodeType::Sequence);
    for (int j = 0; j < M.cols(); ++j) {
      YAML::Node e(YAML::NodeType::Sequence);
      e.push_back(M(i, j).real());
      e.push_back(M(i, j).imag());
      e.SetStyle(YAML::EmitterStyle::Flow);
      row.push_back(e);
    }
    row.SetStyle(YAML::EmitterStyle::Flow);
    rows.push_back(row);
  }
  return rows;
}

json matrix_json(const Mat& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < M.cols(); ++j) row.push_back({M(i, j).real(), M(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

ExperimentConfig parse_config(const YAML::Node& root, const std::string& base_dir) {
  if (!root || !root.IsMap()) throw ConfigError("config: expected a map at the top level");
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (!kTopKeys.count(key)) throw ConfigError(key + ": unknown key");
  }
  ExperimentConfig c;
  c.base_dir = base_dir;
  if (root["command"]) c.command = scalar_as<std::string>(root["command"], "command", "a string");
  if (root["seed"]) c.seed = scalar_as<std::uint64_t>(root["seed"], "seed", "a non-negative integer");
  if (root["samples"]) {
    const long s = scalar_as<long>(root["samples"], "samples", "an integer");
    if (s < 1) throw ConfigError("samples: must be >= 1");
    c.samples = static_cast<std::size_t>(s);
  }
  if (root["workers"]) {
    c.workers = scalar_as<int>(root["workers"], "workers", "an integer");
    if (c.workers < 1) throw ConfigError("workers: must be >= 1");
  }
  if (const YAML::Node t = root["tolerance"]) {
    if (!t.IsMap()) throw ConfigError("tolerance: expected a map with abs and rel");
    for (const auto& kv : t) {
      const std::string k = kv.first.as<std::string>();
      if (k != "abs" && k != "rel") throw ConfigError("tolerance." + k + ": unknown key");
    }
    if (t["abs"]) c.tol.abs = finite_double(t["abs"], "tolerance.abs");
    if (t["rel"]) c.tol.rel = finite_double(t["rel"], "tolerance.rel");
    if (c.tol.abs < 0 || c.tol.rel < 0) throw ConfigError("tolerance: must be non-negative");
  }
  if (root["out"]) c.out = scalar_as<std::string>(root["out"], "out", "a path");
  if (const YAML::Node t = root["times"]) {
    if (!t.IsSequence()) throw ConfigError("times: expected a list of numbers");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double x = finite_double(t[i], "times[" + std::to_string(i) + "]");
      if (x < 0) throw ConfigError("times[" + std::to_string(i) + "]: must be >= 0");
      c.times.push_back(x);
    }
  }
  c.model = section(root, "model");
  c.model_prime = section(root, "model_prime");
  c.channel = section(root, "channel");
  c.graph = section(root, "graph");
  c.history = section(root, "history");
  c.gibbs = section(root, "gibbs");
  c.rho = section(root, "rho");
  c.estimate = section(root, "estimate");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("config: cannot read " + path);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(root, dir.empty() ? "." : dir.string());
}

std::string emit_config(const ExperimentConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "command" << YAML::Value << c.command;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "samples" << YAML::Value << c.samples;
  e << YAML::Key << "workers" << YAML::Value << c.workers;
  e << YAML::Key << "tolerance" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "abs" << YAML::Value;
  emit_double(e, c.tol.abs);
  e << YAML::Key << "rel" << YAML::Value;
  emit_double(e, c.tol.rel);
  e << YAML::EndMap;
  e << YAML::Key << "out" << YAML::Value << c.out;
  if (!c.times.empty()) {
    e << YAML::Key << "times" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double t : c.times) emit_double(e, t);
    e << YAML::EndSeq;
  }
  const std::pair<const char*, const YAML::Node*> sections[] = {
      {"model", &c.model}, {"model_prime", &c.model_prime}, {"channel", &c.channel},   {"graph", &c.graph},
      {"history", &c.history}, {"gibbs", &c.gibbs},         {"rho", &c.rho},           {"estimate", &c.estimate}};
  for (const auto& [key, node] : sections)
    if (node->IsDefined() && !node->IsNull()) e << YAML::Key << key << YAML::Value << *node;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::string config_hash(const ExperimentConfig& c) {
  // the output directory does not change results
  ExperimentConfig k = c;
  k.out.clear();
  const std::string s = emit_config(k);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace qmslab::cli
