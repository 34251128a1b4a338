#include <filesystem>

#include "cli.hpp"
#include "doctest.h"
#include "qmslab/errors.hpp"

using namespace qmslab;

namespace {

cli::ExperimentConfig parse(const std::string& text) { return cli::parse_config(YAML::Load(text), QMSLAB_CONFIG_DIR); }

}  // namespace

TEST_CASE("config round trip") {
  for (const auto& e : std::filesystem::directory_iterator(QMSLAB_CONFIG_DIR)) {
    if (e.path().extension() != ".yaml") continue;
    CAPTURE(e.path().string());
    const auto a = cli::load_config(e.path().string());
    const std::string text = cli::emit_config(a);
    const auto b = parse(text);
    CHECK(cli::emit_config(b) == text);
    CHECK(cli::config_hash(a) == cli::config_hash(b));
  }
  const auto c = parse("command: decay\ntolerance: {abs: 0.1, rel: 1.0000000000000002e-7}\ntimes: [0, 0.30000000000000004]\n");
  const auto d = parse(cli::emit_config(c));
  CHECK(d.tol.rel == c.tol.rel);
  CHECK(d.times == c.times);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(parse("command: decay\nbogus: 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("samples: 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("tolerance: {abs: -1}\n"), ConfigError);
  CHECK_THROWS_AS(parse("times: [0, -1]\n"), ConfigError);
  CHECK_THROWS_AS(parse("model: [1, 2]\n"), ConfigError);
  CHECK_NOTHROW(parse("command: decay\nmodel: ~\n"));
  CHECK(cli::config_hash(parse("seed: 1\n")) != cli::config_hash(parse("seed: 2\n")));
  CHECK(cli::config_hash(parse("out: a\n")) == cli::config_hash(parse("out: b\n")));
}

TEST_CASE("matrix entries") {
  const Mat M = cli::parse_matrix(YAML::Load("[[1, [0, 2]], [[0, -2], 3]]"), "m");
  CHECK(M(0, 1) == cplx(0, 2));
  CHECK(M(1, 1) == cplx(3, 0));
  CHECK(cli::parse_matrix(cli::emit_matrix(M), "m") == M);
  CHECK_THROWS_AS(cli::parse_matrix(YAML::Load("[[1, 2], [3]]"), "m"), ConfigError);
  CHECK_THROWS_AS(cli::parse_matrix(YAML::Load("[[1, .nan]]"), "m"), ConfigError);
}

TEST_CASE("runs are deterministic and invalid models are rejected") {
  auto cfg = cli::load_config(std::string(QMSLAB_CONFIG_DIR) + "/check_model.yaml");
  const auto a = cli::run(cfg), b = cli::run(cfg);
  CHECK(cli::manifest_text(a) == cli::manifest_text(b));
  CHECK_FALSE(a.failed);
  CHECK(a.manifest["config_hash"] == cli::config_hash(cfg));

  auto bad = parse("command: check-model\nmodel: {preset: amplitude_damping, p0: 1.5}\n");
  CHECK_THROWS_AS(cli::run(bad), Error);
  bad.command = "nonsense";
  CHECK_THROWS_AS(cli::run(bad), ConfigError);
}
