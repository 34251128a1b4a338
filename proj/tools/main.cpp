#include <chrono>
#include <iostream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "qmslab/errors.hpp"

namespace qmslab::cli {

int main_entry(int argc, char** argv) {
  CLI::App app{"qmslab: quantum Markov semigroup checks"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  double tol_abs = -1, tol_rel = -1;
  int workers = 0;
  for (const char* name : kCommands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "YAML experiment config")->required();
    sub->add_option("--seed", seed, "base seed (overrides config)");
    sub->add_option("--samples", samples, "sample count (overrides config)")->check(CLI::PositiveNumber);
    sub->add_option("--tol-abs", tol_abs, "absolute tolerance")->check(CLI::NonNegativeNumber);
    sub->add_option("--tol-rel", tol_rel, "relative tolerance")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto start = std::chrono::steady_clock::now();
    ExperimentConfig cfg = load_config(config_path);
    cfg.command = app.get_subcommands().front()->get_name();
    if (seed) cfg.seed = seed;
    if (samples) cfg.samples = samples;
    if (tol_abs >= 0) cfg.tol.abs = tol_abs;
    if (tol_rel >= 0) cfg.tol.rel = tol_rel;
    if (!out.empty()) cfg.out = out;
    if (workers) cfg.workers = workers;
    const RunResult r = run(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(r, cfg.out, secs);
    for (const auto& c : r.manifest["checks"])
      std::cout << (c["hard_failed"].get<std::size_t>() ? "FAIL " : c["informational"].get<bool>() ? "info " : "ok   ")
                << c["id"].get<std::string>() << "  " << c["total"] << " reports, worst slack "
                << c["worst_slack"].dump() << "\n";
    std::cout << "manifest: " << cfg.out << "/manifest.json\n";
    return r.failed ? 1 : 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const YAML::Exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace qmslab::cli

int main(int argc, char** argv) { return qmslab::cli::main_entry(argc, argv); }
