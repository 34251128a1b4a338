#include <filesystem>
#include <fstream>

#include "cli.hpp"
#include "qmslab/errors.hpp"

namespace qmslab::cli {

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("out: cannot write " + p.string());
  f << content;
}

}  // namespace

std::string manifest_text(const RunResult& r) { return r.manifest.dump(2) + "\n"; }

void write_outputs(const RunResult& r, const std::string& out_dir, double wall_seconds) {
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("out: cannot create " + out_dir + ": " + ec.message());
  for (const auto& f : r.files) write_file(dir / f.name, f.content);
  write_file(dir / "manifest.json", manifest_text(r));
  // wall-clock lives outside the manifest so that manifests are reproducible byte for byte
  write_file(dir / "timing.json", json{{"wall_seconds", wall_seconds}}.dump(2) + "\n");
}

}  // namespace qmslab::cli
