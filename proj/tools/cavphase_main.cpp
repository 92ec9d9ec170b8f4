// cavphase <command> --config <path> [--out <dir>] [--workers N]
//
// CAVPHASE_WORKERS overrides the worker count of the configuration file;
// --workers overrides both. Exit codes: 0 ok, 2 configuration error,
// 3 numerical failure. Failures print a JSON error document on stderr.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cavphase/cli_runner.hpp"
#include "cavphase/errors.hpp"

namespace {

int fail(std::string_view kind, const std::string& message, int code) {
  std::cerr << cavphase::error_json(kind, message, code) << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle in a vibrating cavity: evolution, resonance scans and geometric phases"};
  app.set_version_flag("--version", std::string(cavphase::kToolVersion));
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::optional<int> workers;
  app.add_option("command", command, "evolve, scan, table1, phases, spin or crosscheck")->required();
  app.add_option("--config", config_path, "flat key = value configuration file")->required();
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--workers", workers, "concurrent scan workers")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage_error", e.what(), 2);
  }

  cavphase::RunConfig cfg;
  try {
    cfg = cavphase::load_config(config_path, cavphase::command_from_string(command));
    if (const char* env = std::getenv("CAVPHASE_WORKERS")) {
      try {
        const int n = std::stoi(env);
        if (n < 1) throw std::invalid_argument("non-positive");
        cfg.policy.workers = n;
      } catch (const std::exception&) {
        throw cavphase::ConfigError(std::string("CAVPHASE_WORKERS must be a positive integer, got '") + env + "'");
      }
    }
    if (workers) cfg.policy.workers = *workers;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
  } catch (const cavphase::Error& e) {
    return fail(e.kind(), e.what(), 2);
  }

  const auto outcome = cavphase::run(cfg);
  if (outcome.exit_code != 0) {
    std::cerr << outcome.error_json << '\n';
    return outcome.exit_code;
  }
  for (const auto& f : outcome.files) std::cout << f.string() << '\n';
  return 0;
}
