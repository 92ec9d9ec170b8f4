#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cavphase/cli_runner.hpp"
#include "cavphase/errors.hpp"

using namespace cavphase;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}
}  // namespace

TEST_CASE("empty spin document takes every default") {
  const auto cfg = parse_config("", Command::Spin);
  CHECK(cfg.command == Command::Spin);
  CHECK(cfg.spin.alpha == 0.01);
  CHECK(cfg.cavity.epsilon == 0.01);
  CHECK(cfg.policy.hard_cap == 3000.0);
}

TEST_CASE("invalid documents name the key and line") {
  auto message = [](std::string_view text) {
    try {
      parse_config(text, Command::Evolve);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  CHECK(message("# comment\nepsilon = 1.5\n").find("line 2: key 'epsilon'") != std::string::npos);
  CHECK(message("omega = fast\n").find("expected a real number") != std::string::npos);
  CHECK(message("colour = red\n").find("unknown key") != std::string::npos);
  CHECK(message("omega = 3\nomega = 4\n").find("duplicate") != std::string::npos);
  CHECK(message("command = scan\n").find("command line") != std::string::npos);
  CHECK(message("just words\n").find("line 1") != std::string::npos);
  CHECK(message("basis_size = 4\nresonance.n = 6\n").find("resonance.n") != std::string::npos);
}

TEST_CASE("configuration round-trips through its canonical text") {
  const auto cfg = parse_config(
      "command = phases\ngeometry = cylindrical\nepsilon = 0.01\nomega = 66.632\n"
      "resonance.n = 4\nresonance.N = 1\nsteps_per_period = 100\nstride = 100\n");
  const auto again = parse_config(cfg.to_text());
  CHECK(again.to_text() == cfg.to_text());
  CHECK(again.hash() == cfg.hash());
  CHECK(again.cavity == cfg.cavity);
  auto other = cfg;
  other.policy.workers = 8;
  other.output_dir = "elsewhere";
  CHECK(other.hash() == cfg.hash());
  other.cavity.omega = 66.633;
  CHECK(other.hash() != cfg.hash());
}

TEST_CASE("resonance selection") {
  auto cfg = parse_config("omega = 66.632\n", Command::Phases);
  const auto basis = make_basis(cfg.cavity.geometry, cfg.cavity.basis_size);
  const auto p = selected_resonance(cfg, basis);
  CHECK(p.n == 4);
  CHECK(p.N == 1);
  cfg = parse_config("omega = 17.28\nresonance.n = 3\nresonance.N = 2\n", Command::Phases);
  const auto q = selected_resonance(cfg, basis);
  CHECK(q.n == 3);
  CHECK(q.N == 2);
}

TEST_CASE("spin run writes manifest-tagged outputs deterministically") {
  const auto dir = fs::temp_directory_path() / "cavphase_cli_test";
  fs::remove_all(dir);
  auto cfg = parse_config("spin.alpha = 0.3\nspin.samples_per_period = 16\n", Command::Spin);
  cfg.output_dir = dir / "a";
  const auto first = run(cfg);
  REQUIRE(first.exit_code == 0);
  cfg.output_dir = dir / "b";
  cfg.policy.workers = 3;
  REQUIRE(run(cfg).exit_code == 0);
  CHECK(slurp(dir / "a" / "spin.csv") == slurp(dir / "b" / "spin.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["hash"] == cfg.hash());
  CHECK(slurp(dir / "a" / "spin.csv").rfind("# manifest=" + cfg.hash() + "\n", 0) == 0);
  const auto reparsed = parse_config(manifest["config_text"].get<std::string>());
  CHECK(reparsed.hash() == cfg.hash());
  fs::remove_all(dir);
}

TEST_CASE("numerical failures exit with code 3 and an error document") {
  const auto dir = fs::temp_directory_path() / "cavphase_cli_fail";
  fs::remove_all(dir);
  auto cfg = parse_config("omega = 12.344\nt_end = 5\ntolerance = 1e-300\nmethod = direct\n", Command::Evolve);
  cfg.output_dir = dir;
  const auto outcome = run(cfg);
  CHECK(outcome.exit_code == 3);
  const auto doc = nlohmann::json::parse(outcome.error_json);
  CHECK(doc["error"]["exit_code"] == 3);
  CHECK(fs::exists(dir / "error.json"));
  fs::remove_all(dir);
}
