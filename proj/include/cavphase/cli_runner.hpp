#pragma once

// Configuration parsing and experiment orchestration behind the cavphase
// command-line tool. A configuration is a flat "key = value" document; '#'
// starts a comment. Every key has a default, unknown keys are rejected.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cavphase/core_model.hpp"
#include "cavphase/resonance_scanner.hpp"
#include "cavphase/spin_rotator.hpp"
#include "cavphase/tdse_evolver.hpp"

namespace cavphase {

enum class Command { Evolve, Scan, Table1, Phases, Spin, Crosscheck };

std::string_view to_string(Command command);
/// ConfigError for an unknown name.
Command command_from_string(std::string_view name);

struct RunConfig {
  Command command = Command::Evolve;
  CavityConfig cavity;
  SpinConfig spin;
  std::filesystem::path output_dir = "out";

  // Time evolution (evolve, phases, crosscheck).
  Propagation method = Propagation::Floquet;
  int steps_per_period = 200;
  double tolerance = 1e-10;
  double period_tolerance = 1e-13;
  double t_end = 0.0;          // 0: rabi_periods Rabi periods of the selected resonance
  double rabi_periods = 2.3;
  int stride = 1;

  // Resonance selection; n = 0 or N = 0 picks the resonance nearest to omega.
  int level_k = 1;
  int level_n = 0;
  int order_N = 0;

  // scan
  double scan_lo = 10.0;
  double scan_hi = 70.0;
  double scan_step = 0.1;
  RunPolicy policy;

  // table1
  std::vector<ResonanceRequest> table_rows{{1, 2}, {1, 3}, {1, 4}};

  // spin
  int spin_periods = 0;  // 0: two Rabi periods
  int spin_samples_per_period = 64;
  double spin_tolerance = 1e-12;

  /// Canonical document: every key in a fixed order, reals with 17 digits.
  /// parse_config(to_text()) reproduces the configuration exactly.
  std::string to_text() const;
  /// FNV-1a of to_text() without the runtime-only keys (workers, output_dir),
  /// so outputs carry the same hash whatever the worker count.
  std::string hash() const;
};

/// ConfigError naming the key and line for unknown keys, malformed values and
/// violated invariants. When `command` is given it must agree with any
/// command key in the document.
RunConfig parse_config(std::string_view text, std::optional<Command> command = {});
RunConfig load_config(const std::filesystem::path& path, std::optional<Command> command = {});

/// Resonance used by evolve/phases/crosscheck: the explicit (k, n, N) if set,
/// otherwise the predicted peak nearest to cavity.omega.
PredictedPeak selected_resonance(const RunConfig& cfg, const Basis& basis);

struct CrossCheckSample {
  double t = 0.0;
  double full = 0.0;  // |c_n|^2 from the Galerkin evolver
  double su2 = 0.0;   // from the two-level SU(2) factorization
  double rwa = 0.0;   // closed-form rotating-wave amplitude
};

struct CrossCheck {
  std::vector<CrossCheckSample> samples;
  double rabi_period = 0.0;
  double full_vs_su2 = 0.0;  // max |difference| over the run
  double full_vs_rwa = 0.0;
  double su2_vs_rwa = 0.0;
  int chart_restarts = 0;
};

/// Upper-level populations over `periods` RWA Rabi periods from the ground
/// state k, sampled every tau / spp.
CrossCheck crosscheck(const CavityConfig& cfg, const Basis& basis, int k, int n, int N, double periods = 1.0,
                      int steps_per_period = 200);

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;
  std::string error_json;  // empty on success
};

/// Executes cfg.command, writing manifest.json and the command's CSV/JSON
/// files into cfg.output_dir. Library errors become exit code 3 (2 for
/// configuration problems) with a JSON error document, also saved as
/// error.json.
RunOutcome run(const RunConfig& cfg);

/// {"error": {"kind", "message", "exit_code"}}.
std::string error_json(std::string_view kind, std::string_view message, int exit_code);

inline constexpr std::string_view kToolVersion = "0.3.0";

}  // namespace cavphase
