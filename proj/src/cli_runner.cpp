#include "cavphase/cli_runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "cavphase/csv_io.hpp"
#include "cavphase/errors.hpp"
#include "cavphase/phase_engine.hpp"
#include "cavphase/su2_evolver.hpp"
#include "cavphase/two_level_rwa.hpp"

namespace cavphase {

namespace {

constexpr double kPi = std::numbers::pi;
using json = nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Thrown by value parsers and checks; parse_config adds key and line.
struct BadValue {
  std::string why;
};

double real_value(std::string_view v) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size() || !std::isfinite(out))
    throw BadValue{"expected a real number, got '" + std::string(v) + "'"};
  return out;
}

int int_value(std::string_view v) {
  int out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size())
    throw BadValue{"expected an integer, got '" + std::string(v) + "'"};
  return out;
}

void require(bool ok, const char* why) {
  if (!ok) throw BadValue{why};
}

std::vector<ResonanceRequest> rows_value(std::string_view v) {
  std::vector<ResonanceRequest> rows;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) throw BadValue{"table rows are N:n pairs, got '" + std::string(item) + "'"};
    ResonanceRequest r{int_value(trim(item.substr(0, colon))), int_value(trim(item.substr(colon + 1)))};
    require(r.N >= 1 && r.N <= 3, "resonance order N must be 1, 2 or 3");
    require(r.n >= 2, "upper level n must be at least 2");
    rows.push_back(r);
    v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
  }
  require(!rows.empty(), "at least one table row is required");
  return rows;
}

std::string rows_text(const std::vector<ResonanceRequest>& rows) {
  std::string out;
  for (const auto& r : rows) {
    if (!out.empty()) out += ',';
    out += std::to_string(r.N) + ':' + std::to_string(r.n);
  }
  return out;
}

struct Key {
  std::string_view name;
  bool runtime;  // excluded from the hash
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string real_text(double v) { return format_real(v); }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"command", false, [](RunConfig& c, std::string_view v) { c.command = command_from_string(v); },
       [](const RunConfig& c) { return std::string(to_string(c.command)); }},
      {"output_dir", true, [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); },
       [](const RunConfig& c) { return c.output_dir.string(); }},
      {"workers", true,
       [](RunConfig& c, std::string_view v) {
         c.policy.workers = int_value(v);
         require(c.policy.workers >= 1, "workers must be at least 1");
       },
       [](const RunConfig& c) { return std::to_string(c.policy.workers); }},
      {"geometry", false,
       [](RunConfig& c, std::string_view v) {
         try {
           c.cavity.geometry = Geometry::of(geometry_kind_from_string(v));
         } catch (const Error&) {
           throw BadValue{"geometry must be cylindrical or spherical"};
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.cavity.geometry.kind)); }},
      {"epsilon", false,
       [](RunConfig& c, std::string_view v) {
         c.cavity.epsilon = real_value(v);
         require(c.cavity.epsilon >= 0.0 && c.cavity.epsilon < 1.0, "must satisfy 0 <= epsilon < 1");
       },
       [](const RunConfig& c) { return real_text(c.cavity.epsilon); }},
      {"omega", false,
       [](RunConfig& c, std::string_view v) {
         c.cavity.omega = real_value(v);
         require(c.cavity.omega > 0.0, "drive frequency must be positive");
       },
       [](const RunConfig& c) { return real_text(c.cavity.omega); }},
      {"basis_size", false,
       [](RunConfig& c, std::string_view v) {
         c.cavity.basis_size = int_value(v);
         require(c.cavity.basis_size >= 2 && c.cavity.basis_size <= 200, "basis size must lie in [2, 200]");
       },
       [](const RunConfig& c) { return std::to_string(c.cavity.basis_size); }},
      {"method", false,
       [](RunConfig& c, std::string_view v) {
         if (v == "floquet") c.method = Propagation::Floquet;
         else if (v == "direct") c.method = Propagation::Direct;
         else throw BadValue{"method must be floquet or direct"};
       },
       [](const RunConfig& c) { return std::string(c.method == Propagation::Floquet ? "floquet" : "direct"); }},
      {"steps_per_period", false,
       [](RunConfig& c, std::string_view v) {
         c.steps_per_period = int_value(v);
         require(c.steps_per_period >= 4, "steps_per_period must be at least 4");
       },
       [](const RunConfig& c) { return std::to_string(c.steps_per_period); }},
      {"tolerance", false,
       [](RunConfig& c, std::string_view v) {
         c.tolerance = real_value(v);
         require(c.tolerance > 0.0 && c.tolerance < 1e-3, "tolerance must lie in (0, 1e-3)");
       },
       [](const RunConfig& c) { return real_text(c.tolerance); }},
      {"period_tolerance", false,
       [](RunConfig& c, std::string_view v) {
         c.period_tolerance = real_value(v);
         require(c.period_tolerance > 0.0 && c.period_tolerance < 1e-3, "period_tolerance must lie in (0, 1e-3)");
       },
       [](const RunConfig& c) { return real_text(c.period_tolerance); }},
      {"t_end", false,
       [](RunConfig& c, std::string_view v) {
         c.t_end = real_value(v);
         require(c.t_end >= 0.0, "t_end must be non-negative (0 selects rabi_periods)");
       },
       [](const RunConfig& c) { return real_text(c.t_end); }},
      {"rabi_periods", false,
       [](RunConfig& c, std::string_view v) {
         c.rabi_periods = real_value(v);
         require(c.rabi_periods > 0.0, "rabi_periods must be positive");
       },
       [](const RunConfig& c) { return real_text(c.rabi_periods); }},
      {"stride", false,
       [](RunConfig& c, std::string_view v) {
         c.stride = int_value(v);
         require(c.stride >= 1, "stride must be at least 1");
       },
       [](const RunConfig& c) { return std::to_string(c.stride); }},
      {"resonance.k", false,
       [](RunConfig& c, std::string_view v) {
         c.level_k = int_value(v);
         require(c.level_k >= 1, "lower level must be at least 1");
       },
       [](const RunConfig& c) { return std::to_string(c.level_k); }},
      {"resonance.n", false,
       [](RunConfig& c, std::string_view v) {
         c.level_n = int_value(v);
         require(c.level_n >= 0, "upper level must be non-negative (0 = nearest)");
       },
       [](const RunConfig& c) { return std::to_string(c.level_n); }},
      {"resonance.N", false,
       [](RunConfig& c, std::string_view v) {
         c.order_N = int_value(v);
         require(c.order_N >= 0 && c.order_N <= 3, "order must be 0 (nearest), 1, 2 or 3");
       },
       [](const RunConfig& c) { return std::to_string(c.order_N); }},
      {"scan.lo", false, [](RunConfig& c, std::string_view v) { c.scan_lo = real_value(v); },
       [](const RunConfig& c) { return real_text(c.scan_lo); }},
      {"scan.hi", false, [](RunConfig& c, std::string_view v) { c.scan_hi = real_value(v); },
       [](const RunConfig& c) { return real_text(c.scan_hi); }},
      {"scan.step", false,
       [](RunConfig& c, std::string_view v) {
         c.scan_step = real_value(v);
         require(c.scan_step > 0.0, "scan step must be positive");
       },
       [](const RunConfig& c) { return real_text(c.scan_step); }},
      {"policy.span_factor", false,
       [](RunConfig& c, std::string_view v) {
         c.policy.span_factor = real_value(v);
         require(c.policy.span_factor > 0.0, "span factor must be positive");
       },
       [](const RunConfig& c) { return real_text(c.policy.span_factor); }},
      {"policy.hard_cap", false,
       [](RunConfig& c, std::string_view v) {
         c.policy.hard_cap = real_value(v);
         require(c.policy.hard_cap > 0.0, "hard cap must be positive");
       },
       [](const RunConfig& c) { return real_text(c.policy.hard_cap); }},
      {"policy.coarse_cap", false,
       [](RunConfig& c, std::string_view v) {
         c.policy.coarse_cap = real_value(v);
         require(c.policy.coarse_cap > 0.0, "coarse cap must be positive");
       },
       [](const RunConfig& c) { return real_text(c.policy.coarse_cap); }},
      {"policy.fit_cap", false,
       [](RunConfig& c, std::string_view v) {
         c.policy.fit_cap = real_value(v);
         require(c.policy.fit_cap > 0.0, "fit cap must be positive");
       },
       [](const RunConfig& c) { return real_text(c.policy.fit_cap); }},
      {"policy.steps_per_period", false,
       [](RunConfig& c, std::string_view v) {
         c.policy.steps_per_period = int_value(v);
         require(c.policy.steps_per_period >= 4, "steps per period must be at least 4");
       },
       [](const RunConfig& c) { return std::to_string(c.policy.steps_per_period); }},
      {"policy.max_order", false,
       [](RunConfig& c, std::string_view v) {
         c.policy.max_order = int_value(v);
         require(c.policy.max_order >= 1 && c.policy.max_order <= 3, "max order must be 1, 2 or 3");
       },
       [](const RunConfig& c) { return std::to_string(c.policy.max_order); }},
      {"policy.max_level", false,
       [](RunConfig& c, std::string_view v) {
         c.policy.max_level = int_value(v);
         require(c.policy.max_level >= 0, "max level must be non-negative (0 = basis size)");
       },
       [](const RunConfig& c) { return std::to_string(c.policy.max_level); }},
      {"policy.points_per_fwhm", false,
       [](RunConfig& c, std::string_view v) {
         c.policy.points_per_fwhm = real_value(v);
         require(c.policy.points_per_fwhm >= 1.0, "points per FWHM must be at least 1");
       },
       [](const RunConfig& c) { return real_text(c.policy.points_per_fwhm); }},
      {"policy.refine_halfwidth", false,
       [](RunConfig& c, std::string_view v) {
         c.policy.refine_halfwidth = real_value(v);
         require(c.policy.refine_halfwidth > 0.0, "refinement half width must be positive");
       },
       [](const RunConfig& c) { return real_text(c.policy.refine_halfwidth); }},
      {"table.rows", false, [](RunConfig& c, std::string_view v) { c.table_rows = rows_value(v); },
       [](const RunConfig& c) { return rows_text(c.table_rows); }},
      {"spin.alpha", false,
       [](RunConfig& c, std::string_view v) {
         const double a = real_value(v);
         require(a > 0.0 && a < kPi, "cone angle must lie in (0, pi)");
         require(std::abs(std::cos(a)) > 1e-12, "cos(alpha) = 0 leaves the resonance undefined");
         c.spin = SpinConfig::resonant(a, c.spin.omega);
       },
       [](const RunConfig& c) { return real_text(c.spin.alpha); }},
      {"spin.omega", false,
       [](RunConfig& c, std::string_view v) {
         const double w = real_value(v);
         require(w > 0.0, "rotation rate must be positive");
         c.spin = SpinConfig::resonant(c.spin.alpha, w);
       },
       [](const RunConfig& c) { return real_text(c.spin.omega); }},
      {"spin.periods", false,
       [](RunConfig& c, std::string_view v) {
         c.spin_periods = int_value(v);
         require(c.spin_periods >= 0, "spin periods must be non-negative (0 = two Rabi periods)");
       },
       [](const RunConfig& c) { return std::to_string(c.spin_periods); }},
      {"spin.samples_per_period", false,
       [](RunConfig& c, std::string_view v) {
         c.spin_samples_per_period = int_value(v);
         require(c.spin_samples_per_period >= 4, "spin samples per period must be at least 4");
       },
       [](const RunConfig& c) { return std::to_string(c.spin_samples_per_period); }},
      {"spin.tolerance", false,
       [](RunConfig& c, std::string_view v) {
         c.spin_tolerance = real_value(v);
         require(c.spin_tolerance > 0.0 && c.spin_tolerance < 1e-3, "spin tolerance must lie in (0, 1e-3)");
       },
       [](const RunConfig& c) { return real_text(c.spin_tolerance); }},
  };
  return table;
}

const Key* find_key(std::string_view name) {
  for (const auto& k : keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string where(std::string_view key, int line) {
  return (line > 0 ? "line " + std::to_string(line) + ": " : std::string("defaults: ")) + "key '" +
         std::string(key) + "': ";
}

Basis basis_for(const RunConfig& cfg) { return make_basis(cfg.cavity.geometry, cfg.cavity.basis_size); }

EvolveOptions evolve_options(const RunConfig& cfg) {
  EvolveOptions o;
  o.steps_per_period = cfg.steps_per_period;
  o.stride = cfg.stride;
  o.method = cfg.method;
  o.tolerance = cfg.tolerance;
  o.period_tolerance = cfg.period_tolerance;
  return o;
}

double rwa_rabi_period(const CavityConfig& cavity, const Basis& basis, const PredictedPeak& p) {
  const auto spec = make_resonance(basis, p.k, p.n, p.N, cavity.omega);
  return rabi_period(rabi_solution(spec, cavity.epsilon, basis.coupling(p.n, p.k)));
}

double run_time(const RunConfig& cfg, const Basis& basis) {
  if (cfg.t_end > 0.0) return cfg.t_end;
  return cfg.rabi_periods * rwa_rabi_period(cfg.cavity, basis, selected_resonance(cfg, basis));
}

class Outputs {
 public:
  Outputs(const RunConfig& cfg) : dir_(cfg.output_dir), hash_(cfg.hash()) {
    std::filesystem::create_directories(dir_);
  }

  const std::string& hash() const { return hash_; }

  template <class Writer>
  void write(const std::string& name, Writer&& writer) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    writer(out);
    if (!out) throw InputError("failed writing " + path.string());
    files_.push_back(path);
  }

  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::vector<std::filesystem::path> files_;
};

json resonance_json(const PredictedPeak& p) {
  return {{"k", p.k}, {"n", p.n}, {"N", p.N}, {"omega", p.omega}, {"Gamma", p.Gamma}};
}

json run_evolve(const RunConfig& cfg, Outputs& out) {
  const auto basis = basis_for(cfg);
  const double t_end = run_time(cfg, basis);
  const auto traj = evolve(cfg.cavity, basis, basis_state(basis, cfg.level_k), t_end, evolve_options(cfg));
  out.write("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj, out.hash()); });
  const auto top = max_energy(traj);
  return {{"t_end", t_end},
          {"max_energy", top.value},
          {"max_energy_time", top.time},
          {"max_norm_drift", traj.max_norm_drift()},
          {"propagator_defect", traj.propagator_defect}};
}

json run_phases(const RunConfig& cfg, Outputs& out) {
  const auto basis = basis_for(cfg);
  const auto peak = selected_resonance(cfg, basis);
  const double t_end = run_time(cfg, basis);
  const auto traj = evolve(cfg.cavity, basis, basis_state(basis, peak.k), t_end, evolve_options(cfg));

  // Measured Rabi period when the run holds two envelope minima, else RWA.
  double T = rwa_rabi_period(cfg.cavity, basis, peak);
  std::string source = "rwa";
  try {
    std::vector<double> a2(traj.size());
    for (std::size_t i = 0; i < a2.size(); ++i) a2[i] = std::pow(alpha_at(traj.times[i], cfg.cavity), 2);
    T = rabi_period(traj.energies, a2, traj.dt, traj.samples_per_period, basis.energy(peak.k));
    source = "measured";
  } catch (const InputError&) {
  }
  const auto phases = analyze_phases(traj, T);
  out.write("phases.csv", [&](std::ostream& os) { write_phase_csv(os, phases, cfg.cavity.period(), out.hash()); });
  out.write("jumps.json", [&](std::ostream& os) { write_jump_report(os, phases.jumps, out.hash()); });
  const auto b1 = unwrap(phases.beta1);
  return {{"t_end", t_end},
          {"resonance", resonance_json(peak)},
          {"rabi_period", T},
          {"rabi_period_source", source},
          {"beta1_amplitude", oscillation_amplitude(b1)},
          {"jumps", phases.jumps.size()}};
}

json run_scan(const RunConfig& cfg, Outputs& out) {
  if (!(cfg.scan_hi > cfg.scan_lo) || !(cfg.scan_lo > 0.0))
    throw ConfigError(where("scan.hi", 0) + "scan range needs 0 < scan.lo < scan.hi");
  const auto basis = basis_for(cfg);
  const auto grid = build_grid(cfg.cavity, basis, cfg.scan_lo, cfg.scan_hi, cfg.scan_step, cfg.policy);
  const auto result = scan(cfg.cavity, basis, grid, cfg.policy);
  const auto peaks = find_peaks(result);
  out.write("scan.csv", [&](std::ostream& os) { write_scan_csv(os, result, out.hash()); });
  out.write("peaks.csv", [&](std::ostream& os) { write_peaks_csv(os, peaks, out.hash()); });
  std::size_t failed = 0;
  for (const auto& p : result.points) failed += !p.error.empty();
  json predicted = json::array();
  for (const auto& p : predicted_peaks(cfg.cavity, basis, cfg.scan_lo, cfg.scan_hi, cfg.policy))
    predicted.push_back(resonance_json(p));
  return {{"points", result.points.size()}, {"failed_points", failed}, {"peaks", peaks.size()},
          {"predicted", predicted}};
}

json run_table1(const RunConfig& cfg, Outputs& out) {
  const auto basis = basis_for(cfg);
  const auto rows = table1(cfg.cavity, basis, cfg.table_rows, cfg.policy);
  out.write("table1.csv", [&](std::ostream& os) { write_table_csv(os, rows, out.hash()); });
  std::size_t failed = 0;
  for (const auto& r : rows) failed += !r.error.empty();
  return {{"rows", rows.size()}, {"failed_rows", failed}};
}

json run_spin(const RunConfig& cfg, Outputs& out) {
  cfg.spin.validate();
  const int periods = cfg.spin_periods > 0
                          ? cfg.spin_periods
                          : static_cast<int>(std::ceil(2.0 * cfg.spin.rabi_period() / cfg.spin.period()));
  const auto traj = spin_numeric_trajectory(cfg.spin, periods, cfg.spin_samples_per_period, cfg.spin_tolerance);
  out.write("spin.csv", [&](std::ostream& os) { write_spin_csv(os, cfg.spin, traj, out.hash()); });
  return {{"periods", periods}, {"rabi_period", cfg.spin.rabi_period()}, {"lambda", cfg.spin.lambda()}};
}

json run_crosscheck(const RunConfig& cfg, Outputs& out) {
  const auto basis = basis_for(cfg);
  const auto peak = selected_resonance(cfg, basis);
  const double periods = cfg.t_end > 0.0 ? cfg.t_end / rwa_rabi_period(cfg.cavity, basis, peak) : 1.0;
  const auto check = crosscheck(cfg.cavity, basis, peak.k, peak.n, peak.N, periods, cfg.steps_per_period);
  out.write("crosscheck.csv", [&](std::ostream& os) {
    write_csv_header(os, {"t", "t_over_T", "full", "su2", "rwa"}, out.hash());
    for (const auto& s : check.samples) {
      os << format_real(s.t) << ',' << format_real(s.t / check.rabi_period) << ',' << format_real(s.full) << ','
         << format_real(s.su2) << ',' << format_real(s.rwa) << '\n';
    }
  });
  return {{"resonance", resonance_json(peak)},   {"rabi_period", check.rabi_period},
          {"full_vs_su2", check.full_vs_su2},    {"full_vs_rwa", check.full_vs_rwa},
          {"su2_vs_rwa", check.su2_vs_rwa},      {"chart_restarts", check.chart_restarts}};
}

int exit_code_for(const Error& e) {
  return dynamic_cast<const ConfigError*>(&e) ? 2 : 3;
}

}  // namespace

std::string_view to_string(Command command) {
  switch (command) {
    case Command::Evolve: return "evolve";
    case Command::Scan: return "scan";
    case Command::Table1: return "table1";
    case Command::Phases: return "phases";
    case Command::Spin: return "spin";
    case Command::Crosscheck: return "crosscheck";
  }
  return "evolve";
}

Command command_from_string(std::string_view name) {
  for (auto c : {Command::Evolve, Command::Scan, Command::Table1, Command::Phases, Command::Spin,
                 Command::Crosscheck}) {
    if (to_string(c) == name) return c;
  }
  throw ConfigError("unknown command '" + std::string(name) +
                    "' (expected evolve, scan, table1, phases, spin or crosscheck)");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(*this) + '\n';
  return out;
}

std::string RunConfig::hash() const {
  std::string text = "cavphase " + std::string(kToolVersion) + '\n';
  for (const auto& k : keys()) {
    if (!k.runtime) text += std::string(k.name) + " = " + k.get(*this) + '\n';
  }
  return fnv1a_hex(text);
}

RunConfig parse_config(std::string_view text, std::optional<Command> command) {
  RunConfig cfg;
  if (command) cfg.command = *command;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" + std::string(line) +
                        "'");
    const auto name = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const Key* key = find_key(name);
    if (!key) throw ConfigError(where(name, line_no) + "unknown key");
    if (auto it = seen.find(name); it != seen.end())
      throw ConfigError(where(name, line_no) + "duplicate key (first set on line " + std::to_string(it->second) + ")");
    seen.emplace(std::string(name), line_no);
    try {
      key->set(cfg, value);
    } catch (const BadValue& bad) {
      throw ConfigError(where(name, line_no) + bad.why);
    } catch (const ConfigError& e) {
      throw ConfigError(where(name, line_no) + e.what());
    }
    if (name == "command" && command && cfg.command != *command)
      throw ConfigError(where(name, line_no) + "document says '" + std::string(value) + "' but the command line says '" +
                        std::string(to_string(*command)) + "'");
  }
  auto line_of = [&](std::string_view key) {
    const auto it = seen.find(key);
    return it == seen.end() ? 0 : it->second;
  };
  if (!(cfg.scan_lo > 0.0 && cfg.scan_hi > cfg.scan_lo))
    throw ConfigError(where("scan.hi", line_of("scan.hi")) + "scan range needs 0 < scan.lo < scan.hi");
  if (cfg.level_n != 0 && cfg.level_n <= cfg.level_k)
    throw ConfigError(where("resonance.n", line_of("resonance.n")) + "upper level must exceed resonance.k");
  if (cfg.level_n > cfg.cavity.basis_size)
    throw ConfigError(where("resonance.n", line_of("resonance.n")) + "upper level lies outside the basis");
  if (cfg.level_k >= cfg.cavity.basis_size)
    throw ConfigError(where("resonance.k", line_of("resonance.k")) + "lower level must leave room in the basis");
  for (const auto& r : cfg.table_rows) {
    if (r.n > cfg.cavity.basis_size)
      throw ConfigError(where("table.rows", line_of("table.rows")) + "row level " + std::to_string(r.n) +
                        " lies outside the basis");
  }
  if (cfg.steps_per_period % cfg.stride != 0)
    throw ConfigError(where("stride", line_of("stride")) + "stride must divide steps_per_period");
  try {
    cfg.cavity.validate();
    cfg.spin.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<Command> command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), command);
}

PredictedPeak selected_resonance(const RunConfig& cfg, const Basis& basis) {
  const int k = cfg.level_k;
  if (cfg.level_n > 0 && cfg.order_N > 0) {
    const auto all = predicted_peaks(cfg.cavity, basis, 0.0, std::numeric_limits<double>::infinity(),
                                     RunPolicy{.max_order = cfg.order_N}, k);
    for (const auto& p : all) {
      if (p.n == cfg.level_n && p.N == cfg.order_N) return p;
    }
    throw DomainError("transition " + std::to_string(k) + " -> " + std::to_string(cfg.level_n) + " is forbidden");
  }
  RunPolicy policy = cfg.policy;
  auto all = predicted_peaks(cfg.cavity, basis, 0.0, std::numeric_limits<double>::infinity(), policy, k);
  std::erase_if(all, [&](const PredictedPeak& p) {
    return (cfg.level_n > 0 && p.n != cfg.level_n) || (cfg.order_N > 0 && p.N != cfg.order_N);
  });
  return assign_peak(cfg.cavity.omega, all, policy).peak;
}

CrossCheck crosscheck(const CavityConfig& cfg, const Basis& basis, int k, int n, int N, double periods,
                      int steps_per_period) {
  cfg.validate();
  if (!(periods > 0.0)) throw DomainError("crosscheck needs a positive number of Rabi periods");
  const auto spec = make_resonance(basis, k, n, N, cfg.omega);
  const auto sol = rabi_solution(spec, cfg.epsilon, basis.coupling(n, k));
  CrossCheck out;
  out.rabi_period = rabi_period(sol);
  const double t_end = periods * out.rabi_period;

  EvolveOptions options;
  options.steps_per_period = steps_per_period;
  const auto full = evolve(cfg, basis, basis_state(basis, k), t_end, options);
  const auto su2 = integrate_g(cavity_driver(spec, cfg, basis), t_end, full.dt);
  out.chart_restarts = su2.chart_restarts;
  const std::size_t count = std::min(full.size(), su2.size());
  for (std::size_t i = 0; i < count; ++i) {
    const double t = full.times[i];
    CrossCheckSample s;
    s.t = t;
    s.full = std::norm(full.state_at(i).coeffs[static_cast<std::size_t>(n - 1)]);
    s.su2 = std::norm(su2.amplitudes(i)[1]);
    s.rwa = std::norm(rabi_amplitudes(t, sol, spec.delta_omega).c_n);
    out.full_vs_su2 = std::max(out.full_vs_su2, std::abs(s.full - s.su2));
    out.full_vs_rwa = std::max(out.full_vs_rwa, std::abs(s.full - s.rwa));
    out.su2_vs_rwa = std::max(out.su2_vs_rwa, std::abs(s.su2 - s.rwa));
    out.samples.push_back(s);
  }
  return out;
}

std::string error_json(std::string_view kind, std::string_view message, int exit_code) {
  return json{{"error", {{"kind", std::string(kind)}, {"message", std::string(message)}, {"exit_code", exit_code}}}}.dump();
}

RunOutcome run(const RunConfig& cfg) {
  RunOutcome outcome;
  try {
    Outputs out(cfg);
    json results;
    switch (cfg.command) {
      case Command::Evolve: results = run_evolve(cfg, out); break;
      case Command::Scan: results = run_scan(cfg, out); break;
      case Command::Table1: results = run_table1(cfg, out); break;
      case Command::Phases: results = run_phases(cfg, out); break;
      case Command::Spin: results = run_spin(cfg, out); break;
      case Command::Crosscheck: results = run_crosscheck(cfg, out); break;
    }
    json config = json::object();
    for (const auto& k : keys()) config[std::string(k.name)] = k.get(cfg);
    json files = json::array();
    for (const auto& f : out.files()) files.push_back(f.filename().string());
    const json manifest = {{"tool", "cavphase"},
                           {"version", kToolVersion},
                           {"hash", out.hash()},
                           {"command", to_string(cfg.command)},
                           {"seeds", nullptr},
                           {"config", config},
                           {"config_text", cfg.to_text()},
                           {"files", files},
                           {"results", results}};
    out.write("manifest.json", [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
    outcome.files = out.files();
  } catch (const Error& e) {
    outcome.exit_code = exit_code_for(e);
    outcome.error_json = error_json(e.kind(), e.what(), outcome.exit_code);
  } catch (const std::filesystem::filesystem_error& e) {
    outcome.exit_code = 3;
    outcome.error_json = error_json("io_error", e.what(), 3);
  }
  if (outcome.exit_code != 0) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    std::ofstream(cfg.output_dir / "error.json") << outcome.error_json << '\n';
  }
  return outcome;
}

}  // namespace cavphase
