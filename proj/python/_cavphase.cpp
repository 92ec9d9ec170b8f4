// Python bindings. Results come back as dicts of numpy arrays so the module
// needs no wrappers for the library's internal containers.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "cavphase/cli_runner.hpp"
#include "cavphase/core_model.hpp"
#include "cavphase/errors.hpp"
#include "cavphase/phase_engine.hpp"
#include "cavphase/resonance_scanner.hpp"
#include "cavphase/spin_rotator.hpp"
#include "cavphase/tdse_evolver.hpp"
#include "cavphase/two_level_rwa.hpp"

namespace py = pybind11;
using namespace cavphase;

namespace {

Geometry geometry(const std::string& name) { return Geometry::of(geometry_kind_from_string(name)); }

CavityConfig cavity(const std::string& geom, double epsilon, double omega, int basis_size) {
  CavityConfig cfg;
  cfg.geometry = geometry(geom);
  cfg.epsilon = epsilon;
  cfg.omega = omega;
  cfg.basis_size = basis_size;
  cfg.validate();
  return cfg;
}

py::array_t<double> array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::dict phase_dict(const std::vector<PhasePoint>& s) {
  std::vector<double> t, v;
  for (const auto& p : s) {
    t.push_back(p.t);
    v.push_back(p.value);
  }
  py::dict d;
  d["t"] = array(t);
  d["value"] = array(v);
  return d;
}

Trajectory run_evolve(const std::string& geom, double epsilon, double omega, int basis_size, double t_end,
                      int steps_per_period, int stride, const std::string& method, int level) {
  const auto cfg = cavity(geom, epsilon, omega, basis_size);
  const auto basis = make_basis(cfg.geometry, cfg.basis_size);
  EvolveOptions o;
  o.steps_per_period = steps_per_period;
  o.stride = stride;
  if (method == "direct") {
    o.method = Propagation::Direct;
  } else if (method != "floquet") {
    throw ConfigError("method must be 'floquet' or 'direct'");
  }
  py::gil_scoped_release release;
  return evolve(cfg, basis, basis_state(basis, level), t_end, o);
}

py::dict trajectory_dict(const Trajectory& traj) {
  const std::size_t rows = traj.states.size();
  const std::size_t cols = rows ? traj.states.front().coeffs.size() : 0;
  py::array_t<std::complex<double>> coeffs({rows, cols});
  auto c = coeffs.mutable_unchecked<2>();
  std::vector<double> state_t;
  for (std::size_t i = 0; i < rows; ++i) {
    state_t.push_back(traj.states[i].t);
    for (std::size_t m = 0; m < cols; ++m) c(i, m) = traj.states[i].coeffs[m];
  }
  py::dict d;
  d["t"] = array(traj.times);
  d["energy"] = array(traj.energies);
  d["norm"] = array(traj.norms);
  d["state_t"] = array(state_t);
  d["coeffs"] = coeffs;
  d["dt"] = traj.dt;
  d["stride"] = traj.stride;
  return d;
}

py::dict phases(const std::string& geom, double epsilon, double omega, int basis_size, double t_end,
                int steps_per_period, double rabi_period_hint) {
  const auto traj = run_evolve(geom, epsilon, omega, basis_size, t_end, steps_per_period, 1, "floquet", 1);
  double T = rabi_period_hint;
  if (T <= 0.0) {
    std::vector<double> a2(traj.size());
    for (std::size_t i = 0; i < a2.size(); ++i) a2[i] = std::pow(alpha_at(traj.times[i], *traj.config), 2);
    const auto basis = make_basis(traj.config->geometry, basis_size);
    T = rabi_period(traj.energies, a2, traj.dt, traj.samples_per_period, basis.energy(1));
  }
  const auto ph = analyze_phases(traj, T);
  py::list jumps;
  for (const auto& j : ph.jumps) {
    py::dict d;
    d["t"] = j.t;
    d["t_over_T"] = j.t_over_T;
    d["magnitude"] = j.magnitude;
    jumps.append(d);
  }
  py::dict out;
  out["rabi_period"] = T;
  out["theta"] = phase_dict(ph.theta);
  out["beta0"] = phase_dict(ph.beta0);
  out["beta1"] = phase_dict(ph.beta1);
  out["jumps"] = jumps;
  return out;
}

py::dict resonance(const std::string& geom, double epsilon, int basis_size, int n, int N, int steps_per_period,
                   int workers) {
  const auto cfg = cavity(geom, epsilon, 12.344, basis_size);
  const auto basis = make_basis(cfg.geometry, cfg.basis_size);
  RunPolicy p;
  p.workers = workers;
  if (steps_per_period > 0) p.steps_per_period = steps_per_period;
  ResonanceRow row;
  {
    py::gil_scoped_release release;
    row = table1_row(cfg, basis, {N, n}, p);
  }
  if (!row.error.empty()) throw NumericalError(row.error);
  py::dict d;
  d["center"] = row.center;
  d["gamma_scaled"] = row.gamma_scaled_numerical;
  d["gamma_scaled_rwa"] = row.gamma_scaled_rwa;
  d["rabi_period"] = row.rabi_period;
  d["T_Gamma_over_pi"] = row.T_times_Gamma_over_pi;
  return d;
}

py::list peaks(const std::string& geom, double epsilon, int basis_size, double lo, double hi, int max_order) {
  const auto cfg = cavity(geom, epsilon, 12.344, basis_size);
  const auto basis = make_basis(cfg.geometry, cfg.basis_size);
  RunPolicy p;
  p.max_order = max_order;
  py::list out;
  for (const auto& pk : predicted_peaks(cfg, basis, lo, hi, p)) {
    py::dict d;
    d["k"] = pk.k;
    d["n"] = pk.n;
    d["N"] = pk.N;
    d["omega"] = pk.omega;
    d["Gamma"] = pk.Gamma;
    out.append(d);
  }
  return out;
}

py::dict run_config(const std::string& text, const std::string& output_dir) {
  auto cfg = parse_config(text);
  cfg.output_dir = output_dir;
  RunOutcome outcome;
  {
    py::gil_scoped_release release;
    outcome = run(cfg);
  }
  py::list files;
  for (const auto& f : outcome.files) files.append(f.string());
  py::dict d;
  d["exit_code"] = outcome.exit_code;
  d["files"] = files;
  d["error"] = outcome.error_json;
  d["hash"] = cfg.hash();
  return d;
}

}  // namespace

PYBIND11_MODULE(_cavphase, m) {
  m.doc() = "Quantum particle in a vibrating cavity: evolution, resonances and geometric phases";

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<Error>(m, "CavphaseError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("eigenenergy", [](const std::string& g, int k) { return eigenenergy(geometry(g), k); }, py::arg("geometry"),
        py::arg("k"));
  m.def("coupling_matrix", [](const std::string& g, int size) { return coupling_matrix(geometry(g), size); },
        py::arg("geometry"), py::arg("size"));
  m.def("mean_alpha_sq", &mean_alpha_sq, py::arg("epsilon"));
  m.def("bessel_j0_zero", &bessel_j0_zero, py::arg("k"));

  m.def(
      "evolve",
      [](const std::string& g, double eps, double omega, int M, double t_end, int spp, int stride,
         const std::string& method, int level) {
        return trajectory_dict(run_evolve(g, eps, omega, M, t_end, spp, stride, method, level));
      },
      py::arg("geometry") = "cylindrical", py::arg("epsilon") = 0.01, py::arg("omega") = 12.344,
      py::arg("basis_size") = 16, py::arg("t_end") = 10.0, py::arg("steps_per_period") = 200, py::arg("stride") = 1,
      py::arg("method") = "floquet", py::arg("level") = 1);

  m.def("phases", &phases, py::arg("geometry") = "cylindrical", py::arg("epsilon") = 0.01,
        py::arg("omega") = 12.344, py::arg("basis_size") = 16, py::arg("t_end") = 100.0,
        py::arg("steps_per_period") = 200, py::arg("rabi_period") = 0.0,
        "beta0/beta1 series and pi-jumps; rabi_period <= 0 measures it from the energy envelope");

  m.def("predicted_peaks", &peaks, py::arg("geometry") = "cylindrical", py::arg("epsilon") = 0.01,
        py::arg("basis_size") = 16, py::arg("lo") = 10.0, py::arg("hi") = 70.0, py::arg("max_order") = 3);

  m.def("resonance", &resonance, py::arg("geometry") = "cylindrical", py::arg("epsilon") = 0.01,
        py::arg("basis_size") = 16, py::arg("n") = 2, py::arg("N") = 1, py::arg("steps_per_period") = 0,
        py::arg("workers") = 1, "Located centre, fitted width and measured Rabi period of the 1 -> n resonance");

  m.def(
      "rwa_width",
      [](const std::string& g, double eps, double omega, int M, int n, int N) {
        const auto basis = make_basis(geometry(g), M);
        return width(make_resonance(basis, 1, n, N, omega), eps, basis.coupling(n, 1));
      },
      py::arg("geometry") = "cylindrical", py::arg("epsilon") = 0.01, py::arg("omega") = 12.344,
      py::arg("basis_size") = 16, py::arg("n") = 2, py::arg("N") = 1);

  m.def(
      "spin_phases",
      [](double alpha, double omega, int q) {
        const auto cfg = SpinConfig::resonant(alpha, omega);
        const auto b1 = spin_beta1((q - 1) * cfg.period(), cfg);
        py::dict d;
        d["beta0"] = spin_beta0(q, cfg);
        d["beta1"] = b1.value;
        d["Omega"] = spin_Omega(q * cfg.period(), cfg);
        d["solid_angle"] = solid_angle(q, cfg);
        d["rabi_period"] = cfg.rabi_period();
        return d;
      },
      py::arg("alpha"), py::arg("omega") = 1.0, py::arg("q") = 1,
      "Closed-form spin phases after q periods of the resonant rotating field");

  m.def("run_config", &run_config, py::arg("text"), py::arg("output_dir"),
        "Runs a tool configuration document and returns exit code, files and manifest hash");

  m.attr("__version__") = std::string(kToolVersion);
}
