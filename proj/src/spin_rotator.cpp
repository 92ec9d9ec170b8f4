#include "cavphase/spin_rotator.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cavphase/csv_io.hpp"
#include "cavphase/errors.hpp"
#include "cavphase/phase_engine.hpp"
#include "cavphase/two_level_rwa.hpp"
#include "ode_support.hpp"

namespace cavphase {

namespace {

constexpr double kPi = std::numbers::pi;

double expectation(const Spinor& psi, const Eigen::Matrix2cd& h) {
  const Eigen::Vector2cd v(psi[0], psi[1]);
  return (v.adjoint() * h * v)(0, 0).real();
}

Trajectory empty_trajectory(const SpinConfig& cfg, int periods, int spp) {
  cfg.validate();
  if (periods < 1 || spp < 2) throw DomainError("spin trajectory needs periods >= 1 and spp >= 2");
  Trajectory traj;
  traj.samples_per_period = spp;
  traj.dt = cfg.period() / spp;
  const auto count = static_cast<std::size_t>(periods) * static_cast<std::size_t>(spp) + 1;
  traj.times.resize(count);
  for (std::size_t i = 0; i < count; ++i) traj.times[i] = static_cast<double>(i) * traj.dt;
  traj.energies.reserve(count);
  traj.norms.reserve(count);
  traj.states.reserve(count);
  return traj;
}

void push_sample(Trajectory& traj, double t, const Spinor& psi, const SpinConfig& cfg) {
  traj.states.push_back({t, {psi[0], psi[1]}});
  traj.energies.push_back(expectation(psi, spin_hamiltonian(t, cfg)));
  traj.norms.push_back(std::norm(psi[0]) + std::norm(psi[1]));
}

}  // namespace

SpinConfig SpinConfig::resonant(double alpha, double omega) { return {alpha, omega, -omega * std::cos(alpha)}; }

double SpinConfig::lambda() const { return omega * std::sin(alpha); }
double SpinConfig::period() const { return 2.0 * kPi / omega; }
double SpinConfig::rabi_period() const { return 2.0 * kPi / lambda(); }

void SpinConfig::validate() const {
  if (!(alpha > 0.0 && alpha < kPi)) throw DomainError("spin cone angle alpha must lie in (0, pi)");
  if (std::abs(std::cos(alpha)) < 1e-12) throw DomainError("cos(alpha) = 0: resonance condition undefined");
  if (!(omega > 0.0)) throw DomainError("spin rotation rate omega must be positive");
  if (std::abs(omega1 + omega * std::cos(alpha)) > 1e-12 * std::max(1.0, std::abs(omega)))
    throw DomainError("omega1 is not resonant: expected " + std::to_string(-omega * std::cos(alpha)));
}

Eigen::Matrix2cd spin_hamiltonian(double t, const SpinConfig& cfg) {
  const double c = std::cos(cfg.alpha);
  const double s = std::sin(cfg.alpha);
  Eigen::Matrix2cd h;
  h << c, std::polar(s, -cfg.omega * t), std::polar(s, cfg.omega * t), -c;
  return -0.5 * cfg.omega1 * h;
}

Spinor psi_plus(double t, const SpinConfig& cfg) {
  return {std::cos(cfg.alpha / 2.0), std::polar(std::sin(cfg.alpha / 2.0), cfg.omega * t)};
}

Spinor psi_minus(double t, const SpinConfig& cfg) {
  return {std::sin(cfg.alpha / 2.0), -std::polar(std::cos(cfg.alpha / 2.0), cfg.omega * t)};
}

Spinor spin_state(double t, const SpinConfig& cfg) {
  cfg.validate();
  const auto up = psi_plus(t, cfg);
  const auto down = psi_minus(t, cfg);
  const std::complex<double> global = std::polar(1.0, -cfg.omega * t / 2.0);
  const double c = std::cos(cfg.lambda() * t / 2.0);
  const std::complex<double> s(0.0, std::sin(cfg.lambda() * t / 2.0));
  return {global * (c * up[0] + s * down[0]), global * (c * up[1] + s * down[1])};
}

double spin_energy(double t, const SpinConfig& cfg) { return -0.5 * cfg.omega1 * std::cos(cfg.lambda() * t); }

double spin_Omega(double t, const SpinConfig& cfg) {
  return cfg.omega1 / cfg.lambda() * std::sin(cfg.lambda() * t) + cfg.omega * t;
}

double spin_beta0(int q, const SpinConfig& cfg) {
  cfg.validate();
  const double t = q * cfg.period();
  return windowed_phase(spin_Omega(t, cfg), t / cfg.rabi_period(), -1.0);
}

SpinBeta1 spin_beta1(double t1, const SpinConfig& cfg) {
  cfg.validate();
  const double s = std::sin(cfg.alpha);
  const double base = -0.5 * (spin_Omega(t1 + cfg.period(), cfg) - spin_Omega(t1, cfg));
  SpinBeta1 out;
  out.boundary = std::abs(s - 0.5) < 1e-12;
  out.value = wrap_phase(s > 0.5 ? base + kPi : base);
  return out;
}

double spin_beta1_small_alpha(double t1, const SpinConfig& cfg) {
  const double s = std::sin(0.5 * cfg.lambda() * (t1 + 0.5 * cfg.period()));
  return -2.0 * kPi * s * s;
}

double solid_angle(int q, const SpinConfig& cfg) {
  if (q < 1) throw DomainError("solid angle needs q >= 1");
  const double s = std::sin(cfg.alpha);
  const double phi = 2.0 * kPi * q;
  return phi - std::sin(phi * s) / s;
}

double berry_limit(double theta0) {
  if (!(theta0 >= 0.0 && theta0 <= kPi)) throw DomainError("theta0 must lie in [0, pi]");
  return 2.0 * kPi * (1.0 - std::cos(theta0));
}

Trajectory spin_exact_trajectory(const SpinConfig& cfg, int periods, int spp) {
  auto traj = empty_trajectory(cfg, periods, spp);
  for (double t : traj.times) push_sample(traj, t, spin_state(t, cfg), cfg);
  return traj;
}

Trajectory spin_numeric_trajectory(const SpinConfig& cfg, int periods, int spp, double tolerance) {
  auto traj = empty_trajectory(cfg, periods, spp);
  const auto start = psi_plus(0.0, cfg);
  detail::cvec psi{start[0], start[1]};
  auto system = [&cfg](const detail::cvec& x, detail::cvec& dx, double t) {
    const Eigen::Matrix2cd h = spin_hamiltonian(t, cfg);
    const std::complex<double> mi(0.0, -1.0);
    dx[0] = mi * (h(0, 0) * x[0] + h(0, 1) * x[1]);
    dx[1] = mi * (h(1, 0) * x[0] + h(1, 1) * x[1]);
  };
  auto observe = [&](const detail::cvec& x, double t) { push_sample(traj, t, {x[0], x[1]}, cfg); };
  detail::integrate_at(detail::Scheme::DormandPrince5, system, psi, traj.times, tolerance, observe, traj.dt * 1e-2);
  const double drift = traj.max_norm_drift();
  if (drift > 1e-6) throw IntegrityError("spinor norm drift " + format_real(drift));
  return traj;
}

void write_spin_csv(std::ostream& out, const SpinConfig& cfg, const Trajectory& numeric,
                    std::string_view manifest_hash) {
  const auto phases = analyze_phases(numeric, 0.0);
  write_csv_header(out, {"q", "t_over_T", "beta0", "beta1", "beta0_numeric", "beta1_numeric", "solid_angle"},
                   manifest_hash);
  const double tau = cfg.period();
  for (std::size_t q = 0; q < phases.beta0.size(); ++q) {
    const int qi = static_cast<int>(q);
    out << q << ',' << format_real(qi * tau / cfg.rabi_period()) << ',' << format_real(spin_beta0(qi, cfg)) << ',';
    // beta1 is indexed by its end point q tau, so row q holds beta((q-1) tau, q tau).
    if (q > 0) out << format_real(spin_beta1((qi - 1) * tau, cfg).value);
    out << ',' << format_real(phases.beta0[q].value) << ',';
    if (q > 0) out << format_real(phases.beta1[q - 1].value);
    out << ',';
    if (q > 0) out << format_real(solid_angle(qi, cfg));
    out << '\n';
  }
}

}  // namespace cavphase
