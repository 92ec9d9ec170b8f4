#include "cavphase/two_level_rwa.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cavphase/errors.hpp"

namespace cavphase {

namespace {
constexpr double kPi = std::numbers::pi;
using cplx = std::complex<double>;

double wrap(double x) {
  double r = std::remainder(x, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}
}  // namespace

void ResonanceSpec::validate() const {
  if (k < 1 || n <= k) throw DomainError("resonance needs n > k >= 1");
  if (N < 1 || N > 3) throw DomainError("unsupported resonance order N=" + std::to_string(N));
}

ResonanceSpec make_resonance(const Basis& basis, int k, int n, int N, double omega) {
  ResonanceSpec spec{k, n, N, 0.0, 0.0};
  spec.validate();
  if (n > basis.size()) throw DomainError("level " + std::to_string(n) + " outside basis");
  spec.omega_nk = basis.transition_frequency(n, k);
  spec.delta_omega = N * omega - spec.omega_nk;
  return spec;
}

double gamma_factor(const ResonanceSpec& spec) {
  const double w = spec.omega_nk;
  const double d = spec.delta_omega;
  switch (spec.N) {
    case 1:
      return w + d;
    case 2:
      return (3.0 * w - d) / 4.0;
    case 3:
      return (17.0 * w * w - 17.0 * w * d + 2.0 * d * d) / (24.0 * (w + d));
    default:
      throw DomainError("unsupported resonance order N=" + std::to_string(spec.N));
  }
}

double width(const ResonanceSpec& spec, double epsilon, double eta_nk) {
  if (eta_nk == 0.0) throw DomainError("forbidden transition: eta_nk = 0");
  return std::pow(epsilon, spec.N) * std::abs(eta_nk) * gamma_factor(spec) / (2.0 * spec.N);
}

double scaled_width(const ResonanceSpec& spec) { return gamma_factor(spec) / (2.0 * spec.N); }

RabiSolution rabi_solution(const ResonanceSpec& spec, double epsilon, double eta_nk) {
  RabiSolution sol;
  sol.Gamma = width(spec, epsilon, eta_nk);
  sol.chi = std::hypot(sol.Gamma, 0.5 * spec.delta_omega);
  sol.eta_nk = eta_nk;
  sol.epsilon = epsilon;
  return sol;
}

RabiAmplitudes rabi_amplitudes(double t, const RabiSolution& sol, double delta_omega) {
  const double ct = std::cos(sol.chi * t);
  const double st = std::sin(sol.chi * t);
  const cplx drift = std::polar(1.0, 0.5 * delta_omega * t);
  return {drift * cplx(ct, -delta_omega * st / (2.0 * sol.chi)), std::conj(drift) * (sol.Gamma * st / sol.chi)};
}

double rabi_period(const RabiSolution& sol) { return kPi / sol.chi; }

double rwa_shift(const ResonanceSpec& spec, const RabiSolution& sol, double E_k, double E_n) {
  const double d = spec.delta_omega;
  const double chi2 = sol.chi * sol.chi;
  return (E_k * d * d + 4.0 * E_n * (sol.Gamma * sol.Gamma - chi2)) / (4.0 * chi2);
}

double rwa_energy(double t, const ResonanceSpec& spec, const RabiSolution& sol, double E_k, double E_n,
                  const CavityConfig& cfg) {
  const double a = alpha_at(t, cfg);
  const double c = std::cos(sol.chi * t);
  const double s = std::sin(sol.chi * t);
  return a * a * (E_k * c * c + (rwa_shift(spec, sol, E_k, E_n) + E_n) * s * s);
}

double lorentzian(double omega, const ResonanceSpec& spec, double Gamma) {
  const double x = (spec.N * omega - spec.omega_nk) / (2.0 * Gamma);
  return 1.0 / (1.0 + x * x);
}

double windowed_phase(double Omega, double t_over_T, double sign) {
  const double window = std::ceil(t_over_T - 0.5);
  const bool odd = std::fmod(std::abs(window), 2.0) == 1.0;
  return wrap(sign * 0.5 * Omega + (odd ? kPi : 0.0));
}

double rwa_Omega(double t, const ResonanceSpec& spec, const RabiSolution& sol) {
  return spec.omega_nk * t - spec.omega_nk / (2.0 * sol.chi) * std::sin(2.0 * sol.chi * t);
}

double rwa_beta0(int q, double tau, const ResonanceSpec& spec, const RabiSolution& sol) {
  const double t = q * tau;
  return windowed_phase(rwa_Omega(t, spec, sol), t / rabi_period(sol), 1.0);
}

double rwa_beta(double t1, int q, double tau, const ResonanceSpec& spec, const RabiSolution& sol, double E_k,
                double E_n) {
  const double wp = rwa_shift(spec, sol, E_k, E_n) + spec.omega_nk;
  const double x = sol.chi * q * tau;
  return wp / (2.0 * sol.chi) * (x - std::sin(x) * std::cos(2.0 * sol.chi * t1 + x));
}

double rwa_beta1(double t1, double tau, const ResonanceSpec& spec, const RabiSolution& sol, double E_k, double E_n) {
  const double wp = rwa_shift(spec, sol, E_k, E_n) + spec.omega_nk;
  const double s = std::sin(sol.chi * (t1 + 0.5 * tau));
  return wp * tau * s * s;
}

double rwa_beta1_resonant(double t1, const ResonanceSpec& spec, const RabiSolution& sol) {
  const double s = std::sin(sol.chi * (t1 + spec.N * kPi / spec.omega_nk));
  return 2.0 * spec.N * kPi * s * s;
}

std::complex<double> w_expansion(double t, const ResonanceSpec& spec, const CavityConfig& cfg) {
  const double e = cfg.epsilon;
  const double w = cfg.omega;
  const double wn = spec.omega_nk;
  const double x = w * t;
  const cplx i(0.0, 1.0);
  const cplx first = w * std::cos(x);
  const cplx second = e * (i * wn * (std::cos(2.0 * x) + 1.0) - 0.5 * w * std::sin(2.0 * x));
  const cplx third = e * e / (4.0 * w) *
                     ((w * w - 6.0 * wn * wn) * std::cos(x) - (w * w + 2.0 * wn * wn) * std::cos(3.0 * x) -
                      i * 3.5 * wn * w * (std::sin(x) + std::sin(3.0 * x)));
  return e * std::polar(1.0, wn * t) * (first + second + third);
}

std::complex<double> w_exact(double t, const ResonanceSpec& spec, const CavityConfig& cfg) {
  return wall_log_derivative(t, cfg) * std::polar(1.0, spec.omega_nk * alpha_sq_integral(t, cfg));
}

}  // namespace cavphase
