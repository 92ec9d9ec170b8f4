#pragma once

// Rotating-wave model of a single k -> n transition driven at
// omega = omega_nk / N. Closed forms only; nothing here integrates an ODE.

#include <complex>

#include "cavphase/core_model.hpp"

namespace cavphase {

struct ResonanceSpec {
  int k = 1;
  int n = 2;
  int N = 1;
  double omega_nk = 0.0;     // E_n - E_k
  double delta_omega = 0.0;  // N omega - omega_nk

  /// Throws DomainError unless n > k >= 1 and N in {1, 2, 3}.
  void validate() const;
};

/// Spec for levels (k, n) of `basis` driven at `omega`.
ResonanceSpec make_resonance(const Basis& basis, int k, int n, int N, double omega);

/// gamma_N for N = 1, 2, 3; DomainError otherwise.
double gamma_factor(const ResonanceSpec& spec);

/// Gamma_N = eps^N |eta_nk| gamma_N / (2N). DomainError when eta_nk = 0.
double width(const ResonanceSpec& spec, double epsilon, double eta_nk);

/// Gamma_N / (eps^N |eta_nk|) = gamma_N / (2N).
double scaled_width(const ResonanceSpec& spec);

struct RabiSolution {
  double Gamma = 0.0;
  double chi = 0.0;  // sqrt(Gamma^2 + delta_omega^2 / 4)
  double eta_nk = 0.0;
  double epsilon = 0.0;
};

RabiSolution rabi_solution(const ResonanceSpec& spec, double epsilon, double eta_nk);

struct RabiAmplitudes {
  std::complex<double> c_k;
  std::complex<double> c_n;
};

/// Interaction-picture amplitudes with c_k(0) = 1, c_n(0) = 0.
RabiAmplitudes rabi_amplitudes(double t, const RabiSolution& sol, double delta_omega);

/// T = pi / chi.
double rabi_period(const RabiSolution& sol);

/// Energy shift A = [E_k dw^2 + 4 E_n (Gamma^2 - chi^2)] / (4 chi^2).
double rwa_shift(const ResonanceSpec& spec, const RabiSolution& sol, double E_k, double E_n);

/// E(t) = alpha^2 [E_k cos^2 chi t + (A + E_n) sin^2 chi t].
double rwa_energy(double t, const ResonanceSpec& spec, const RabiSolution& sol, double E_k, double E_n,
                  const CavityConfig& cfg);

/// |c_n|^2_max = 1 / [1 + (dw / 2 Gamma)^2] with dw = N omega - omega_nk.
double lorentzian(double omega, const ResonanceSpec& spec, double Gamma);

/// Shared window rule for beta0: sign * Omega / 2 for t/T in (2m - 1/2, 2m + 1/2],
/// plus pi for t/T in (2m + 1/2, 2m + 3/2]; wrapped to (-pi, pi].
double windowed_phase(double Omega, double t_over_T, double sign);

/// Omega(t) = omega_nk t - (omega_nk / 2 chi) sin 2 chi t.
double rwa_Omega(double t, const ResonanceSpec& spec, const RabiSolution& sol);

/// beta0(q tau) from the window rule with T = pi / chi.
double rwa_beta0(int q, double tau, const ResonanceSpec& spec, const RabiSolution& sol);

/// beta(t1, t1 + q tau) = (omega'/2chi)[x - sin x cos(2 chi t1 + x)], x = chi q tau,
/// omega' = A + omega_nk. Not wrapped.
double rwa_beta(double t1, int q, double tau, const ResonanceSpec& spec, const RabiSolution& sol, double E_k,
                double E_n);

/// beta1(t1) ~ omega' tau sin^2 chi (t1 + tau/2).
double rwa_beta1(double t1, double tau, const ResonanceSpec& spec, const RabiSolution& sol, double E_k, double E_n);

/// Exact-resonance form 2 N pi sin^2[chi (t1 + N pi / omega_nk)].
double rwa_beta1_resonant(double t1, const ResonanceSpec& spec, const RabiSolution& sol);

/// Third-order expansion of W(t) in eps.
std::complex<double> w_expansion(double t, const ResonanceSpec& spec, const CavityConfig& cfg);

/// W(t) = (dR/dt / R) exp(i omega_nk s(t)).
std::complex<double> w_exact(double t, const ResonanceSpec& spec, const CavityConfig& cfg);

}  // namespace cavphase
