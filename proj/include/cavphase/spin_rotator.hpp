#pragma once

// Spin-1/2 in a field of fixed magnitude whose direction precesses on a cone
// of half-angle alpha at rate omega:
//
//   H(t) = -(omega1/2) [[cos a, e^{-i w t} sin a], [e^{i w t} sin a, -cos a]].
//
// At omega = -omega1 / cos(alpha) a spin starting along B(0) flips completely
// with period T = 2 pi / lambda, lambda = omega sin(alpha).

#include <array>
#include <cmath>
#include <complex>
#include <ostream>
#include <string_view>

#include <Eigen/Dense>

#include "cavphase/tdse_evolver.hpp"

namespace cavphase {

using Spinor = std::array<std::complex<double>, 2>;

struct SpinConfig {
  double alpha = 0.01;
  double omega = 1.0;
  double omega1 = -std::cos(0.01);

  /// omega1 chosen so that the drive is resonant.
  static SpinConfig resonant(double alpha, double omega = 1.0);

  double lambda() const;
  double period() const;        // tau = 2 pi / omega
  double rabi_period() const;   // T = 2 pi / lambda
  /// DomainError for alpha outside (0, pi), cos(alpha) = 0, omega <= 0, or an
  /// off-resonant omega1.
  void validate() const;

  friend bool operator==(const SpinConfig&, const SpinConfig&) = default;
};

Eigen::Matrix2cd spin_hamiltonian(double t, const SpinConfig& cfg);

/// Instantaneous eigenspinors with energies -omega1/2 and +omega1/2.
Spinor psi_plus(double t, const SpinConfig& cfg);
Spinor psi_minus(double t, const SpinConfig& cfg);

/// e^{-i w t/2} [cos(lambda t/2) psi+ + i sin(lambda t/2) psi-].
Spinor spin_state(double t, const SpinConfig& cfg);

/// <psi|H|psi> along the resonant solution, -(omega1/2) cos(lambda t).
double spin_energy(double t, const SpinConfig& cfg);

/// Omega(t) = (omega1/lambda) sin(lambda t) + omega t.
double spin_Omega(double t, const SpinConfig& cfg);

/// beta0(q tau): the shared window rule with sign -1 and T = 2 pi / lambda.
double spin_beta0(int q, const SpinConfig& cfg);

struct SpinBeta1 {
  double value = 0.0;     // in (-pi, pi]
  bool boundary = false;  // sin(alpha) = 1/2, where the branch is ambiguous
};

/// beta1 at t1: -[Omega(t1 + tau) - Omega(t1)]/2, plus pi when sin(alpha) > 1/2.
SpinBeta1 spin_beta1(double t1, const SpinConfig& cfg);

/// Small-alpha form -2 pi sin^2(lambda (t1 + tau/2) / 2).
double spin_beta1_small_alpha(double t1, const SpinConfig& cfg);

/// Solid angle under the spiral theta = phi sin(alpha) up to phi = 2 q pi:
/// 2 q pi - sin(2 q pi sin a) / sin a.
double solid_angle(int q, const SpinConfig& cfg);

/// 2 pi (1 - cos theta0).
double berry_limit(double theta0);

/// Closed-form trajectory sampled every tau / spp over `periods` drive periods.
Trajectory spin_exact_trajectory(const SpinConfig& cfg, int periods, int spp);

/// Dormand-Prince integration of i d(psi)/dt = H psi from psi+(0).
Trajectory spin_numeric_trajectory(const SpinConfig& cfg, int periods, int spp, double tolerance = 1e-12);

/// Columns q, t_over_T, beta0, beta1, beta0_numeric, beta1_numeric, solid_angle.
void write_spin_csv(std::ostream& out, const SpinConfig& cfg, const Trajectory& numeric,
                    std::string_view manifest_hash = {});

}  // namespace cavphase
