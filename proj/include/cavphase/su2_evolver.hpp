#pragma once

// Two-level evolution through the Wei-Norman factorization
//
//   U(t) = exp(g1 s+) exp(g2 s3) exp(g3 s-) exp(F0),  F0 = \int f0,
//
// of the generator G = f0 I + f1 s+ + f2 s3 + f3 s-, with dU/dt = G U.
// Slot 0 of every 2-vector is level k, slot 1 is level n.
//
// The parametrization is a local chart: g1 diverges where U_22 -> 0. The
// integrator folds the current chart into an accumulated propagator and
// restarts from g = 0 before that happens.

#include <complex>
#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "cavphase/core_model.hpp"
#include "cavphase/two_level_rwa.hpp"

namespace cavphase {

struct SU2Driver {
  std::function<std::complex<double>(double)> f0, f1, f2, f3;
};

/// Generator of the (k, n) truncation of the Galerkin system:
/// f0 = -i alpha^2 (E_k + E_n)/2, f2 = -i alpha^2 (E_k - E_n)/2,
/// f1 = (dR/dt / R) eta_kn, f3 = (dR/dt / R) eta_nk.
SU2Driver cavity_driver(const ResonanceSpec& spec, const CavityConfig& cfg, const Basis& basis);

/// i G(t), to be compared with the truncated Hamiltonian.
Eigen::Matrix2cd driver_hamiltonian(const SU2Driver& driver, double t);

/// alpha^2 diag(E_k, E_n) + i (dR/dt / R) [[0, eta_kn], [eta_nk, 0]].
Eigen::Matrix2cd truncated_hamiltonian(const ResonanceSpec& spec, const CavityConfig& cfg, const Basis& basis,
                                       double t);

struct GState {
  double t = 0.0;
  std::complex<double> g1, g2, g3, F0;
};

/// exp(g1 s+) exp(g2 s3) exp(g3 s-) exp(F0) for one chart.
Eigen::Matrix2cd evolution_operator(const GState& g);

/// First column of the chart operator, (e^{g2} + e^{-g2} g1 g3, e^{-g2} g3) e^{F0}.
std::array<std::complex<double>, 2> amplitudes(const GState& g);

struct SU2Options {
  double tolerance = 1e-10;
  double restart_b = 0.5;      // restart when |exp(-g2)| falls below this
  double restart_g = 4.0;      // or when |g1| or |g3| exceeds this
};

struct SU2Trajectory {
  std::vector<double> times;
  std::vector<GState> g;                    // chart-local state at each sample
  std::vector<Eigen::Matrix2cd> propagator;  // full U(t, 0)
  int chart_restarts = 0;

  std::size_t size() const { return times.size(); }
  /// U(t_i, 0) (1, 0)^T.
  std::array<std::complex<double>, 2> amplitudes(std::size_t i) const;
  double max_unitarity_defect() const;
};

/// Samples at t_i = i dt, i = 0..floor(t_end / dt). IntegrationError if a
/// chart still blows up between two samples.
SU2Trajectory integrate_g(const SU2Driver& driver, double t_end, double dt, const SU2Options& options = {});

}  // namespace cavphase
