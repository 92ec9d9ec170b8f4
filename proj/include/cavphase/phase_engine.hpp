#pragma once

// Dynamical and Pancharatnam phases of a sampled trajectory.
//
// With theta(t) = -\int_0^t E dt' and the phase-removed state
// |~phi(t)> = exp(-i theta(t)) |phi(t)>, the Pancharatnam phase between two
// samples is the principal argument of <~phi(t1)|~phi(t)>.

#include <cstddef>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "cavphase/tdse_evolver.hpp"

namespace cavphase {

/// theta at every sample by cumulative Simpson quadrature of -E.
/// Throws InputError for unsorted or non-uniform sample times.
std::vector<double> dynamical_phase(const Trajectory& trajectory);

/// Principal value in (-pi, pi].
double wrap_phase(double phase);

/// beta(t1, t) in (-pi, pi]. t1 and t must be sample times with stored
/// states; throws OrthogonalStatesError when |<~phi(t1)|~phi(t)>| < 1e-12.
double pancharatnam(const Trajectory& trajectory, std::span<const double> theta, double t1, double t);
double pancharatnam(const Trajectory& trajectory, double t1, double t);

struct PhasePoint {
  double t = 0.0;
  double value = 0.0;
};

/// beta0(q tau) = beta(0, q tau) at every period boundary, principal branch.
std::vector<PhasePoint> beta0_series(const Trajectory& trajectory, std::span<const double> theta);

/// beta1(t1) = beta(t1, t1 + tau) for t1 on period boundaries, optionally
/// unwrapped by continuity.
std::vector<PhasePoint> beta1_series(const Trajectory& trajectory, std::span<const double> theta, bool unwrap);

/// Removes 2 pi discontinuities between consecutive points.
std::vector<PhasePoint> unwrap(std::vector<PhasePoint> series);

/// max - min of a series.
double oscillation_amplitude(const std::vector<PhasePoint>& series);

struct PiJump {
  double t = 0.0;           // midpoint between the two samples
  double t_over_T = 0.0;
  double magnitude = 0.0;   // signed, in (-pi, pi]
};

/// Flags beta0 steps that depart from the local winding trend by more than
/// pi/2. The trend at step q is the circular mean of steps q-3, q-2, q+2 and
/// q+3, so a jump spread over adjacent samples does not hide itself. Flags
/// closer than W = T/(8 tau) periods are merged. The reported magnitude is the
/// net excess winding within +-W periods over a background of period T.
std::vector<PiJump> detect_pi_jumps(const std::vector<PhasePoint>& beta0, double rabi_period);

struct PhaseSeries {
  std::vector<PhasePoint> theta;  // at period boundaries
  std::vector<PhasePoint> beta0;
  std::vector<PhasePoint> beta1;  // principal branch
  std::vector<PiJump> jumps;
};

/// Everything at once; jumps are only searched when rabi_period > 0.
PhaseSeries analyze_phases(const Trajectory& trajectory, double rabi_period);

/// Columns t_over_tau, theta, beta0, beta1 (beta1 empty in the last row).
void write_phase_csv(std::ostream& out, const PhaseSeries& phases, double period, std::string_view manifest_hash = {});

/// JSON array of {t, t_over_T, magnitude}.
void write_jump_report(std::ostream& out, const std::vector<PiJump>& jumps, std::string_view manifest_hash = {});

}  // namespace cavphase
