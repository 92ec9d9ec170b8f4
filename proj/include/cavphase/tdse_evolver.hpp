#pragma once

// Galerkin evolution of the fixed-domain radial equation. With
// Y(y, t) = sum_m a_m(t) phi_m(y) the coefficients obey
//
//   da_m/dt = -i alpha^2(t) E_m a_m + (dR/dt / R) sum_n eta_{mn} a_n .
//
// Both propagation modes integrate this system in the interaction picture
// b_m = exp(i E_m s(t)) a_m, where s(t) = \int alpha^2 is known in closed form:
//
//   Direct  - Dormand-Prince 5(4) on the state vector over the whole run.
//   Floquet - Fehlberg 7(8) on the M x M propagator over one drive period,
//             then exact repetition (the generator is tau-periodic).

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cavphase/core_model.hpp"

namespace cavphase {

using cplx = std::complex<double>;

struct StateVector {
  double t = 0.0;
  std::vector<cplx> coeffs;

  double norm_squared() const;
};

/// Unit amplitude in the given 1-based level.
StateVector basis_state(const Basis& basis, int level, double t = 0.0);

/// Time series on a uniform grid t_i = i * dt. Energies and norms are kept at
/// every sample; states only at samples divisible by `stride`.
struct Trajectory {
  double dt = 0.0;
  int samples_per_period = 0;  // 0 when the dynamics has no natural period
  int stride = 1;
  std::vector<double> times;
  std::vector<double> energies;
  std::vector<double> norms;
  std::vector<StateVector> states;  // states[j] is sample j * stride
  std::optional<CavityConfig> config;
  double propagator_defect = 0.0;  // ||U^dagger U - 1|| of the period map

  std::size_t size() const { return times.size(); }
  double period() const { return dt * samples_per_period; }
  bool has_state(std::size_t sample) const;
  const StateVector& state_at(std::size_t sample) const;
  double max_norm_drift() const;
};

enum class Propagation { Floquet, Direct };

struct EvolveOptions {
  int steps_per_period = 200;
  int stride = 1;
  Propagation method = Propagation::Floquet;
  double tolerance = 1e-10;           // local RK tolerance, direct mode
  double period_tolerance = 1e-13;    // local RK tolerance, period propagator
  double norm_drift_limit = 1e-6;     // IntegrityError beyond this
  double defect_limit = 1e-9;         // IntegrityError if the period map is worse
};

/// Energy expectation Re<phi|H|phi> with
/// H = alpha^2 diag(E) + i (dR/dt / R) eta.
double energy(std::span<const cplx> coeffs, double t, const CavityConfig& cfg, const Basis& basis);
double energy(const StateVector& state, const CavityConfig& cfg, const Basis& basis);

/// Sub-period propagators U(t_j, 0), t_j = j tau / spp, j = 0..spp, in the
/// lab picture. The last one (the period map) is projected onto the nearest
/// unitary after its defect has been recorded.
class PeriodPropagator {
 public:
  PeriodPropagator(const CavityConfig& cfg, const Basis& basis, int steps_per_period, double tolerance = 1e-13);

  int steps_per_period() const { return steps_; }
  double defect() const { return defect_; }
  const Eigen::MatrixXcd& at(int j) const { return sub_[static_cast<std::size_t>(j)]; }
  const Eigen::MatrixXcd& period_map() const { return sub_.back(); }
  /// Hermitian energy form K_j = U_j^dagger H(t_j) U_j.
  const Eigen::MatrixXcd& energy_form(int j) const { return energy_forms_[static_cast<std::size_t>(j)]; }

 private:
  int steps_;
  double defect_ = 0.0;
  std::vector<Eigen::MatrixXcd> sub_;
  std::vector<Eigen::MatrixXcd> energy_forms_;
};

/// Integrates from `initial` (at t = 0) to t_end, sampling every tau/spp.
/// Throws IntegrationError (step-size collapse), IntegrityError (norm drift).
Trajectory evolve(const CavityConfig& cfg, const Basis& basis, const StateVector& initial, double t_end,
                  const EvolveOptions& options = {});

/// Backward integration from `final_state` at time t_start to t = 0 (direct
/// mode only); used for reversibility checks.
StateVector evolve_backward(const CavityConfig& cfg, const Basis& basis, const StateVector& final_state,
                            double tolerance = 1e-10);

/// Energy-only run (no stored states), the workhorse of frequency scans.
struct EnergySeries {
  double dt = 0.0;
  int samples_per_period = 0;
  std::vector<double> energies;
  std::vector<double> alpha_sq;  // alpha^2 at each sample
  double max_norm_drift = 0.0;
};
EnergySeries evolve_energy(const CavityConfig& cfg, const Basis& basis, const StateVector& initial, double t_end,
                           const EvolveOptions& options = {});

struct MaxEnergy {
  double value = 0.0;
  double time = 0.0;
  bool short_span = false;  // run shorter than the requested span
};
MaxEnergy max_energy(const Trajectory& trajectory, double required_span = 0.0);
MaxEnergy max_energy(const EnergySeries& series, double required_span = 0.0);

/// CSV with columns t, Re a_m, Im a_m (m = 1..M), E, norm for stored states.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, std::string_view manifest_hash = {});

}  // namespace cavphase
