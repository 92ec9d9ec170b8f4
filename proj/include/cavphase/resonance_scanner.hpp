#pragma once

// Frequency sweeps of the full evolver, peak detection, Lorentzian fits and
// Rabi-period extraction for k -> n resonances at omega ~ omega_nk / N.

#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cavphase/core_model.hpp"
#include "cavphase/tdse_evolver.hpp"
#include "cavphase/two_level_rwa.hpp"

namespace cavphase {

struct RunPolicy {
  double span_factor = 1.5;      // run for span_factor * pi / Gamma_RWA ...
  double hard_cap = 3000.0;      // ... but never longer than this near a peak
  double coarse_cap = 200.0;     // or this far from every predicted peak
  double fit_cap = 200000.0;     // cap for the runs behind a width fit
  int steps_per_period = 100;
  int workers = 1;
  int max_order = 3;             // N = 1..max_order
  int max_level = 0;             // highest n considered; 0 = basis size
  double points_per_fwhm = 12.0;
  double refine_halfwidth = 2.0;  // refinement covers +- this many FWHM
};

/// omega = omega_nk <alpha^2> / N with its RWA width; the drive-averaged
/// alpha^2 shifts every resonance by (1 - eps^2)^{-3/2}.
struct PredictedPeak {
  int k = 1;
  int n = 2;
  int N = 1;
  double omega = 0.0;
  double Gamma = 0.0;  // RWA width at exact resonance
};

std::vector<PredictedPeak> predicted_peaks(const CavityConfig& cfg, const Basis& basis, double lo, double hi,
                                           const RunPolicy& policy, int k = 1);

/// Run length for a point assigned to `peak`: min(span_factor pi / Gamma, cap).
double run_length(const PredictedPeak& peak, const RunPolicy& policy, bool near_peak);

/// Width in omega actually resolved after a run of length t_run:
/// max(4 Gamma / N, 5.566 / (N t_run)).
double effective_fwhm(const PredictedPeak& peak, double t_run);

struct Assignment {
  PredictedPeak peak;
  bool ambiguous = false;  // another resonance lies within one FWHM of the nearest
  bool near_peak = false;  // inside the refinement window of `peak`
};

/// Nearest predicted resonance in |N omega - omega_nk <alpha^2>| / N.
Assignment assign_peak(double omega, const std::vector<PredictedPeak>& peaks, const RunPolicy& policy);

struct ScanPoint {
  double omega = 0.0;
  double e_max = 0.0;
  double scaled = 0.0;  // ((1 - eps)^2 E_max - E_k) / (E_n - E_k)
  int n = 0;
  int N = 0;
  bool ambiguous = false;
  bool short_span = false;
  double t_run = 0.0;
  std::string error;  // empty on success
};

struct ScanResult {
  CavityConfig config;
  std::vector<ScanPoint> points;  // ascending in omega
};

/// Coarse uniform grid over [lo, hi] plus points_per_fwhm points per
/// effective FWHM within refine_halfwidth FWHM of every predicted peak.
std::vector<double> build_grid(const CavityConfig& cfg, const Basis& basis, double lo, double hi, double coarse_step,
                               const RunPolicy& policy);

/// Evolves the ground state at every grid frequency on policy.workers
/// threads. Failures are recorded per point.
ScanResult scan(const CavityConfig& cfg, const Basis& basis, std::span<const double> grid, const RunPolicy& policy);

/// One frequency with the run length fixed by the caller.
ScanPoint scan_point(const CavityConfig& cfg, const Basis& basis, const PredictedPeak& peak, double omega,
                     double t_run, const RunPolicy& policy);

struct DetectedPeak {
  double omega = 0.0;  // parabolic vertex through the local maximum
  double value = 0.0;
  std::size_t index = 0;
  int n = 0;
  int N = 0;
  bool ambiguous = false;
};

/// Local maxima of the scaled value that dominate `radius` neighbours on
/// each side and exceed `floor`.
std::vector<DetectedPeak> find_peaks(const ScanResult& result, int radius = 2, double floor = 1e-6);

struct LorentzianFit {
  double center = 0.0;
  double fwhm = 0.0;
  double amplitude = 0.0;
  double residual = 0.0;  // max |data - model|
  int iterations = 0;
};

/// Levenberg-Marquardt fit of A / [1 + ((w - w0) / h)^2], fwhm = 2 h.
/// NumericalError after 200 iterations without convergence.
LorentzianFit fit_lorentzian(std::span<const double> omega, std::span<const double> values, double center_guess,
                             double fwhm_guess, double amplitude_guess = 1.0);

struct ResonanceFit {
  PredictedPeak peak;
  LorentzianFit fit;
  std::vector<ScanPoint> points;  // the final fit grid
  double t_run = 0.0;
  double Gamma = 0.0;         // N fwhm / 4
  double Gamma_scaled = 0.0;  // Gamma / (eps^N |eta_nk|)
};

/// Narrows in on the k -> n, order-N peak with repeated local grids, then
/// fits a Lorentzian on a grid spanning +-3 FWHM around it.
ResonanceFit locate_resonance(const CavityConfig& cfg, const Basis& basis, int k, int n, int N,
                              const RunPolicy& policy);

/// Rabi period from successive minima of the slow envelope of
/// E alpha^{-2} - E_k, the envelope being the per-cycle maximum.
/// InputError if fewer than two minima are found.
double rabi_period(const EnergySeries& series, double E_k);
double rabi_period(std::span<const double> energies, std::span<const double> alpha_sq, double dt, int samples_per_period,
                   double E_k);

struct ResonanceRequest {
  int N = 1;
  int n = 2;
};

struct ResonanceRow {
  int N = 1;
  int n = 2;
  double center = 0.0;
  double gamma_scaled_numerical = 0.0;
  double gamma_scaled_rwa = 0.0;
  double rabi_period = 0.0;
  double T_times_Gamma_over_pi = 0.0;
  double fit_residual = 0.0;
  std::string error;
};

/// One row per request with k = 1. Failures are recorded per row.
std::vector<ResonanceRow> table1(const CavityConfig& cfg, const Basis& basis, std::span<const ResonanceRequest> rows,
                                 const RunPolicy& policy);
ResonanceRow table1_row(const CavityConfig& cfg, const Basis& basis, const ResonanceRequest& request,
                        const RunPolicy& policy);

/// Columns omega, E_max, scaled, n, N, ambiguous, short_span, t_run, error.
void write_scan_csv(std::ostream& out, const ScanResult& result, std::string_view manifest_hash = {});
void write_peaks_csv(std::ostream& out, const std::vector<DetectedPeak>& peaks, std::string_view manifest_hash = {});
void write_table_csv(std::ostream& out, const std::vector<ResonanceRow>& rows, std::string_view manifest_hash = {});

/// Runs fn(i) for i in [0, count) on up to `workers` threads.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace cavphase
