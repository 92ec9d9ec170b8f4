#include "cavphase/resonance_scanner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "cavphase/csv_io.hpp"
#include "cavphase/errors.hpp"

namespace cavphase {

namespace {

constexpr double kPi = std::numbers::pi;

// 2 x 1.3916: full width of sin^2(x) / x^2 at half maximum, in units of 1/t.
constexpr double kSincWidth = 5.566;

int top_level(const Basis& basis, const RunPolicy& policy) {
  return policy.max_level > 0 ? std::min(policy.max_level, basis.size()) : basis.size();
}

PredictedPeak predict(const CavityConfig& cfg, const Basis& basis, int k, int n, int N) {
  const double shift = mean_alpha_sq(cfg.epsilon);
  PredictedPeak p{k, n, N, basis.transition_frequency(n, k) * shift / N, 0.0};
  const auto spec = make_resonance(basis, k, n, N, basis.transition_frequency(n, k) / N);
  p.Gamma = width(spec, cfg.epsilon, basis.coupling(n, k));
  return p;
}

double scaled_value(double e_max, double epsilon, double E_k, double E_n) {
  return ((1.0 - epsilon) * (1.0 - epsilon) * e_max - E_k) / (E_n - E_k);
}

// Vertex abscissa of the parabola through three points; x1 if degenerate.
double vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double d0 = (y1 - y0) / (x1 - x0);
  const double d1 = (y2 - y1) / (x2 - x1);
  const double curvature = (d1 - d0) / (x2 - x0);
  if (!(curvature < 0.0)) return x1;
  const double x = 0.5 * (x0 + x1) - d0 / (2.0 * curvature);
  return std::clamp(x, x0, x2);
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  return out;
}

std::vector<ScanPoint> run_points(const CavityConfig& cfg, const Basis& basis, const PredictedPeak& peak,
                                  std::span<const double> omegas, double t_run, const RunPolicy& policy) {
  std::vector<ScanPoint> out(omegas.size());
  parallel_for(omegas.size(), policy.workers,
               [&](std::size_t i) { out[i] = scan_point(cfg, basis, peak, omegas[i], t_run, policy); });
  for (const auto& p : out) {
    if (!p.error.empty()) throw NumericalError("scan point at omega=" + format_real(p.omega) + ": " + p.error);
  }
  return out;
}

std::size_t best_index(const std::vector<ScanPoint>& points) {
  return static_cast<std::size_t>(
      std::max_element(points.begin(), points.end(),
                       [](const ScanPoint& a, const ScanPoint& b) { return a.scaled < b.scaled; }) -
      points.begin());
}

double refined_center(const std::vector<ScanPoint>& points) {
  const std::size_t i = best_index(points);
  if (i == 0 || i + 1 == points.size()) return points[i].omega;
  return vertex(points[i - 1].omega, points[i - 1].scaled, points[i].omega, points[i].scaled, points[i + 1].omega,
                points[i + 1].scaled);
}

}  // namespace

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  const auto threads = static_cast<std::size_t>(std::clamp<long>(workers, 1, static_cast<long>(std::max<std::size_t>(count, 1))));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex guard;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(guard);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<PredictedPeak> predicted_peaks(const CavityConfig& cfg, const Basis& basis, double lo, double hi,
                                           const RunPolicy& policy, int k) {
  std::vector<PredictedPeak> out;
  for (int N = 1; N <= std::min(policy.max_order, 3); ++N) {
    for (int n = k + 1; n <= top_level(basis, policy); ++n) {
      if (basis.coupling(n, k) == 0.0) continue;
      const auto p = predict(cfg, basis, k, n, N);
      if (p.omega >= lo && p.omega <= hi) out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.omega < b.omega; });
  return out;
}

double run_length(const PredictedPeak& peak, const RunPolicy& policy, bool near_peak) {
  return std::min(policy.span_factor * kPi / peak.Gamma, near_peak ? policy.hard_cap : policy.coarse_cap);
}

double effective_fwhm(const PredictedPeak& peak, double t_run) {
  return std::max(4.0 * peak.Gamma / peak.N, kSincWidth / (peak.N * t_run));
}

Assignment assign_peak(double omega, const std::vector<PredictedPeak>& peaks, const RunPolicy& policy) {
  if (peaks.empty()) throw InputError("no predicted resonance to assign omega=" + format_real(omega) + " to");
  std::size_t first = 0, second = peaks.size();
  auto distance = [&](std::size_t i) { return std::abs(peaks[i].N * (omega - peaks[i].omega)); };
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    if (distance(i) < distance(first)) {
      second = first;
      first = i;
    } else if (second == peaks.size() || distance(i) < distance(second)) {
      second = i;
    }
  }
  Assignment a;
  a.peak = peaks[first];
  const double fw = effective_fwhm(a.peak, run_length(a.peak, policy, true));
  a.near_peak = std::abs(omega - a.peak.omega) <= 3.0 * fw;
  if (second < peaks.size()) {
    const double fw2 = effective_fwhm(peaks[second], run_length(peaks[second], policy, true));
    a.ambiguous = distance(second) - distance(first) < std::max(a.peak.N * fw, peaks[second].N * fw2);
  }
  return a;
}

std::vector<double> build_grid(const CavityConfig& cfg, const Basis& basis, double lo, double hi, double coarse_step,
                               const RunPolicy& policy) {
  if (!(hi > lo) || !(coarse_step > 0.0)) throw DomainError("scan needs lo < hi and a positive step");
  std::vector<double> grid;
  const auto coarse = static_cast<int>(std::ceil((hi - lo) / coarse_step));
  for (int i = 0; i <= coarse; ++i) grid.push_back(std::min(hi, lo + i * coarse_step));
  for (const auto& p : predicted_peaks(cfg, basis, lo, hi, policy)) {
    const double fw = effective_fwhm(p, run_length(p, policy, true));
    const double h = fw / policy.points_per_fwhm;
    const auto half = static_cast<int>(std::ceil(policy.refine_halfwidth * policy.points_per_fwhm));
    for (int j = -half; j <= half; ++j) {
      const double w = p.omega + j * h;
      if (w >= lo && w <= hi) grid.push_back(w);
    }
  }
  std::sort(grid.begin(), grid.end());
  std::vector<double> out;
  for (double w : grid) {
    if (out.empty() || w - out.back() > 1e-12 * w) out.push_back(w);
  }
  return out;
}

ScanPoint scan_point(const CavityConfig& base, const Basis& basis, const PredictedPeak& peak, double omega,
                     double t_run, const RunPolicy& policy) {
  ScanPoint point;
  point.omega = omega;
  point.n = peak.n;
  point.N = peak.N;
  point.t_run = t_run;
  try {
    CavityConfig cfg = base;
    cfg.omega = omega;
    EvolveOptions options;
    options.steps_per_period = policy.steps_per_period;
    const auto series = evolve_energy(cfg, basis, basis_state(basis, peak.k), t_run, options);
    const auto top = max_energy(series, t_run);
    point.e_max = top.value;
    point.short_span = top.short_span;
    point.scaled = scaled_value(top.value, cfg.epsilon, basis.energy(peak.k), basis.energy(peak.n));
  } catch (const Error& e) {
    point.error = std::string(e.kind()) + ": " + e.what();
  }
  return point;
}

ScanResult scan(const CavityConfig& cfg, const Basis& basis, std::span<const double> grid, const RunPolicy& policy) {
  cfg.validate();
  if (!std::is_sorted(grid.begin(), grid.end())) throw InputError("scan grid must be sorted");
  const double lo = grid.empty() ? 0.0 : grid.front();
  const double hi = grid.empty() ? 0.0 : grid.back();
  // Candidates just outside the grid still decide the nearest assignment.
  const auto peaks = predicted_peaks(cfg, basis, 0.5 * lo, 2.0 * hi + 1.0, policy);
  ScanResult result;
  result.config = cfg;
  result.points.resize(grid.size());
  parallel_for(grid.size(), policy.workers, [&](std::size_t i) {
    const auto a = assign_peak(grid[i], peaks, policy);
    auto& p = result.points[i];
    p = scan_point(cfg, basis, a.peak, grid[i], run_length(a.peak, policy, a.near_peak), policy);
    p.ambiguous = a.ambiguous;
  });
  return result;
}

std::vector<DetectedPeak> find_peaks(const ScanResult& result, int radius, double floor) {
  // E_max is continuous in omega; the scaled value jumps where the assignment changes.
  const auto& pts = result.points;
  const auto r = static_cast<std::ptrdiff_t>(std::max(radius, 1));
  const auto count = static_cast<std::ptrdiff_t>(pts.size());
  std::vector<DetectedPeak> out;
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto& p = pts[static_cast<std::size_t>(i)];
    if (!p.error.empty() || p.scaled <= floor) continue;
    bool is_max = true;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - r); j <= std::min(count - 1, i + r) && is_max; ++j) {
      if (j == i || !pts[static_cast<std::size_t>(j)].error.empty()) continue;
      const double e = pts[static_cast<std::size_t>(j)].e_max;
      if (e > p.e_max || (e == p.e_max && j < i)) is_max = false;
    }
    if (!is_max || i == 0 || i + 1 == count) continue;
    const auto& a = pts[static_cast<std::size_t>(i - 1)];
    const auto& b = pts[static_cast<std::size_t>(i + 1)];
    DetectedPeak d;
    d.omega = vertex(a.omega, a.e_max, p.omega, p.e_max, b.omega, b.e_max);
    d.value = p.scaled;
    d.index = static_cast<std::size_t>(i);
    d.n = p.n;
    d.N = p.N;
    d.ambiguous = p.ambiguous;
    out.push_back(d);
  }
  return out;
}

LorentzianFit fit_lorentzian(std::span<const double> omega, std::span<const double> values, double center_guess,
                             double fwhm_guess, double amplitude_guess) {
  if (omega.size() != values.size()) throw InputError("omega and values differ in length");
  if (omega.size() < 7) throw InputError("Lorentzian fit needs at least 7 points");
  if (!(fwhm_guess > 0.0)) throw InputError("fwhm guess must be positive");
  const auto m = static_cast<Eigen::Index>(omega.size());

  // Parameters (A, w0, h) with h = fwhm / 2; the abscissa is centred and
  // scaled by the initial half width to keep the normal equations balanced.
  const double x0 = center_guess;
  const double s = 0.5 * fwhm_guess;
  Eigen::Vector3d p(amplitude_guess, 0.0, 1.0);
  auto residuals = [&](const Eigen::Vector3d& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double u = ((omega[static_cast<std::size_t>(i)] - x0) / s - q[1]) / q[2];
      const double d = 1.0 / (1.0 + u * u);
      r[i] = q[0] * d - values[static_cast<std::size_t>(i)];
      if (jac) {
        (*jac)(i, 0) = d;
        (*jac)(i, 1) = q[0] * 2.0 * u * d * d / q[2];
        (*jac)(i, 2) = q[0] * 2.0 * u * u * d * d / q[2];
      }
    }
  };

  Eigen::VectorXd r(m), trial_r(m);
  Eigen::MatrixXd J(m, 3);
  residuals(p, r, &J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  LorentzianFit fit;
  bool converged = false;
  int iter = 0;
  for (; iter < 200 && !converged; ++iter) {
    const Eigen::Matrix3d JtJ = J.transpose() * J;
    const Eigen::Vector3d g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < 1e-15 * std::max(1.0, cost)) {
      converged = true;
      break;
    }
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::Matrix3d a = JtJ;
      a.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-300);
      const Eigen::Vector3d step = a.ldlt().solve(-g);
      Eigen::Vector3d q = p + step;
      if (q[2] == 0.0) {
        lambda *= 10.0;
        continue;
      }
      residuals(q, trial_r, nullptr);
      const double trial = trial_r.squaredNorm();
      if (trial <= cost) {
        const double change = step.cwiseAbs().maxCoeff() / std::max(1.0, p.cwiseAbs().maxCoeff());
        p = q;
        cost = trial;
        residuals(p, r, &J);
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        if (change < 1e-13) converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) converged = true;  // no descent direction left: at the minimum to rounding
  }
  if (!converged)
    throw NumericalError("Lorentzian fit did not converge in 200 iterations; residual norm " +
                         format_real(std::sqrt(cost)));
  fit.amplitude = p[0];
  fit.center = x0 + s * p[1];
  fit.fwhm = 2.0 * s * std::abs(p[2]);
  fit.residual = r.lpNorm<Eigen::Infinity>();
  fit.iterations = iter;
  if (!(fit.fwhm > 0.0) || !std::isfinite(fit.center)) throw NumericalError("Lorentzian fit degenerated");
  return fit;
}

ResonanceFit locate_resonance(const CavityConfig& cfg, const Basis& basis, int k, int n, int N,
                              const RunPolicy& policy) {
  cfg.validate();
  ResonanceFit out;
  out.peak = predict(cfg, basis, k, n, N);
  const auto& peak = out.peak;
  out.t_run = std::min(policy.span_factor * kPi / peak.Gamma, policy.fit_cap);
  const double fw = effective_fwhm(peak, out.t_run);

  // Narrowing: 9 points over c +- H, each stage run just long enough to
  // resolve its own spacing, until H is down to 3 predicted FWHM.
  double center = peak.omega;
  double H = std::max(8.0 * fw, N > 1 ? 5e-4 * center : 0.0);
  for (int stage = 0; stage < 6 && H > 3.0 * fw; ++stage) {
    const double t_stage = std::min(out.t_run, 2.0 * kSincWidth / (N * H));
    const auto grid = linspace(center - H, center + H, 9);
    const auto pts = run_points(cfg, basis, peak, grid, t_stage, policy);
    const std::size_t best = best_index(pts);
    center = refined_center(pts);
    // A maximum on the edge means the peak lies further out: move, keep H.
    if (best != 0 && best + 1 != pts.size()) H = std::max(H / 3.0, 3.0 * fw);
  }

  auto fit_on = [&](double c, double half) {
    const auto grid = linspace(c - half, c + half, 15);
    out.points = run_points(cfg, basis, peak, grid, out.t_run, policy);
    std::vector<double> x, y;
    for (const auto& p : out.points) {
      x.push_back(p.omega);
      y.push_back(p.scaled);
    }
    const double guess_center = refined_center(out.points);
    const double top = out.points[best_index(out.points)].scaled;
    return fit_lorentzian(x, y, guess_center, std::min(fw, half), top);
  };
  out.fit = fit_on(center, 3.0 * fw);
  if (out.fit.fwhm > 1.5 * fw) out.fit = fit_on(out.fit.center, 3.0 * out.fit.fwhm);
  out.Gamma = N * out.fit.fwhm / 4.0;
  out.Gamma_scaled = out.Gamma / (std::pow(cfg.epsilon, N) * std::abs(basis.coupling(n, k)));
  return out;
}

double rabi_period(std::span<const double> energies, std::span<const double> alpha_sq, double dt, int spp,
                   double E_k) {
  if (energies.size() != alpha_sq.size()) throw InputError("energies and alpha^2 differ in length");
  if (spp < 1 || !(dt > 0.0)) throw InputError("rabi_period needs a sampled drive period");
  const std::size_t cycles = energies.size() / static_cast<std::size_t>(spp);
  if (cycles < 4) throw InputError("insufficient span: fewer than 4 drive cycles");

  std::vector<double> env(cycles), when(cycles);
  for (std::size_t c = 0; c < cycles; ++c) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t at = 0;
    for (std::size_t j = c * spp; j < (c + 1) * spp; ++j) {
      const double v = energies[j] / alpha_sq[j] - E_k;
      if (v > best) {
        best = v;
        at = j;
      }
    }
    env[c] = best;
    when[c] = static_cast<double>(at) * dt;
  }

  // Each excursion below lo + 0.2 (hi - lo) holds one minimum.
  const auto [lo_it, hi_it] = std::minmax_element(env.begin(), env.end());
  const double level = *lo_it + 0.2 * (*hi_it - *lo_it);
  std::vector<double> minima;
  bool starts_low = false;
  std::size_t c = 0;
  while (c < cycles) {
    if (env[c] >= level) {
      ++c;
      continue;
    }
    const std::size_t begin = c;
    while (c < cycles && env[c] < level) ++c;
    const std::size_t end = c;  // one past the excursion
    if (begin == 0) {
      starts_low = true;
      continue;
    }
    if (end == cycles) break;  // cut off by the end of the run
    const auto m = static_cast<std::size_t>(std::min_element(env.begin() + begin, env.begin() + end) - env.begin());
    double t = when[m];
    if (m > 0 && m + 1 < cycles) t = vertex(when[m - 1], -env[m - 1], when[m], -env[m], when[m + 1], -env[m + 1]);
    minima.push_back(t);
  }
  if (minima.size() >= 2) return (minima.back() - minima.front()) / static_cast<double>(minima.size() - 1);
  if (minima.size() == 1 && starts_low) return minima.front();
  throw InputError("insufficient span: fewer than two envelope minima");
}

double rabi_period(const EnergySeries& series, double E_k) {
  return rabi_period(series.energies, series.alpha_sq, series.dt, series.samples_per_period, E_k);
}

ResonanceRow table1_row(const CavityConfig& cfg, const Basis& basis, const ResonanceRequest& request,
                        const RunPolicy& policy) {
  ResonanceRow row;
  row.N = request.N;
  row.n = request.n;
  try {
    const auto located = locate_resonance(cfg, basis, 1, request.n, request.N, policy);
    row.center = located.fit.center;
    row.gamma_scaled_numerical = located.Gamma_scaled;
    row.gamma_scaled_rwa = scaled_width(make_resonance(basis, 1, request.n, request.N,
                                                       basis.transition_frequency(request.n, 1) / request.N));
    row.fit_residual = located.fit.residual / located.fit.amplitude;

    CavityConfig at = cfg;
    at.omega = located.fit.center;
    EvolveOptions options;
    options.steps_per_period = policy.steps_per_period;
    const double t_end = std::min(2.3 * kPi / located.Gamma, 2.0 * policy.fit_cap);
    const auto series = evolve_energy(at, basis, basis_state(basis, 1), t_end, options);
    row.rabi_period = rabi_period(series, basis.energy(1));
    row.T_times_Gamma_over_pi = row.rabi_period * located.Gamma / kPi;
  } catch (const Error& e) {
    row.error = std::string(e.kind()) + ": " + e.what();
  }
  return row;
}

std::vector<ResonanceRow> table1(const CavityConfig& cfg, const Basis& basis, std::span<const ResonanceRequest> rows,
                                 const RunPolicy& policy) {
  std::vector<ResonanceRow> out;
  for (const auto& r : rows) out.push_back(table1_row(cfg, basis, r, policy));
  return out;
}

void write_scan_csv(std::ostream& out, const ScanResult& result, std::string_view manifest_hash) {
  write_csv_header(out, {"omega", "E_max", "scaled", "n", "N", "ambiguous", "short_span", "t_run", "error"},
                   manifest_hash);
  for (const auto& p : result.points) {
    out << format_real(p.omega) << ',' << format_real(p.e_max) << ',' << format_real(p.scaled) << ',' << p.n << ','
        << p.N << ',' << int(p.ambiguous) << ',' << int(p.short_span) << ',' << format_real(p.t_run) << ",\""
        << p.error << "\"\n";
  }
}

void write_peaks_csv(std::ostream& out, const std::vector<DetectedPeak>& peaks, std::string_view manifest_hash) {
  write_csv_header(out, {"omega", "scaled", "n", "N", "ambiguous"}, manifest_hash);
  for (const auto& p : peaks) {
    out << format_real(p.omega) << ',' << format_real(p.value) << ',' << p.n << ',' << p.N << ',' << int(p.ambiguous)
        << '\n';
  }
}

void write_table_csv(std::ostream& out, const std::vector<ResonanceRow>& rows, std::string_view manifest_hash) {
  write_csv_header(out,
                   {"N", "n", "center", "gamma_scaled_numerical", "gamma_scaled_rwa", "rabi_period",
                    "T_Gamma_over_pi", "fit_residual", "error"},
                   manifest_hash);
  for (const auto& r : rows) {
    out << r.N << ',' << r.n << ',' << format_real(r.center) << ',' << format_real(r.gamma_scaled_numerical) << ','
        << format_real(r.gamma_scaled_rwa) << ',' << format_real(r.rabi_period) << ','
        << format_real(r.T_times_Gamma_over_pi) << ',' << format_real(r.fit_residual) << ",\"" << r.error << "\"\n";
  }
}

}  // namespace cavphase
