#include "cavphase/phase_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "cavphase/csv_io.hpp"
#include "cavphase/errors.hpp"

namespace cavphase {

namespace {

constexpr double kPi = std::numbers::pi;

void require_uniform(const Trajectory& trajectory) {
  const auto& t = trajectory.times;
  if (t.size() != trajectory.energies.size()) throw InputError("times and energies differ in length");
  if (t.empty()) throw InputError("empty trajectory");
  if (t.front() != 0.0) throw InputError("trajectory must start at t = 0");
  const double dt = trajectory.dt;
  if (t.size() > 1 && !(dt > 0.0)) throw InputError("non-positive sample spacing");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw InputError("sample times are not strictly increasing");
    const double expected = static_cast<double>(i) * dt;
    if (std::abs(t[i] - expected) > 1e-9 * std::max(1.0, expected))
      throw InputError("sample times are not uniform at index " + std::to_string(i));
  }
}

std::size_t sample_index(const Trajectory& trajectory, double t) {
  const double pos = t / trajectory.dt;
  const auto i = static_cast<std::size_t>(std::llround(pos));
  if (pos < -0.5 || i >= trajectory.size() || std::abs(pos - static_cast<double>(i)) > 1e-6)
    throw InputError("time " + std::to_string(t) + " is not a sample time");
  return i;
}

double pancharatnam_at(const Trajectory& trajectory, std::span<const double> theta, std::size_t i1, std::size_t i2) {
  const auto& a1 = trajectory.state_at(i1).coeffs;
  const auto& a2 = trajectory.state_at(i2).coeffs;
  cplx overlap{};
  for (std::size_t m = 0; m < a1.size(); ++m) overlap += std::conj(a1[m]) * a2[m];
  if (std::abs(overlap) < 1e-12)
    throw OrthogonalStatesError("states at t=" + std::to_string(trajectory.times[i1]) + " and t=" +
                                std::to_string(trajectory.times[i2]) + " are orthogonal");
  return std::arg(overlap * std::polar(1.0, theta[i1] - theta[i2]));
}

std::size_t period_samples(const Trajectory& trajectory) {
  const int spp = trajectory.samples_per_period;
  if (spp <= 0) throw InputError("trajectory has no drive period");
  if (spp % trajectory.stride != 0) throw InputError("state stride does not divide the period");
  return static_cast<std::size_t>(spp);
}

}  // namespace

double wrap_phase(double phase) {
  double r = std::remainder(phase, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

std::vector<double> dynamical_phase(const Trajectory& trajectory) {
  require_uniform(trajectory);
  const auto& f = trajectory.energies;
  const std::size_t n = f.size();
  const double h = trajectory.dt;
  std::vector<double> integral(n, 0.0);
  for (std::size_t i = 2; i < n; i += 2) {
    integral[i] = integral[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
  }
  for (std::size_t i = 1; i < n; i += 2) {
    if (i == 1) {
      integral[1] = n > 2 ? h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]) : 0.5 * h * (f[0] + f[1]);
    } else {
      integral[i] = integral[i - 3] + 3.0 * h / 8.0 * (f[i - 3] + 3.0 * f[i - 2] + 3.0 * f[i - 1] + f[i]);
    }
  }
  for (auto& v : integral) v = -v;
  return integral;
}

double pancharatnam(const Trajectory& trajectory, std::span<const double> theta, double t1, double t) {
  if (theta.size() != trajectory.size()) throw InputError("theta does not match trajectory");
  return pancharatnam_at(trajectory, theta, sample_index(trajectory, t1), sample_index(trajectory, t));
}

double pancharatnam(const Trajectory& trajectory, double t1, double t) {
  const auto theta = dynamical_phase(trajectory);
  return pancharatnam(trajectory, theta, t1, t);
}

std::vector<PhasePoint> beta0_series(const Trajectory& trajectory, std::span<const double> theta) {
  const std::size_t spp = period_samples(trajectory);
  std::vector<PhasePoint> out;
  for (std::size_t i = 0; i < trajectory.size(); i += spp) {
    out.push_back({trajectory.times[i], pancharatnam_at(trajectory, theta, 0, i)});
  }
  return out;
}

std::vector<PhasePoint> beta1_series(const Trajectory& trajectory, std::span<const double> theta, bool unwrap_it) {
  const std::size_t spp = period_samples(trajectory);
  std::vector<PhasePoint> out;
  for (std::size_t i = 0; i + spp < trajectory.size(); i += spp) {
    out.push_back({trajectory.times[i], pancharatnam_at(trajectory, theta, i, i + spp)});
  }
  return unwrap_it ? unwrap(std::move(out)) : out;
}

std::vector<PhasePoint> unwrap(std::vector<PhasePoint> series) {
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double step = wrap_phase(series[i].value - series[i - 1].value);
    series[i].value = series[i - 1].value + step;
  }
  return series;
}

double oscillation_amplitude(const std::vector<PhasePoint>& series) {
  if (series.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end(),
                                            [](const PhasePoint& a, const PhasePoint& b) { return a.value < b.value; });
  return hi->value - lo->value;
}

std::vector<PiJump> detect_pi_jumps(const std::vector<PhasePoint>& beta0, double rabi_period) {
  if (!(rabi_period > 0.0)) throw InputError("rabi period must be positive");
  std::vector<PiJump> jumps;
  if (beta0.size() < 2) return jumps;
  const std::size_t n = beta0.size() - 1;
  std::vector<double> steps(n), mid(n);
  for (std::size_t q = 0; q < n; ++q) {
    steps[q] = wrap_phase(beta0[q + 1].value - beta0[q].value);
    mid[q] = 0.5 * (beta0[q].t + beta0[q + 1].t);
  }
  const double spacing = beta0[1].t - beta0[0].t;
  const auto half_window =
      static_cast<std::ptrdiff_t>(std::max(2.0, std::round(rabi_period / (8.0 * spacing))));
  const auto count = static_cast<std::ptrdiff_t>(n);

  std::vector<std::ptrdiff_t> flagged;
  std::vector<double> residuals;
  for (std::ptrdiff_t q = 0; q < count; ++q) {
    cplx trend{};
    for (std::ptrdiff_t k : {q - 3, q - 2, q + 2, q + 3}) {
      if (k >= 0 && k < count) trend += std::polar(1.0, steps[static_cast<std::size_t>(k)]);
    }
    if (std::abs(trend) < 1e-3) continue;
    const double residual = wrap_phase(steps[static_cast<std::size_t>(q)] - std::arg(trend));
    if (std::abs(residual) <= 0.5 * kPi) continue;
    if (!flagged.empty() && q - flagged.back() <= half_window) {
      if (std::abs(residual) > std::abs(residuals.back())) {
        flagged.back() = q;
        residuals.back() = residual;
      }
      continue;
    }
    flagged.push_back(q);
    residuals.push_back(residual);
  }

  // Net jump: steps within +-W of the flagged one, less a background
  // a + b cos(2 pi t/T) + c sin(2 pi t/T) fitted to the steps W+1..3W away.
  const double w = 2.0 * kPi / rabi_period;
  for (std::size_t j = 0; j < flagged.size(); ++j) {
    const std::ptrdiff_t q = flagged[j];
    const std::ptrdiff_t W = half_window;
    double magnitude = residuals[j];
    if (q - 3 * W >= 0 && q + 3 * W < count) {
      std::vector<std::ptrdiff_t> fit;
      std::vector<double> value;
      double prev = 0.0;
      for (std::ptrdiff_t k = q - W - 1; k >= q - 3 * W; --k) {
        double v = steps[static_cast<std::size_t>(k)];
        if (k < q - W - 1) v = prev + wrap_phase(v - prev);
        prev = v;
        fit.push_back(k);
        value.push_back(v);
      }
      const double left_anchor = value.front();
      for (std::ptrdiff_t k = q + W + 1; k <= q + 3 * W; ++k) {
        double v = steps[static_cast<std::size_t>(k)];
        v = (k == q + W + 1) ? left_anchor + wrap_phase(v - left_anchor) : prev + wrap_phase(v - prev);
        prev = v;
        fit.push_back(k);
        value.push_back(v);
      }
      Eigen::MatrixXd a(fit.size(), 3);
      Eigen::VectorXd b(fit.size());
      for (std::size_t i = 0; i < fit.size(); ++i) {
        const double t = mid[static_cast<std::size_t>(fit[i])];
        a.row(static_cast<Eigen::Index>(i)) << 1.0, std::cos(w * t), std::sin(w * t);
        b[static_cast<Eigen::Index>(i)] = value[i];
      }
      const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
      magnitude = 0.0;
      for (std::ptrdiff_t k = q - W; k <= q + W; ++k) {
        const double t = mid[static_cast<std::size_t>(k)];
        const double background = c[0] + c[1] * std::cos(w * t) + c[2] * std::sin(w * t);
        magnitude += wrap_phase(steps[static_cast<std::size_t>(k)] - background);
      }
    }
    const double t = mid[static_cast<std::size_t>(q)];
    jumps.push_back({t, t / rabi_period, magnitude});
  }
  return jumps;
}

PhaseSeries analyze_phases(const Trajectory& trajectory, double rabi_period) {
  const auto theta = dynamical_phase(trajectory);
  PhaseSeries out;
  const std::size_t spp = period_samples(trajectory);
  for (std::size_t i = 0; i < trajectory.size(); i += spp) out.theta.push_back({trajectory.times[i], theta[i]});
  out.beta0 = beta0_series(trajectory, theta);
  out.beta1 = beta1_series(trajectory, theta, false);
  if (rabi_period > 0.0) out.jumps = detect_pi_jumps(out.beta0, rabi_period);
  return out;
}

void write_phase_csv(std::ostream& out, const PhaseSeries& phases, double period, std::string_view manifest_hash) {
  write_csv_header(out, {"t_over_tau", "theta", "beta0", "beta1"}, manifest_hash);
  for (std::size_t q = 0; q < phases.beta0.size(); ++q) {
    out << format_real(phases.beta0[q].t / period) << ',' << format_real(phases.theta[q].value) << ','
        << format_real(phases.beta0[q].value) << ',';
    if (q < phases.beta1.size()) out << format_real(phases.beta1[q].value);
    out << '\n';
  }
}

void write_jump_report(std::ostream& out, const std::vector<PiJump>& jumps, std::string_view manifest_hash) {
  out << "{\"manifest\":\"" << manifest_hash << "\",\"jumps\":[";
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    if (i) out << ',';
    out << "{\"t\":" << format_real(jumps[i].t) << ",\"t_over_T\":" << format_real(jumps[i].t_over_T)
        << ",\"magnitude\":" << format_real(jumps[i].magnitude) << '}';
  }
  out << "]}\n";
}

}  // namespace cavphase
