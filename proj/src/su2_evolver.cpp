#include "cavphase/su2_evolver.hpp"

#include <cmath>
#include <string>

#include "cavphase/errors.hpp"
#include "ode_support.hpp"

namespace cavphase {

namespace {

using cplx = std::complex<double>;

struct ChartExit {
  detail::cvec state;
  double t;
};

}  // namespace

SU2Driver cavity_driver(const ResonanceSpec& spec, const CavityConfig& cfg, const Basis& basis) {
  const double ek = basis.energy(spec.k);
  const double en = basis.energy(spec.n);
  const double eta_kn = basis.coupling(spec.k, spec.n);
  const double eta_nk = basis.coupling(spec.n, spec.k);
  const cplx i(0.0, 1.0);
  SU2Driver d;
  d.f0 = [=](double t) {
    const double a = alpha_at(t, cfg);
    return -i * a * a * (ek + en) / 2.0;
  };
  d.f2 = [=](double t) {
    const double a = alpha_at(t, cfg);
    return -i * a * a * (ek - en) / 2.0;
  };
  d.f1 = [=](double t) { return cplx(wall_log_derivative(t, cfg) * eta_kn); };
  d.f3 = [=](double t) { return cplx(wall_log_derivative(t, cfg) * eta_nk); };
  return d;
}

Eigen::Matrix2cd driver_hamiltonian(const SU2Driver& driver, double t) {
  const cplx f0 = driver.f0(t), f1 = driver.f1(t), f2 = driver.f2(t), f3 = driver.f3(t);
  Eigen::Matrix2cd g;
  g << f0 + f2, f1, f3, f0 - f2;
  return cplx(0.0, 1.0) * g;
}

Eigen::Matrix2cd truncated_hamiltonian(const ResonanceSpec& spec, const CavityConfig& cfg, const Basis& basis,
                                       double t) {
  const double a2 = std::pow(alpha_at(t, cfg), 2);
  const cplx ir(0.0, wall_log_derivative(t, cfg));
  Eigen::Matrix2cd h;
  h << a2 * basis.energy(spec.k), ir * basis.coupling(spec.k, spec.n), ir * basis.coupling(spec.n, spec.k),
      a2 * basis.energy(spec.n);
  return h;
}

Eigen::Matrix2cd evolution_operator(const GState& g) {
  const cplx up = std::exp(g.g2);
  const cplx down = std::exp(-g.g2);
  Eigen::Matrix2cd u;
  u << up + down * g.g1 * g.g3, down * g.g1, down * g.g3, down;
  return std::exp(g.F0) * u;
}

std::array<cplx, 2> amplitudes(const GState& g) {
  const cplx b = std::exp(-g.g2);
  const cplx f = std::exp(g.F0);
  return {f * b * (1.0 / (b * b) + g.g1 * g.g3), f * b * g.g3};
}

std::array<cplx, 2> SU2Trajectory::amplitudes(std::size_t i) const {
  const auto& u = propagator.at(i);
  return {u(0, 0), u(1, 0)};
}

double SU2Trajectory::max_unitarity_defect() const {
  double worst = 0.0;
  for (const auto& u : propagator) {
    worst = std::max(worst, (u.adjoint() * u - Eigen::Matrix2cd::Identity()).norm());
  }
  return worst;
}

SU2Trajectory integrate_g(const SU2Driver& driver, double t_end, double dt, const SU2Options& options) {
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw DomainError("integrate_g needs dt > 0 and t_end >= 0");
  const auto count = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9)) + 1;
  std::vector<double> times(count);
  for (std::size_t i = 0; i < count; ++i) times[i] = static_cast<double>(i) * dt;

  auto system = [&driver](const detail::cvec& x, detail::cvec& dx, double t) {
    const cplx f0 = driver.f0(t), f1 = driver.f1(t), f2 = driver.f2(t), f3 = driver.f3(t);
    dx[0] = f1 + 2.0 * f2 * x[0] - f3 * x[0] * x[0];
    dx[1] = f2 - f3 * x[0];
    dx[2] = f3 * std::exp(2.0 * x[1]);
    dx[3] = f0;
  };

  SU2Trajectory out;
  out.times.reserve(count);
  Eigen::Matrix2cd accumulated = Eigen::Matrix2cd::Identity();
  std::size_t start = 0;
  while (start < count) {
    detail::cvec state(4, cplx{});
    std::size_t index = start;
    auto observe = [&](const detail::cvec& x, double t) {
      GState g{t, x[0], x[1], x[2], x[3]};
      if (index > start || start == 0) {
        out.times.push_back(t);
        out.g.push_back(g);
        out.propagator.push_back(evolution_operator(g) * accumulated);
      }
      const bool stretched = std::abs(std::exp(-x[1])) < options.restart_b || std::abs(x[0]) > options.restart_g ||
                             std::abs(x[2]) > options.restart_g;
      ++index;
      if (stretched && index < count) throw ChartExit{x, t};
    };
    try {
      detail::integrate_at(detail::Scheme::DormandPrince5, system, state,
                           std::span<const double>(times).subspan(start), options.tolerance, observe, dt * 1e-2);
      break;
    } catch (const ChartExit& exit) {
      accumulated = out.propagator.back();
      start = index - 1;
      ++out.chart_restarts;
    } catch (const IntegrationError& e) {
      throw IntegrationError(std::string("SU(2) chart blow-up: ") + e.what(), e.last_good_time());
    }
  }
  return out;
}

}  // namespace cavphase
