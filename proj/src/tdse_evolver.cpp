#include "cavphase/tdse_evolver.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <ostream>
#include <string>

#include "cavphase/csv_io.hpp"
#include "cavphase/errors.hpp"
#include "ode_support.hpp"

namespace cavphase {

namespace {

constexpr cplx kI{0.0, 1.0};

// B(t) = r(t) D(t) eta D(t)^dagger with D = diag(exp(i E_m s(t))).
class InteractionGenerator {
 public:
  InteractionGenerator(const CavityConfig& cfg, const Basis& basis)
      : cfg_(cfg),
        size_(basis.size()),
        energies_(Eigen::Map<const Eigen::VectorXd>(basis.energies.data(), basis.size())),
        eta_(basis.eta.cast<cplx>()),
        phase_(size_),
        work_(size_) {}

  int size() const { return size_; }

  /// exp(-i E_m s(t)): maps interaction-picture amplitudes back to the lab.
  Eigen::VectorXcd lab_phase(double t) const {
    const double s = alpha_sq_integral(t, cfg_);
    Eigen::VectorXcd d(size_);
    for (int m = 0; m < size_; ++m) d[m] = std::polar(1.0, -energies_[m] * s);
    return d;
  }

  void vector_rhs(const detail::cvec& x, detail::cvec& dx, double t) {
    update(t);
    Eigen::Map<const Eigen::VectorXcd> b(x.data(), size_);
    Eigen::Map<Eigen::VectorXcd> db(dx.data(), size_);
    work_.noalias() = phase_.conjugate().cwiseProduct(b);
    db.noalias() = eta_ * work_;
    db = rate_ * phase_.cwiseProduct(db);
  }

  void matrix_rhs(const detail::cvec& x, detail::cvec& dx, double t) {
    update(t);
    Eigen::Map<const Eigen::MatrixXcd> u(x.data(), size_, size_);
    Eigen::Map<Eigen::MatrixXcd> du(dx.data(), size_, size_);
    scratch_.noalias() = phase_.conjugate().asDiagonal() * u;
    du.noalias() = eta_ * scratch_;
    du = (rate_ * phase_).asDiagonal() * du;
  }

 private:
  void update(double t) {
    rate_ = wall_log_derivative(t, cfg_);
    const double s = alpha_sq_integral(t, cfg_);
    for (int m = 0; m < size_; ++m) phase_[m] = std::polar(1.0, energies_[m] * s);
  }

  CavityConfig cfg_;
  int size_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd eta_;
  Eigen::VectorXcd phase_;
  Eigen::VectorXcd work_;
  Eigen::MatrixXcd scratch_;
  double rate_ = 0.0;
};

Eigen::MatrixXcd hamiltonian(double t, const CavityConfig& cfg, const Basis& basis) {
  const double a = alpha_at(t, cfg);
  const double r = wall_log_derivative(t, cfg);
  Eigen::MatrixXcd h = (kI * r) * basis.eta.cast<cplx>();
  for (int m = 0; m < basis.size(); ++m) h(m, m) += a * a * basis.energies[m];
  return h;
}

std::size_t sample_count(double t_end, double dt) {
  if (!(t_end >= 0.0)) throw DomainError("t_end must be non-negative");
  return static_cast<std::size_t>(std::floor(t_end / dt + 1e-9)) + 1;
}

void check_initial(const StateVector& initial, const Basis& basis) {
  if (static_cast<int>(initial.coeffs.size()) != basis.size())
    throw DomainError("initial state has " + std::to_string(initial.coeffs.size()) + " coefficients, basis has " +
                      std::to_string(basis.size()));
  if (std::abs(initial.norm_squared() - 1.0) > 1e-12) throw DomainError("initial state is not normalized");
}

void check_options(const EvolveOptions& options) {
  if (options.steps_per_period < 64) throw DomainError("steps_per_period must be >= 64");
  if (options.stride < 1) throw DomainError("stride must be >= 1");
}

double max_drift(const std::vector<double>& norms) {
  double drift = 0.0;
  for (double n : norms) drift = std::max(drift, std::abs(n - 1.0));
  return drift;
}

void enforce_drift(double drift, double limit) {
  if (drift > limit)
    throw IntegrityError("norm drift " + format_real(drift) + " exceeds limit " + format_real(limit));
}

}  // namespace

double StateVector::norm_squared() const {
  double sum = 0.0;
  for (const auto& c : coeffs) sum += std::norm(c);
  return sum;
}

StateVector basis_state(const Basis& basis, int level, double t) {
  if (level < 1 || level > basis.size()) throw DomainError("level outside basis");
  StateVector s;
  s.t = t;
  s.coeffs.assign(static_cast<std::size_t>(basis.size()), cplx{});
  s.coeffs[static_cast<std::size_t>(level - 1)] = 1.0;
  return s;
}

bool Trajectory::has_state(std::size_t sample) const {
  return sample < size() && sample % static_cast<std::size_t>(stride) == 0 &&
         sample / static_cast<std::size_t>(stride) < states.size();
}

const StateVector& Trajectory::state_at(std::size_t sample) const {
  if (!has_state(sample)) throw InputError("no stored state at sample " + std::to_string(sample));
  return states[sample / static_cast<std::size_t>(stride)];
}

double Trajectory::max_norm_drift() const { return max_drift(norms); }

double energy(std::span<const cplx> coeffs, double t, const CavityConfig& cfg, const Basis& basis) {
  const double a = alpha_at(t, cfg);
  const double r = wall_log_derivative(t, cfg);
  const int m = basis.size();
  double kinetic = 0.0;
  double coupling_im = 0.0;  // Im(a^dagger eta a)
  for (int i = 0; i < m; ++i) {
    kinetic += basis.energies[i] * std::norm(coeffs[i]);
    cplx row{};
    for (int j = 0; j < m; ++j) row += basis.eta(i, j) * coeffs[j];
    coupling_im += (std::conj(coeffs[i]) * row).imag();
  }
  // Re[i r a^dagger eta a] = -r Im(a^dagger eta a)
  return a * a * kinetic - r * coupling_im;
}

double energy(const StateVector& state, const CavityConfig& cfg, const Basis& basis) {
  return energy(state.coeffs, state.t, cfg, basis);
}

PeriodPropagator::PeriodPropagator(const CavityConfig& cfg, const Basis& basis, int steps_per_period,
                                   double tolerance)
    : steps_(steps_per_period) {
  cfg.validate();
  if (steps_per_period < 1) throw DomainError("steps_per_period must be positive");
  const int m = basis.size();
  const double dt = cfg.period() / steps_per_period;
  InteractionGenerator generator(cfg, basis);

  std::vector<double> times(static_cast<std::size_t>(steps_per_period) + 1);
  for (std::size_t j = 0; j < times.size(); ++j) times[j] = static_cast<double>(j) * dt;

  detail::cvec u(static_cast<std::size_t>(m) * m, cplx{});
  for (int i = 0; i < m; ++i) u[static_cast<std::size_t>(i) * m + i] = 1.0;

  sub_.reserve(times.size());
  auto system = [&generator](const detail::cvec& x, detail::cvec& dx, double t) { generator.matrix_rhs(x, dx, t); };
  auto observe = [&](const detail::cvec& x, double t) {
    Eigen::Map<const Eigen::MatrixXcd> interaction(x.data(), m, m);
    sub_.push_back(generator.lab_phase(t).asDiagonal() * interaction);
  };
  detail::integrate_at(detail::Scheme::Fehlberg78, system, u, times, tolerance, observe, dt * 1e-2,
                       1.0 / basis.energies.back());

  Eigen::MatrixXcd& map = sub_.back();
  defect_ = (map.adjoint() * map - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(map, Eigen::ComputeFullU | Eigen::ComputeFullV);
  map = svd.matrixU() * svd.matrixV().adjoint();

  energy_forms_.reserve(sub_.size());
  for (std::size_t j = 0; j < sub_.size(); ++j) {
    energy_forms_.push_back(sub_[j].adjoint() * hamiltonian(times[j], cfg, basis) * sub_[j]);
  }
}

Trajectory evolve(const CavityConfig& cfg, const Basis& basis, const StateVector& initial, double t_end,
                  const EvolveOptions& options) {
  cfg.validate();
  check_options(options);
  check_initial(initial, basis);
  if (initial.t != 0.0) throw DomainError("evolution starts at t = 0");

  const int spp = options.steps_per_period;
  const double dt = cfg.period() / spp;
  const std::size_t n = sample_count(t_end, dt);
  const int m = basis.size();

  Trajectory traj;
  traj.dt = dt;
  traj.samples_per_period = spp;
  traj.stride = options.stride;
  traj.config = cfg;
  traj.times.resize(n);
  traj.energies.resize(n);
  traj.norms.resize(n);
  traj.states.reserve(n / static_cast<std::size_t>(options.stride) + 1);

  auto record = [&](std::size_t i, const Eigen::VectorXcd& a) {
    const double t = static_cast<double>(i) * dt;
    traj.times[i] = t;
    traj.norms[i] = a.squaredNorm();
    traj.energies[i] = energy(std::span<const cplx>(a.data(), static_cast<std::size_t>(m)), t, cfg, basis);
    if (i % static_cast<std::size_t>(options.stride) == 0) {
      traj.states.push_back(StateVector{t, std::vector<cplx>(a.data(), a.data() + m)});
    }
  };

  if (options.method == Propagation::Floquet) {
    PeriodPropagator prop(cfg, basis, spp, options.period_tolerance);
    traj.propagator_defect = prop.defect();
    if (prop.defect() > options.defect_limit)
      throw IntegrityError("period propagator unitarity defect " + format_real(prop.defect()));
    Eigen::VectorXcd x = Eigen::Map<const Eigen::VectorXcd>(initial.coeffs.data(), m);
    Eigen::VectorXcd a(m);
    for (std::size_t i = 0; i < n; ++i) {
      const int j = static_cast<int>(i % static_cast<std::size_t>(spp));
      if (j == 0 && i > 0) x = prop.period_map() * x;
      if (j == 0) {
        a = x;
      } else {
        a.noalias() = prop.at(j) * x;
      }
      record(i, a);
    }
  } else {
    InteractionGenerator generator(cfg, basis);
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<double>(i) * dt;
    detail::cvec b(initial.coeffs);
    std::size_t i = 0;
    auto system = [&generator](const detail::cvec& x, detail::cvec& dx, double t) { generator.vector_rhs(x, dx, t); };
    auto observe = [&](const detail::cvec& x, double t) {
      Eigen::Map<const Eigen::VectorXcd> bi(x.data(), m);
      record(i++, generator.lab_phase(t).cwiseProduct(bi));
    };
    detail::integrate_at(detail::Scheme::DormandPrince5, system, b, times, options.tolerance, observe, dt * 1e-2);
  }

  enforce_drift(traj.max_norm_drift(), options.norm_drift_limit);
  return traj;
}

StateVector evolve_backward(const CavityConfig& cfg, const Basis& basis, const StateVector& final_state,
                            double tolerance) {
  cfg.validate();
  const int m = basis.size();
  if (static_cast<int>(final_state.coeffs.size()) != m) throw DomainError("state size does not match basis");
  InteractionGenerator generator(cfg, basis);
  Eigen::Map<const Eigen::VectorXcd> a(final_state.coeffs.data(), m);
  Eigen::VectorXcd b0 = generator.lab_phase(final_state.t).conjugate().cwiseProduct(a);
  detail::cvec b(b0.data(), b0.data() + m);
  const double times[] = {final_state.t, 0.0};
  auto system = [&generator](const detail::cvec& x, detail::cvec& dx, double t) { generator.vector_rhs(x, dx, t); };
  detail::integrate_at(detail::Scheme::DormandPrince5, system, b, times, tolerance, [](const detail::cvec&, double) {},
                       -cfg.period() * 1e-3);
  return StateVector{0.0, std::move(b)};  // lab and interaction pictures coincide at t = 0
}

EnergySeries evolve_energy(const CavityConfig& cfg, const Basis& basis, const StateVector& initial, double t_end,
                           const EvolveOptions& options) {
  cfg.validate();
  check_options(options);
  check_initial(initial, basis);
  const int spp = options.steps_per_period;
  const double dt = cfg.period() / spp;

  EnergySeries series;
  series.dt = dt;
  series.samples_per_period = spp;

  if (options.method == Propagation::Direct) {
    EvolveOptions direct = options;
    direct.stride = std::numeric_limits<int>::max();
    Trajectory traj = evolve(cfg, basis, initial, t_end, direct);
    series.energies = std::move(traj.energies);
    series.max_norm_drift = max_drift(traj.norms);
  } else {
    const std::size_t n = sample_count(t_end, dt);
    const int m = basis.size();
    PeriodPropagator prop(cfg, basis, spp, options.period_tolerance);
    if (prop.defect() > options.defect_limit)
      throw IntegrityError("period propagator unitarity defect " + format_real(prop.defect()));
    series.energies.resize(n);
    Eigen::VectorXcd x = Eigen::Map<const Eigen::VectorXcd>(initial.coeffs.data(), m);
    Eigen::VectorXcd kx(m);
    double drift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int j = static_cast<int>(i % static_cast<std::size_t>(spp));
      if (j == 0 && i > 0) {
        x = prop.period_map() * x;
        drift = std::max(drift, std::abs(x.squaredNorm() - 1.0));
      }
      kx.noalias() = prop.energy_form(j) * x;
      series.energies[i] = x.dot(kx).real();
    }
    series.max_norm_drift = drift;
  }
  series.alpha_sq.resize(series.energies.size());
  for (std::size_t i = 0; i < series.alpha_sq.size(); ++i) {
    const double a = alpha_at(static_cast<double>(i) * dt, cfg);
    series.alpha_sq[i] = a * a;
  }
  enforce_drift(series.max_norm_drift, options.norm_drift_limit);
  return series;
}

namespace {

MaxEnergy max_of(const std::vector<double>& energies, double dt, double required_span) {
  if (energies.empty()) throw InputError("empty energy series");
  const auto it = std::max_element(energies.begin(), energies.end());
  MaxEnergy out;
  out.value = *it;
  out.time = static_cast<double>(it - energies.begin()) * dt;
  out.short_span = static_cast<double>(energies.size() - 1) * dt < required_span;
  return out;
}

}  // namespace

MaxEnergy max_energy(const Trajectory& trajectory, double required_span) {
  return max_of(trajectory.energies, trajectory.dt, required_span);
}

MaxEnergy max_energy(const EnergySeries& series, double required_span) {
  return max_of(series.energies, series.dt, required_span);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, std::string_view manifest_hash) {
  if (trajectory.states.empty()) throw InputError("trajectory has no stored states");
  const std::size_t m = trajectory.states.front().coeffs.size();
  std::vector<std::string> columns{"t"};
  for (std::size_t k = 1; k <= m; ++k) {
    columns.push_back("re_a" + std::to_string(k));
    columns.push_back("im_a" + std::to_string(k));
  }
  columns.push_back("E");
  columns.push_back("norm");
  write_csv_header(out, columns, manifest_hash);
  std::vector<double> row;
  for (const auto& state : trajectory.states) {
    const auto sample = static_cast<std::size_t>(std::llround(state.t / trajectory.dt));
    row.clear();
    row.push_back(state.t);
    for (const auto& c : state.coeffs) {
      row.push_back(c.real());
      row.push_back(c.imag());
    }
    row.push_back(trajectory.energies[sample]);
    row.push_back(trajectory.norms[sample]);
    write_csv_row(out, row);
  }
}

}  // namespace cavphase
