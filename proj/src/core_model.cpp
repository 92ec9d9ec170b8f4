#include "cavphase/core_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cavphase/errors.hpp"

namespace cavphase {

namespace {

constexpr double kPi = std::numbers::pi;

double j0(double x) { return std::cyl_bessel_j(0.0, x); }
double j1(double x) { return std::cyl_bessel_j(1.0, x); }

void require_level(int k) {
  if (k < 1) throw DomainError("level index must be >= 1, got " + std::to_string(k));
}

// \int_0^x du / (1 + eps sin u), continuous across the branch points of the
// half-angle substitution.
double inverse_drive_integral(double x, double eps) {
  const double root = std::sqrt(1.0 - eps * eps);
  const double cycles = std::floor((x + kPi) / (2.0 * kPi));
  const double r = x - 2.0 * kPi * cycles;  // r in [-pi, pi)
  const double offset = std::atan(eps / root);
  const double c = std::cos(0.5 * r);
  const double partial = (2.0 / root) * (std::atan2(std::sin(0.5 * r) + eps * c, root * c) - offset);
  return cycles * 2.0 * kPi / root + partial;
}

}  // namespace

Geometry Geometry::of(GeometryKind kind) {
  return kind == GeometryKind::Cylindrical ? cylindrical() : spherical();
}

std::string_view to_string(GeometryKind kind) {
  return kind == GeometryKind::Cylindrical ? "cylindrical" : "spherical";
}

GeometryKind geometry_kind_from_string(std::string_view name) {
  if (name == "cylindrical") return GeometryKind::Cylindrical;
  if (name == "spherical") return GeometryKind::Spherical;
  throw DomainError("unknown geometry '" + std::string(name) + "'");
}

void CavityConfig::validate() const {
  if (geometry != Geometry::of(geometry.kind))
    throw DomainError("geometry constants do not match its kind");
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw DomainError("epsilon must satisfy 0 <= eps < 1, got " + std::to_string(epsilon));
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw DomainError("omega must be positive, got " + std::to_string(omega));
  if (basis_size < 2)
    throw DomainError("basis_size must be >= 2, got " + std::to_string(basis_size));
}

double CavityConfig::period() const { return 2.0 * kPi / omega; }

double alpha_at(double t, const CavityConfig& cfg) {
  return 1.0 / (1.0 + cfg.epsilon * std::sin(cfg.omega * t));
}

double wall_log_derivative(double t, const CavityConfig& cfg) {
  const double phase = cfg.omega * t;
  return cfg.epsilon * cfg.omega * std::cos(phase) / (1.0 + cfg.epsilon * std::sin(phase));
}

double alpha_sq_integral(double t, const CavityConfig& cfg) {
  const double eps = cfg.epsilon;
  if (eps == 0.0) return t;
  const double x = cfg.omega * t;
  // 1/(1+e s)^2 = [1/(1+e s) + e d/dx(cos x/(1+e s))] / (1-e^2)
  const double value = (inverse_drive_integral(x, eps) + eps * std::cos(x) / (1.0 + eps * std::sin(x)) - eps) /
                       (1.0 - eps * eps);
  return value / cfg.omega;
}

double mean_alpha_sq(double epsilon) { return std::pow(1.0 - epsilon * epsilon, -1.5); }

double bessel_j0_zero(int k) {
  require_level(k);
  // J_0 has exactly one zero between its extrema j_{1,k-1} and j_{1,k}; the
  // interval [(k - 1/2) pi, k pi] lies inside that window for every k.
  double lo = (k - 0.5) * kPi;
  double hi = k * kPi;
  double flo = j0(lo);
  double fhi = j0(hi);
  if (flo * fhi > 0.0) throw NumericalError("J0 zero bracket failed for k=" + std::to_string(k));

  double x = (k - 0.25) * kPi;  // McMahon leading term
  for (int iter = 0; iter < 200; ++iter) {
    const double f = j0(x);
    if (f == 0.0) return x;
    if ((f < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = f;
    } else {
      hi = x;
    }
    const double step = f / -j1(x);
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-15 * std::max(1.0, x) || hi - lo < 1e-14) return next;
    x = next;
  }
  throw NumericalError("J0 zero iteration did not converge for k=" + std::to_string(k));
}

double mode_root(const Geometry& geometry, int k) {
  require_level(k);
  return geometry.kind == GeometryKind::Cylindrical ? bessel_j0_zero(k) : k * kPi;
}

double eigenenergy(const Geometry& geometry, int k) {
  const double root = mode_root(geometry, k);
  return 0.5 * root * root;
}

namespace {

double mode_value(const Geometry& geometry, double root, double y) {
  if (geometry.kind == GeometryKind::Cylindrical) {
    return std::sqrt(2.0) * j0(root * y) / std::abs(j1(root));
  }
  if (y == 0.0) return std::sqrt(2.0) * root;
  return std::sqrt(2.0) * std::sin(root * y) / y;
}

double mode_y_derivative(const Geometry& geometry, double root, double y) {
  if (geometry.kind == GeometryKind::Cylindrical) {
    return -std::sqrt(2.0) * root * y * j1(root * y) / std::abs(j1(root));
  }
  if (y == 0.0) return 0.0;
  return std::sqrt(2.0) * (root * std::cos(root * y) - std::sin(root * y) / y);
}

void require_unit_interval(double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw DomainError("y must lie in [0, 1], got " + std::to_string(y));
}

}  // namespace

double basis_function(const Geometry& geometry, int k, double y) {
  require_unit_interval(y);
  if (y == 1.0) return 0.0;
  return mode_value(geometry, mode_root(geometry, k), y);
}

double basis_function_y_derivative(const Geometry& geometry, int k, double y) {
  require_unit_interval(y);
  return mode_y_derivative(geometry, mode_root(geometry, k), y);
}

QuadratureRule gauss_legendre_unit(int n) {
  if (n < 1) throw DomainError("quadrature order must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

namespace {

Eigen::MatrixXd coupling_with_rule(const Geometry& geometry, const std::vector<double>& roots,
                                   const QuadratureRule& rule) {
  const int m = static_cast<int>(roots.size());
  const int q = static_cast<int>(rule.nodes.size());
  Eigen::MatrixXd values(m, q);
  Eigen::MatrixXd generator(m, q);  // (y d/dy + xi) phi_k at the nodes
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < q; ++j) {
      const double y = rule.nodes[j];
      const double v = mode_value(geometry, roots[k], y);
      values(k, j) = v;
      generator(k, j) = mode_y_derivative(geometry, roots[k], y) + geometry.xi * v;
    }
  }
  Eigen::VectorXd w(q);
  for (int j = 0; j < q; ++j) w[j] = rule.weights[j] * std::pow(rule.nodes[j], geometry.n_d);
  return values * w.asDiagonal() * generator.transpose();
}

}  // namespace

Eigen::MatrixXd coupling_matrix(const Geometry& geometry, int size) {
  if (size < 2) throw DomainError("coupling matrix needs at least 2 levels");
  std::vector<double> roots(size);
  for (int k = 1; k <= size; ++k) roots[k - 1] = mode_root(geometry, k);

  int nodes = 256;
  Eigen::MatrixXd previous = coupling_with_rule(geometry, roots, gauss_legendre_unit(nodes));
  double change = 0.0;
  while (nodes < 16384) {
    nodes *= 2;
    Eigen::MatrixXd current = coupling_with_rule(geometry, roots, gauss_legendre_unit(nodes));
    change = (current - previous).cwiseAbs().maxCoeff();
    if (change < 1e-10) return current;
    previous = std::move(current);
  }
  throw NumericalError("coupling quadrature did not converge: last doubling changed entries by " +
                       std::to_string(change) + " at " + std::to_string(nodes) + " nodes");
}

double Basis::energy(int level) const {
  if (level < 1 || level > size()) throw DomainError("level " + std::to_string(level) + " outside basis");
  return energies[level - 1];
}

double Basis::coupling(int n, int k) const {
  if (n < 1 || n > size() || k < 1 || k > size()) throw DomainError("coupling index outside basis");
  return eta(n - 1, k - 1);
}

Basis make_basis(const Geometry& geometry, int size) {
  if (size < 2) throw DomainError("basis_size must be >= 2");
  Basis basis;
  basis.geometry = geometry;
  basis.roots.reserve(size);
  basis.energies.reserve(size);
  for (int k = 1; k <= size; ++k) {
    const double root = mode_root(geometry, k);
    basis.roots.push_back(root);
    basis.energies.push_back(0.5 * root * root);
  }
  basis.eta = coupling_matrix(geometry, size);
  return basis;
}

}  // namespace cavphase
