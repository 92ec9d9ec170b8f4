#pragma once

// Dimensionless model of a particle in a hard-walled cavity whose radius
// oscillates as R(t) = R0 (1 + eps sin(omega t)). Units: hbar = mu = R0 = 1.
//
// After the change of variables y = alpha(t) r the wall sits at y = 1 and the
// radial equation is expanded in the static eigenmodes phi_k(y) of the well,
// normalized under the measure y^{n_d} dy on [0, 1].

#include <Eigen/Dense>

#include <string_view>
#include <vector>

namespace cavphase {

enum class GeometryKind { Cylindrical, Spherical };

struct Geometry {
  GeometryKind kind = GeometryKind::Cylindrical;
  double xi = 1.0;  // wavefunction rescaling exponent
  int n_d = 1;      // coefficient of the first-derivative radial term
  int m_d = 0;      // angular sector; only m_d = 0 is modelled

  static Geometry cylindrical() { return {GeometryKind::Cylindrical, 1.0, 1, 0}; }
  static Geometry spherical() { return {GeometryKind::Spherical, 1.5, 2, 0}; }
  static Geometry of(GeometryKind kind);

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

std::string_view to_string(GeometryKind kind);
GeometryKind geometry_kind_from_string(std::string_view name);

struct CavityConfig {
  Geometry geometry = Geometry::cylindrical();
  double epsilon = 0.01;  // drive amplitude, 0 <= eps < 1
  double omega = 12.344;  // drive frequency in units of hbar / (mu R0^2)
  int basis_size = 16;

  /// Throws DomainError if any invariant is violated.
  void validate() const;
  double period() const;  // tau = 2 pi / omega

  friend bool operator==(const CavityConfig&, const CavityConfig&) = default;
};

/// alpha(t) = 1 / (1 + eps sin(omega t)).
double alpha_at(double t, const CavityConfig& cfg);

/// dR/dt / R = eps omega cos(omega t) / (1 + eps sin(omega t)).
double wall_log_derivative(double t, const CavityConfig& cfg);

/// s(t) = \int_0^t alpha(t')^2 dt', in closed form. The free phase of mode m
/// is exp(-i E_m s(t)).
double alpha_sq_integral(double t, const CavityConfig& cfg);

/// Period average of alpha^2, equal to (1 - eps^2)^{-3/2}.
double mean_alpha_sq(double epsilon);

/// k-th positive zero of J_0 (k >= 1), bracketed between consecutive extrema
/// of J_0 and polished with a safeguarded Newton iteration.
double bessel_j0_zero(int k);

/// Unperturbed eigenvalue E_k = root_k^2 / 2 of the static well.
double eigenenergy(const Geometry& geometry, int k);

/// Wavenumber of mode k: j_{0,k} (cylindrical) or k pi (spherical).
double mode_root(const Geometry& geometry, int k);

/// Normalized eigenmode phi_k(y) on [0, 1]; phi_k(0) > 0 and phi_k(1) = 0.
double basis_function(const Geometry& geometry, int k, double y);

/// y * dphi_k/dy, finite at y = 0 for both geometries.
double basis_function_y_derivative(const Geometry& geometry, int k, double y);

/// Gauss-Legendre nodes and weights mapped to [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre_unit(int n);

/// eta_{nk} = <phi_n | (y d/dy + xi) | phi_k>, real and antisymmetric.
/// Entry (n-1, k-1) holds eta_{nk}. Gauss-Legendre with node doubling from
/// 256 until consecutive results agree to 1e-10; NumericalError otherwise.
Eigen::MatrixXd coupling_matrix(const Geometry& geometry, int size);

struct Basis {
  Geometry geometry;
  std::vector<double> energies;  // ascending, index 0 = level 1
  std::vector<double> roots;
  Eigen::MatrixXd eta;

  int size() const { return static_cast<int>(energies.size()); }
  /// 1-based accessors.
  double energy(int level) const;
  double coupling(int n, int k) const;
  double transition_frequency(int n, int k) const { return energy(n) - energy(k); }
};

/// Builds energies, roots and the coupling matrix for M levels (M >= 2).
Basis make_basis(const Geometry& geometry, int size);

}  // namespace cavphase
