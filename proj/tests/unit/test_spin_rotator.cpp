#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "cavphase/errors.hpp"
#include "cavphase/phase_engine.hpp"
#include "cavphase/spin_rotator.hpp"

using namespace cavphase;
constexpr double pi = std::numbers::pi;

TEST_CASE("eigenspinors of H(t)") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (double a : {0.01, 0.4, 1.1, 2.5}) {
    const auto cfg = SpinConfig::resonant(a, 1.3);
    for (int i = 0; i < 10; ++i) {
      const double t = u(rng);
      const auto h = spin_hamiltonian(t, cfg);
      const auto p = psi_plus(t, cfg);
      const auto m = psi_minus(t, cfg);
      const Eigen::Vector2cd vp(p[0], p[1]), vm(m[0], m[1]);
      CHECK((h * vp + 0.5 * cfg.omega1 * vp).norm() < 1e-14);
      CHECK((h * vm - 0.5 * cfg.omega1 * vm).norm() < 1e-14);
    }
  }
}

TEST_CASE("closed-form spinor") {
  const auto cfg = SpinConfig::resonant(0.3, 1.0);
  const auto s0 = spin_state(0.0, cfg);
  const auto p0 = psi_plus(0.0, cfg);
  CHECK(std::abs(s0[0] - p0[0]) < 1e-15);
  CHECK(std::abs(s0[1] - p0[1]) < 1e-15);
  const double half = pi / cfg.lambda();
  const auto sh = spin_state(half, cfg);
  const auto ph = psi_plus(half, cfg);
  CHECK(std::abs(std::conj(ph[0]) * sh[0] + std::conj(ph[1]) * sh[1]) < 1e-14);
  for (double t = 0.0; t < 100.0; t += 1.37) {
    const auto s = spin_state(t, cfg);
    CHECK(std::norm(s[0]) + std::norm(s[1]) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("closed forms agree with the integrated spinor") {
  for (double a : {0.01, 1.0 / 101.0, 0.3, 0.7}) {
    const auto cfg = SpinConfig::resonant(a, 1.0);
    const int periods = std::min(250, static_cast<int>(std::ceil(2.0 * cfg.rabi_period() / cfg.period())));
    const auto num = spin_numeric_trajectory(cfg, periods, 64);
    const auto ph = analyze_phases(num, 0.0);
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t q = 0; q < ph.beta0.size(); ++q)
      d0 = std::max(d0, std::abs(wrap_phase(ph.beta0[q].value - spin_beta0(static_cast<int>(q), cfg))));
    for (std::size_t q = 0; q < ph.beta1.size(); ++q)
      d1 = std::max(d1, std::abs(wrap_phase(ph.beta1[q].value - spin_beta1(q * cfg.period(), cfg).value)));
    CHECK(d0 < 1e-6);
    CHECK(d1 < 1e-6);
  }
}

TEST_CASE("spin beta1 boundary and small-alpha form") {
  const auto boundary = SpinConfig::resonant(pi / 6.0, 1.0);
  CHECK(spin_beta1(0.0, boundary).boundary);
  const auto small = SpinConfig::resonant(0.005, 1.0);
  for (int q = 0; q < 400; q += 13) {
    const double t1 = q * small.period();
    CHECK(std::abs(wrap_phase(spin_beta1(t1, small).value - spin_beta1_small_alpha(t1, small))) < 0.05);
  }
}

TEST_CASE("solid angle") {
  const double a = std::asin(0.5);
  CHECK(solid_angle(1, SpinConfig::resonant(a, 1.0)) == doctest::Approx(2.0 * pi));
  // tiny cone: (2 q pi)^3 sin^2(a) / 6
  const auto tiny = SpinConfig::resonant(1e-4, 1.0);
  const double s = std::sin(1e-4);
  CHECK(solid_angle(3, tiny) == doctest::Approx(std::pow(6.0 * pi, 3) * s * s / 6.0).epsilon(1e-6));
  CHECK_THROWS_AS(solid_angle(0, tiny), DomainError);
  CHECK(berry_limit(0.0) == doctest::Approx(0.0));
  CHECK(berry_limit(pi / 2.0) == doctest::Approx(2.0 * pi));
  CHECK(berry_limit(pi) == doctest::Approx(4.0 * pi));
}

TEST_CASE("spin config validation") {
  SpinConfig c = SpinConfig::resonant(0.2, 1.0);
  c.omega1 = 0.3;
  CHECK_THROWS_AS(c.validate(), DomainError);
  CHECK_THROWS_AS(SpinConfig::resonant(pi / 2.0, 1.0).validate(), DomainError);
}
