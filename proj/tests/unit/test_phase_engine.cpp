#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "cavphase/errors.hpp"
#include "cavphase/phase_engine.hpp"
#include "cavphase/tdse_evolver.hpp"

using namespace cavphase;
constexpr double pi = std::numbers::pi;

namespace {

// Two-level trajectory with constant energy 0 and a prescribed geometric
// rotation: psi(t) = (cos(a t), e^{i b t} sin(a t)).
Trajectory synthetic(double a, double b, int spp, int periods, double period) {
  Trajectory tr;
  tr.samples_per_period = spp;
  tr.dt = period / spp;
  for (int i = 0; i <= spp * periods; ++i) {
    const double t = i * tr.dt;
    tr.times.push_back(t);
    tr.energies.push_back(0.0);
    tr.norms.push_back(1.0);
    tr.states.push_back({t, {std::cos(a * t), std::polar(std::sin(a * t), b * t)}});
  }
  return tr;
}

}  // namespace

TEST_CASE("wrap_phase") {
  CHECK(wrap_phase(pi) == doctest::Approx(pi));
  CHECK(wrap_phase(-pi) == doctest::Approx(pi));
  CHECK(wrap_phase(3.0 * pi + 0.1) == doctest::Approx(-pi + 0.1));
  CHECK(wrap_phase(0.25) == doctest::Approx(0.25));
}

TEST_CASE("dynamical phase integrates polynomials exactly") {
  Trajectory tr;
  tr.dt = 0.01;
  for (int i = 0; i <= 101; ++i) {
    const double t = i * tr.dt;
    tr.times.push_back(t);
    tr.energies.push_back(3.0 * t * t + 1.0);
  }
  const auto theta = dynamical_phase(tr);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double t = tr.times[i];
    CHECK(theta[i] == doctest::Approx(-(t * t * t + t)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("pancharatnam phase of a known curve") {
  // With zero energy beta(0, t) = arg <psi(0)|psi(t)> = arg cos(a t).
  const auto tr = synthetic(0.3, 1.7, 20, 5, 1.0);
  for (std::size_t i = 0; i < tr.size(); i += 7) {
    const double t = tr.times[i];
    const double expect = std::cos(0.3 * t) >= 0.0 ? 0.0 : pi;
    CHECK(std::abs(wrap_phase(pancharatnam(tr, 0.0, t) - expect)) < 1e-12);
  }
}

TEST_CASE("gauge invariance under smooth phase redefinitions") {
  const auto tr = synthetic(0.41, 2.3, 32, 12, 0.7);
  const auto theta = dynamical_phase(tr);
  std::mt19937 rng(20261016);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double c0 = u(rng), c1 = u(rng), c2 = u(rng), c3 = u(rng);
    const auto gamma = [&](double t) { return c0 + c1 * t + c2 * std::sin(c3 * t); };
    Trajectory g = tr;
    for (auto& s : g.states) {
      for (auto& c : s.coeffs) c *= std::polar(1.0, gamma(s.t));
    }
    // The regauged state obeys H - gamma', so theta picks up gamma(t) - gamma(0).
    auto g_theta = theta;
    for (std::size_t i = 0; i < g_theta.size(); ++i) g_theta[i] += gamma(tr.times[i]) - gamma(0.0);
    const auto b0 = beta0_series(tr, theta);
    const auto g0 = beta0_series(g, g_theta);
    const auto b1 = beta1_series(tr, theta, false);
    const auto g1 = beta1_series(g, g_theta, false);
    for (std::size_t q = 0; q < b0.size(); ++q) CHECK(std::abs(wrap_phase(b0[q].value - g0[q].value)) < 1e-10);
    for (std::size_t q = 0; q < b1.size(); ++q) CHECK(std::abs(wrap_phase(b1[q].value - g1[q].value)) < 1e-10);
  }
}

TEST_CASE("orthogonal states are reported") {
  // a t = pi/2 at t = 2.5: the state is orthogonal to psi(0).
  const auto tr = synthetic(pi / 5.0, 0.0, 10, 3, 1.0);
  CHECK_THROWS_AS(pancharatnam(tr, 0.0, 2.5), OrthogonalStatesError);
  CHECK_THROWS_AS(pancharatnam(tr, 0.0, 0.05), InputError);
}

TEST_CASE("unwrap and amplitude") {
  std::vector<PhasePoint> s;
  for (int i = 0; i < 50; ++i) s.push_back({double(i), wrap_phase(0.3 * i)});
  const auto u = unwrap(s);
  CHECK(u.back().value == doctest::Approx(0.3 * 49));
  CHECK(oscillation_amplitude(u) == doctest::Approx(0.3 * 49));
}

TEST_CASE("pi-jump detector on a synthetic series") {
  // Smooth drift plus a pi step at t = 50 with period-100 background.
  std::vector<PhasePoint> s;
  for (int q = 0; q <= 200; ++q) {
    double v = 0.02 * q + 0.1 * std::sin(2.0 * pi * q / 100.0);
    if (q > 50) v += pi;
    if (q > 150) v += pi;
    s.push_back({double(q), wrap_phase(v)});
  }
  const auto jumps = detect_pi_jumps(s, 100.0);
  REQUIRE(jumps.size() == 2);
  CHECK(jumps[0].t_over_T == doctest::Approx(0.505));
  CHECK(std::abs(std::abs(jumps[0].magnitude) - pi) < 1e-6);
  CHECK(jumps[1].t_over_T == doctest::Approx(1.505));
  CHECK_THROWS_AS(detect_pi_jumps(s, 0.0), InputError);
}
