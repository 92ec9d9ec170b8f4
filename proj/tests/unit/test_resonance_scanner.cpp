#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cavphase/errors.hpp"
#include "cavphase/resonance_scanner.hpp"

using namespace cavphase;
constexpr double pi = std::numbers::pi;

TEST_CASE("Lorentzian fit recovers its own model") {
  std::vector<double> x, y;
  for (int i = 0; i < 21; ++i) {
    const double w = 3.0 + 0.004 * (i - 10);
    const double u = (w - 3.0011) / 0.0065;
    x.push_back(w);
    y.push_back(0.87 / (1.0 + u * u));
  }
  const auto fit = fit_lorentzian(x, y, 3.0, 0.02, 1.0);
  CHECK(std::abs(fit.center - 3.0011) < 1e-8);
  CHECK(std::abs(fit.fwhm - 0.013) < 1e-8);
  CHECK(std::abs(fit.amplitude - 0.87) < 1e-8);
  CHECK(fit.residual < 1e-10);
  CHECK_THROWS_AS(fit_lorentzian(std::span(x).first(5), std::span(y).first(5), 3.0, 0.02), InputError);
}

TEST_CASE("Rabi period from a synthetic envelope") {
  // E alpha^-2 = E_k cos^2(chi t) + E_n sin^2(chi t), sampled with a fast ripple.
  const double chi = 0.021, Ek = 2.9, En = 15.2, omega = 12.3;
  const int spp = 50;
  const double dt = 2.0 * pi / omega / spp;
  std::vector<double> e, a2;
  for (int i = 0; i < static_cast<int>(2.4 * pi / chi / dt); ++i) {
    const double t = i * dt;
    const double alpha2 = std::pow(1.0 / (1.0 + 0.01 * std::sin(omega * t)), 2);
    const double c = std::cos(chi * t), s = std::sin(chi * t);
    e.push_back(alpha2 * (Ek * c * c + En * s * s) + 0.01 * std::cos(omega * t));
    a2.push_back(alpha2);
  }
  CHECK(rabi_period(e, a2, dt, spp, Ek) == doctest::Approx(pi / chi).epsilon(1e-3));
  CHECK_THROWS_AS(rabi_period(std::span(e).first(400), std::span(a2).first(400), dt, spp, Ek), InputError);
}

TEST_CASE("predicted peaks and assignment") {
  CavityConfig cfg;
  const auto basis = make_basis(cfg.geometry, 8);
  RunPolicy policy;
  const auto peaks = predicted_peaks(cfg, basis, 10.0, 70.0, policy);
  bool has = false;
  for (const auto& p : peaks) has |= (p.n == 2 && p.N == 1 && std::abs(p.omega - 12.3459) < 1e-3);
  CHECK(has);
  const auto a = assign_peak(12.35, peaks, policy);
  CHECK(a.peak.n == 2);
  CHECK(a.peak.N == 1);
  CHECK(a.near_peak);
  const auto grid = build_grid(cfg, basis, 10.0, 70.0, 0.5, policy);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  CHECK(grid.front() == 10.0);
  CHECK(grid.back() == 70.0);
}

TEST_CASE("scan peaks at the fundamental resonance and is deterministic") {
  CavityConfig cfg;
  cfg.basis_size = 8;
  const auto basis = make_basis(cfg.geometry, 8);
  RunPolicy policy;
  policy.max_order = 1;
  policy.steps_per_period = 64;
  std::vector<double> grid;
  for (int i = 0; i <= 16; ++i) grid.push_back(11.9 + 0.06 * i);
  auto csv = [&](int workers) {
    policy.workers = workers;
    std::ostringstream out;
    write_scan_csv(out, scan(cfg, basis, grid, policy), "h");
    return out.str();
  };
  const auto one = csv(1);
  CHECK(one == csv(3));
  policy.workers = 1;
  const auto result = scan(cfg, basis, grid, policy);
  const auto peaks = find_peaks(result);
  REQUIRE(peaks.size() == 1);
  CHECK(peaks[0].omega == doctest::Approx(12.345).epsilon(2e-3));
  CHECK(peaks[0].value == doctest::Approx(1.0).epsilon(0.05));
  for (const auto& p : result.points) {
    CHECK(p.error.empty());
    CHECK(p.scaled >= -1e-3);
    CHECK(p.scaled <= 1.05);
  }
}

TEST_CASE("far from every resonance the scaled response is small") {
  CavityConfig cfg;
  const auto basis = make_basis(cfg.geometry, 8);
  RunPolicy policy;
  policy.steps_per_period = 64;
  const std::vector<double> grid{26.0, 28.0};
  for (const auto& p : scan(cfg, basis, grid, policy).points) CHECK(p.scaled < 0.01);
}

TEST_CASE("parallel_for visits every index and forwards errors") {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw NumericalError("x"); }), NumericalError);
}
