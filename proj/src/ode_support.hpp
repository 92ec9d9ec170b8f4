#pragma once

// Thin adapters over boost::numeric::odeint for complex-valued linear systems.

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "cavphase/errors.hpp"

namespace cavphase::detail {

using cvec = std::vector<std::complex<double>>;
namespace odeint = boost::numeric::odeint;

enum class Scheme { DormandPrince5, Fehlberg78 };

/// Steps `state` through every time in `times` (which must start at the
/// current time of `state`), calling observe(state, t) at each of them.
/// Failures are rethrown as IntegrationError with the last observed time.
/// max_step > 0 caps the step size.
template <class System, class Observer>
void integrate_at(Scheme scheme, System&& system, cvec& state, std::span<const double> times, double tolerance,
                  Observer&& observe, double first_step, double max_step = 0.0) {
  double last_time = times.empty() ? 0.0 : times.front();
  auto tracking = [&](const cvec& x, double t) {
    last_time = t;
    observe(x, t);
  };
  try {
    const auto checker = odeint::max_step_checker(5'000'000);
    if (scheme == Scheme::DormandPrince5) {
      auto stepper = max_step > 0.0
                         ? odeint::make_controlled(tolerance, tolerance, max_step, odeint::runge_kutta_dopri5<cvec>())
                         : odeint::make_controlled(tolerance, tolerance, odeint::runge_kutta_dopri5<cvec>());
      odeint::integrate_times(stepper, system, state, times.begin(), times.end(), first_step, tracking, checker);
    } else {
      auto stepper = max_step > 0.0
                         ? odeint::make_controlled(tolerance, tolerance, max_step, odeint::runge_kutta_fehlberg78<cvec>())
                         : odeint::make_controlled(tolerance, tolerance, odeint::runge_kutta_fehlberg78<cvec>());
      odeint::integrate_times(stepper, system, state, times.begin(), times.end(), first_step, tracking, checker);
    }
  } catch (const odeint::step_adjustment_error& e) {
    throw IntegrationError(std::string("step size underflow: ") + e.what(), last_time);
  } catch (const odeint::no_progress_error& e) {
    throw IntegrationError(std::string("step budget exhausted between samples: ") + e.what(), last_time);
  } catch (const odeint::odeint_error& e) {
    throw IntegrationError(std::string("integration failed: ") + e.what(), last_time);
  }
}

}  // namespace cavphase::detail
