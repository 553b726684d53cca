#pragma once

// Adaptive Runge-Kutta-Fehlberg 4(5) integration with scalar event location.
//
// The integrator is generic over the state container: any std::array<double, N>
// or std::vector<double>. Fixed-size states get their dimension checked at
// compile time; dynamic states are checked against OdeSystem::dimension.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coldplasma {

template <class State>
concept OdeState = requires(State s, const State cs, std::size_t i) {
  { s[i] } -> std::convertible_to<double&>;
  { cs.size() } -> std::convertible_to<std::size_t>;
};

template <OdeState State>
struct OdeSystem {
  std::size_t dimension = 0;
  std::function<State(double, const State&)> rhs;
};

struct StepControl {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double h_init = 1e-3;
  double h_min = 1e-12;
  double h_max = 0.1;
  std::size_t max_steps = 10'000'000;
  // Keep every n-th accepted step in Trajectory::samples; 0 keeps only the
  // endpoints. The observer (if any) still sees every accepted step.
  std::size_t sample_stride = 1;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
      throw std::invalid_argument("StepControl: tolerances must be positive");
    }
    if (!(h_min > 0.0) || !(h_min <= h_init) || !(h_init <= h_max)) {
      throw std::invalid_argument("StepControl: require 0 < h_min <= h_init <= h_max");
    }
    if (max_steps == 0) {
      throw std::invalid_argument("StepControl: max_steps must be positive");
    }
  }
};

enum class EventDirection { any, decreasing, increasing };

template <OdeState State>
struct EventSpec {
  std::function<double(double, const State&)> fn;
  EventDirection direction = EventDirection::any;
  double time_tol = 1e-9;
};

enum class TerminalStatus {
  reached_horizon,
  event_fired,
  step_failure,
  step_limit,
  stopped_by_observer
};

inline std::string to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::reached_horizon: return "reached_horizon";
    case TerminalStatus::event_fired: return "event_fired";
    case TerminalStatus::step_failure: return "step_failure";
    case TerminalStatus::step_limit: return "step_limit";
    case TerminalStatus::stopped_by_observer: return "stopped_by_observer";
  }
  return "unknown";
}

template <OdeState State>
struct Sample {
  double t;
  State y;
};

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
};

template <OdeState State>
struct Trajectory {
  std::vector<Sample<State>> samples;
  TerminalStatus status = TerminalStatus::reached_horizon;
  // Set when status == event_fired.
  std::size_t event_index = 0;
  double event_time = std::numeric_limits<double>::quiet_NaN();
  // Time and state reached before the controller gave up (step_failure,
  // step_limit) or where the run ended otherwise.
  double final_time = 0.0;
  State final_state{};
  StepStats stats;

  bool event_fired() const { return status == TerminalStatus::event_fired; }
};

template <OdeState State>
struct StepResult {
  State y4;
  State y5;
  double error_estimate;
};

// Returning false from the observer ends the run with stopped_by_observer.
template <OdeState State>
using StepObserver = std::function<bool(double, const State&)>;

namespace detail {

// Classical Fehlberg 4(5) tableau.
struct Fehlberg {
  static constexpr double c2 = 1.0 / 4.0, c3 = 3.0 / 8.0, c4 = 12.0 / 13.0, c5 = 1.0, c6 = 1.0 / 2.0;

  static constexpr double a21 = 1.0 / 4.0;
  static constexpr double a31 = 3.0 / 32.0, a32 = 9.0 / 32.0;
  static constexpr double a41 = 1932.0 / 2197.0, a42 = -7200.0 / 2197.0, a43 = 7296.0 / 2197.0;
  static constexpr double a51 = 439.0 / 216.0, a52 = -8.0, a53 = 3680.0 / 513.0, a54 = -845.0 / 4104.0;
  static constexpr double a61 = -8.0 / 27.0, a62 = 2.0, a63 = -3544.0 / 2565.0, a64 = 1859.0 / 4104.0,
                          a65 = -11.0 / 40.0;

  static constexpr double b4_1 = 25.0 / 216.0, b4_3 = 1408.0 / 2565.0, b4_4 = 2197.0 / 4104.0,
                          b4_5 = -1.0 / 5.0;
  static constexpr double b5_1 = 16.0 / 135.0, b5_3 = 6656.0 / 12825.0, b5_4 = 28561.0 / 56430.0,
                          b5_5 = -9.0 / 50.0, b5_6 = 2.0 / 55.0;
};

template <OdeState State>
bool all_finite(const State& y) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) return false;
  }
  return true;
}

template <OdeState State>
void check_dimension(const OdeSystem<State>& system, const State& y0) {
  if (y0.size() != system.dimension) {
    throw std::invalid_argument("integrate: state dimension " + std::to_string(y0.size()) +
                                " does not match system dimension " +
                                std::to_string(system.dimension));
  }
  if (!system.rhs) throw std::invalid_argument("integrate: system has no right-hand side");
}

inline bool crossed(double g0, double g1, EventDirection dir) {
  switch (dir) {
    case EventDirection::decreasing: return g0 > 0.0 && g1 <= 0.0;
    case EventDirection::increasing: return g0 < 0.0 && g1 >= 0.0;
    case EventDirection::any: return (g0 > 0.0 && g1 <= 0.0) || (g0 < 0.0 && g1 >= 0.0);
  }
  return false;
}

}  // namespace detail

/// One Fehlberg 4(5) step of size h from (t, y). The error estimate is the
/// scaled RMS of y5 - y4 with per-component scale abs_tol + rel_tol * max(|y|, |y5|);
/// it is +inf when the right-hand side produced non-finite values.
template <OdeState State>
StepResult<State> step(const OdeSystem<State>& system, double t, const State& y, double h,
                       double rel_tol = 1e-9, double abs_tol = 1e-12,
                       StepStats* stats = nullptr) {
  if (!(h > 0.0)) throw std::invalid_argument("step: h must be positive");
  using T = detail::Fehlberg;
  const std::size_t n = y.size();
  State tmp = y;

  const State k1 = system.rhs(t, y);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * T::a21 * k1[i];
  const State k2 = system.rhs(t + T::c2 * h, tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (T::a31 * k1[i] + T::a32 * k2[i]);
  const State k3 = system.rhs(t + T::c3 * h, tmp);
  for (std::size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
  const State k4 = system.rhs(t + T::c4 * h, tmp);
  for (std::size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i]);
  const State k5 = system.rhs(t + T::c5 * h, tmp);
  for (std::size_t i = 0; i < n; ++i)
    tmp[i] = y[i] + h * (T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] + T::a64 * k4[i] +
                         T::a65 * k5[i]);
  const State k6 = system.rhs(t + T::c6 * h, tmp);
  if (stats) stats->rhs_evaluations += 6;

  StepResult<State> out{y, y, 0.0};
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.y4[i] = y[i] + h * (T::b4_1 * k1[i] + T::b4_3 * k3[i] + T::b4_4 * k4[i] + T::b4_5 * k5[i]);
    out.y5[i] = y[i] + h * (T::b5_1 * k1[i] + T::b5_3 * k3[i] + T::b5_4 * k4[i] +
                            T::b5_5 * k5[i] + T::b5_6 * k6[i]);
    const double scale = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(out.y5[i]));
    const double e = (out.y5[i] - out.y4[i]) / scale;
    sum_sq += e * e;
  }
  out.error_estimate = n == 0 ? 0.0 : std::sqrt(sum_sq / static_cast<double>(n));
  if (!std::isfinite(out.error_estimate) || !detail::all_finite(out.y5)) {
    out.error_estimate = std::numeric_limits<double>::infinity();
  }
  return out;
}

/// Integrates system from y0 over t_span, advancing with the 5th-order
/// solution (local extrapolation). Events are checked on every accepted step;
/// the first one whose sign change matches its direction is refined by
/// bisecting the step length and re-stepping from the bracketing left point,
/// and integration stops at the right end of the final bracket.
template <OdeState State>
Trajectory<State> integrate(const OdeSystem<State>& system, const State& y0,
                            std::pair<double, double> t_span, const StepControl& control = {},
                            const std::vector<EventSpec<State>>& events = {},
                            const StepObserver<State>& observer = {}) {
  detail::check_dimension(system, y0);
  control.validate();
  const auto [t0, t1] = t_span;
  if (!(t0 < t1)) throw std::invalid_argument("integrate: require t0 < t1");

  constexpr double safety = 0.9;
  constexpr double shrink_limit = 0.2;
  constexpr double grow_limit = 5.0;

  Trajectory<State> traj;
  traj.samples.push_back({t0, y0});

  double t = t0;
  State y = y0;
  double h = std::min(control.h_init, t1 - t0);
  std::vector<double> g_prev(events.size());
  for (std::size_t k = 0; k < events.size(); ++k) g_prev[k] = events[k].fn(t, y);

  const auto finish = [&](TerminalStatus status) {
    traj.status = status;
    traj.final_time = t;
    traj.final_state = y;
    if (traj.samples.back().t != t) traj.samples.push_back({t, y});
    return std::move(traj);
  };

  if (observer && !observer(t, y)) return finish(TerminalStatus::stopped_by_observer);

  while (t < t1) {
    if (traj.stats.accepted >= control.max_steps) return finish(TerminalStatus::step_limit);

    const bool last = t + h >= t1;
    const double h_try = last ? t1 - t : h;
    const auto res = step(system, t, y, h_try, control.rel_tol, control.abs_tol, &traj.stats);
    const double err = res.error_estimate;

    if (!(err <= 1.0)) {
      ++traj.stats.rejected;
      const double factor =
          std::isfinite(err) ? std::max(shrink_limit, safety * std::pow(err, -0.2)) : shrink_limit;
      h = h_try * factor;
      if (h < control.h_min) return finish(TerminalStatus::step_failure);
      continue;
    }

    const double t_new = last ? t1 : t + h_try;
    const State& y_new = res.y5;

    // Event detection on the accepted step.
    for (std::size_t k = 0; k < events.size(); ++k) {
      const double g_new = events[k].fn(t_new, y_new);
      if (!detail::crossed(g_prev[k], g_new, events[k].direction)) {
        g_prev[k] = g_new;
        continue;
      }
      double lo = 0.0;
      double hi = h_try;
      State y_hi = y_new;
      const double g_lo = g_prev[k];
      while (hi - lo > events[k].time_tol) {
        const double mid = 0.5 * (lo + hi);
        const auto sub = step(system, t, y, mid, control.rel_tol, control.abs_tol, &traj.stats);
        const double g_mid = events[k].fn(t + mid, sub.y5);
        if (detail::crossed(g_lo, g_mid, events[k].direction)) {
          hi = mid;
          y_hi = sub.y5;
        } else {
          lo = mid;
        }
      }
      ++traj.stats.accepted;
      t = t + hi;
      y = y_hi;
      traj.event_index = k;
      traj.event_time = t;
      if (observer) observer(t, y);
      return finish(TerminalStatus::event_fired);
    }

    t = t_new;
    y = y_new;
    ++traj.stats.accepted;
    if (control.sample_stride > 0 && traj.stats.accepted % control.sample_stride == 0) {
      traj.samples.push_back({t, y});
    }
    if (observer && !observer(t, y)) return finish(TerminalStatus::stopped_by_observer);

    const double factor = err == 0.0 ? grow_limit
                                     : std::clamp(safety * std::pow(err, -0.2), shrink_limit,
                                                  grow_limit);
    if (!last) h = std::min(control.h_max, std::max(h_try * factor, control.h_min));
  }
  return finish(TerminalStatus::reached_horizon);
}

}  // namespace coldplasma
