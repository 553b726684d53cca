#pragma once

// Whole-solution analysis over a grid of starting radii: sweeps, bisection
// for critical collision frequency / pulse amplitude, and decay-rate fits.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "coldplasma/criteria.hpp"

namespace coldplasma {

struct RGrid {
  double r_min = 0.001;
  double r_max = 3.0;
  double step = 0.005;

  void validate() const {
    if (!(r_min >= 0.0) || !(r_min < r_max) || !(step > 0.0)) {
      throw std::invalid_argument("RGrid: require 0 <= r_min < r_max and step > 0");
    }
    if ((r_max - r_min) / step > 1e6) throw std::invalid_argument("RGrid: more than 1e6 points");
  }

  std::vector<double> points() const {
    validate();
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((r_max - r_min) / step + 1e-9));
    out.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out.push_back(r_min + static_cast<double>(i) * step);
    return out;
  }
};

/// Parses "rmin:rmax:step".
inline RGrid parse_grid(const std::string& s) {
  RGrid g;
  const auto a = s.find(':');
  const auto b = a == std::string::npos ? a : s.find(':', a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw std::invalid_argument("grid must be 'rmin:rmax:step', got '" + s + "'");
  }
  try {
    std::size_t used = 0;
    const auto num = [&](const std::string& part) {
      const double v = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      return v;
    };
    g.r_min = num(s.substr(0, a));
    g.r_max = num(s.substr(a + 1, b - a - 1));
    g.step = num(s.substr(b + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("grid must be 'rmin:rmax:step', got '" + s + "'");
  }
  g.validate();
  return g;
}

/// Worker count: explicit value if positive, else $PLASMA_THREADS, else 1.
inline unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  if (const char* env = std::getenv("PLASMA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return 1;
}

/// Runs task(i) for i in [0, n) on `threads` workers. Results must be written
/// by index; scheduling order never affects them.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& task) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          task(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct SweepOptions {
  CriteriaOptions criteria{};
  int threads = 0;  // 0: PLASMA_THREADS or 1
};

enum class GlobalVerdict {
  all_smooth,
  blowup,
  undecided  // no zero of Q, but some characteristic is not certified smooth
};

inline std::string to_string(GlobalVerdict g) {
  switch (g) {
    case GlobalVerdict::all_smooth: return "all_smooth";
    case GlobalVerdict::blowup: return "blowup";
    case GlobalVerdict::undecided: return "undecided";
  }
  return "unknown";
}

struct SweepEntry {
  double r = 0.0;
  BlowupVerdict verdict;
};

struct SweepResult {
  ModelParams params;
  double horizon = 0.0;
  std::vector<SweepEntry> per_r;
  GlobalVerdict global = GlobalVerdict::all_smooth;
  double worst_r = kNaN;
  double worst_q_min = kNaN;
  double earliest_t_star = kNaN;
  std::size_t inconclusive = 0;
  std::vector<std::string> warnings;

  /// Predicate for critical searches: anything short of a smooth verdict on
  /// every characteristic (inconclusive ones included) counts as blow-up.
  bool blowup_predicate() const { return !(global == GlobalVerdict::all_smooth && inconclusive == 0); }
};

inline SweepResult sweep_r(const PulseProfile& profile, const RGrid& grid, const ModelParams& params,
                           double horizon, const SweepOptions& opts = {}) {
  params.validate();
  profile.validate_for(params.d);
  const auto radii = grid.points();

  SweepResult res;
  res.params = params;
  res.horizon = horizon;
  res.per_r.resize(radii.size());
  CriteriaOptions copts = opts.criteria;
  copts.control.sample_stride = 0;

  parallel_for(radii.size(), resolve_threads(opts.threads), [&](std::size_t i) {
    res.per_r[i].r = radii[i];
    res.per_r[i].verdict = simulate_characteristic(profile, radii[i], params, horizon, copts).verdict;
  });

  // Aggregate in index order.
  bool any_blowup = false;
  bool all_smooth = true;
  for (const auto& e : res.per_r) {
    const auto& v = e.verdict;
    if (v.status == VerdictStatus::inconclusive) {
      ++res.inconclusive;
      res.warnings.push_back("r = " + std::to_string(e.r) + ": inconclusive (" + v.reason + ")");
      continue;
    }
    if (v.is_blowup()) {
      if (!any_blowup || v.t_star < res.earliest_t_star) {
        res.earliest_t_star = v.t_star;
        res.worst_r = e.r;
        res.worst_q_min = v.q_min;
      }
      any_blowup = true;
      all_smooth = false;
      continue;
    }
    if (!v.counts_as_smooth) all_smooth = false;
    if (!any_blowup && (std::isnan(res.worst_q_min) || v.q_min < res.worst_q_min)) {
      res.worst_q_min = v.q_min;
      res.worst_r = e.r;
    }
  }
  res.global = any_blowup ? GlobalVerdict::blowup
                          : (all_smooth ? GlobalVerdict::all_smooth : GlobalVerdict::undecided);
  return res;
}

// ---------------------------------------------------------------------------
// Critical-parameter bisection

class SearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SearchTarget { critical_nu, critical_a };

inline std::string to_string(SearchTarget t) {
  return t == SearchTarget::critical_nu ? "critical_nu" : "critical_a";
}

struct Probe {
  double value = 0.0;
  bool blowup = false;
  GlobalVerdict global = GlobalVerdict::all_smooth;
  double worst_r = kNaN;
  double worst_q_min = kNaN;
  double earliest_t_star = kNaN;
};

struct CriticalSearch {
  SearchTarget target = SearchTarget::critical_nu;
  double fixed = 0.0;  // a for critical_nu, nu for critical_a
  std::pair<double, double> bracket{0.0, 0.0};  // final bracket
  double tol = 0.0;
  double result = kNaN;
  std::vector<Probe> history;  // in evaluation order
  // Sweep at the smooth end of the final bracket.
  double worst_r = kNaN;
  double worst_q_min = kNaN;
};

struct SearchOptions {
  SweepOptions sweep{};
  // Fixed horizon; unset uses default_horizon(nu) per probe.
  std::optional<double> horizon;
  double expand_cap = 64.0;  // critical_nu: upper bracket doubles up to this
};

namespace detail {

/// Checks that every blow-up probe lies on the expected side of every smooth
/// probe. blowup_below: blow-up for small parameter values (critical_nu).
inline void audit_monotone(const std::vector<Probe>& history, bool blowup_below) {
  for (const auto& b : history) {
    if (!b.blowup) continue;
    for (const auto& s : history) {
      if (s.blowup) continue;
      const bool violated = blowup_below ? b.value > s.value : b.value < s.value;
      if (violated) {
        throw SearchError("non-monotone predicate: blow-up at " + std::to_string(b.value) +
                          " but smooth at " + std::to_string(s.value));
      }
    }
  }
}

inline Probe probe_from(double value, const SweepResult& s) {
  return {value, s.blowup_predicate(), s.global, s.worst_r, s.worst_q_min, s.earliest_t_star};
}

}  // namespace detail

/// Smallest collision frequency for which the whole grid stays smooth.
/// Bisection on nu over the predicate "sweep reports blow-up".
inline CriticalSearch critical_nu(const PulseProfile& profile, int d, const RGrid& grid,
                                  std::pair<double, double> bracket, double tol,
                                  const SearchOptions& opts = {},
                                  const std::function<void(const Probe&)>& progress = {}) {
  CriticalSearch cs;
  cs.target = SearchTarget::critical_nu;
  cs.fixed = profile.is_gaussian() ? profile.amplitude() : kNaN;
  cs.tol = tol;
  auto [lo, hi] = bracket;
  if (!(lo >= 0.0 && lo < hi) || !(tol > 0.0)) throw std::invalid_argument("critical_nu: bad bracket or tol");

  std::optional<SweepResult> hi_sweep;
  const auto run = [&](double nu) {
    const double horizon = opts.horizon.value_or(default_horizon(nu));
    auto s = sweep_r(profile, grid, ModelParams{d, nu}, horizon, opts.sweep);
    cs.history.push_back(detail::probe_from(nu, s));
    if (progress) progress(cs.history.back());
    detail::audit_monotone(cs.history, true);
    return s;
  };

  if (!run(lo).blowup_predicate()) {
    throw SearchError("critical_nu: no blow-up at the lower bracket nu = " + std::to_string(lo));
  }
  for (;;) {
    auto s = run(hi);
    if (!s.blowup_predicate()) {
      hi_sweep = std::move(s);
      break;
    }
    lo = hi;
    if (hi * 2.0 > opts.expand_cap) {
      throw SearchError("critical_nu: still blowing up at nu = " + std::to_string(hi) +
                        " (expansion cap " + std::to_string(opts.expand_cap) + ")");
    }
    hi *= 2.0;
  }
  while (hi - lo >= tol) {
    const double mid = 0.5 * (lo + hi);
    auto s = run(mid);
    if (s.blowup_predicate()) {
      lo = mid;
    } else {
      hi = mid;
      hi_sweep = std::move(s);
    }
  }
  cs.bracket = {lo, hi};
  cs.result = 0.5 * (lo + hi);
  cs.worst_r = hi_sweep->worst_r;
  cs.worst_q_min = hi_sweep->worst_q_min;
  return cs;
}

/// Largest Gaussian amplitude in (0, 1/d) whose solution stays smooth.
inline CriticalSearch critical_a(double nu, int d, const RGrid& grid, std::pair<double, double> bracket,
                                 double tol, const SearchOptions& opts = {},
                                 const std::function<void(const Probe&)>& progress = {}) {
  CriticalSearch cs;
  cs.target = SearchTarget::critical_a;
  cs.fixed = nu;
  cs.tol = tol;
  auto [lo, hi] = bracket;
  if (!(lo > 0.0 && lo < hi && hi < 1.0 / d) || !(tol > 0.0)) {
    throw std::invalid_argument("critical_a: bracket must satisfy 0 < lo < hi < 1/d");
  }
  const double horizon = opts.horizon.value_or(default_horizon(nu));
  std::optional<SweepResult> lo_sweep;
  const auto run = [&](double a) {
    auto s = sweep_r(PulseProfile::gaussian(a), grid, ModelParams{d, nu}, horizon, opts.sweep);
    cs.history.push_back(detail::probe_from(a, s));
    if (progress) progress(cs.history.back());
    detail::audit_monotone(cs.history, false);
    return s;
  };

  {
    auto s = run(lo);
    if (s.blowup_predicate()) {
      throw SearchError("critical_a: blow-up already at the lower bracket a = " + std::to_string(lo));
    }
    lo_sweep = std::move(s);
  }
  if (!run(hi).blowup_predicate()) {
    throw SearchError("critical_a: no blow-up at the upper bracket a = " + std::to_string(hi));
  }
  while (hi - lo >= tol) {
    const double mid = 0.5 * (lo + hi);
    auto s = run(mid);
    if (s.blowup_predicate()) {
      hi = mid;
    } else {
      lo = mid;
      lo_sweep = std::move(s);
    }
  }
  cs.bracket = {lo, hi};
  cs.result = 0.5 * (lo + hi);
  cs.worst_r = lo_sweep->worst_r;
  cs.worst_q_min = lo_sweep->worst_q_min;
  return cs;
}

// ---------------------------------------------------------------------------
// Decay rates

/// Least-squares decay rate of `values` over the trailing window_fraction of
/// the time span. Returns +inf when every value in the window is below 1e-14.
inline double decay_rate(std::span<const double> times, std::span<const double> values,
                         double window_fraction = 0.5) {
  if (times.size() != values.size() || times.empty()) throw std::invalid_argument("decay_rate: size mismatch");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw std::invalid_argument("decay_rate: window_fraction must be in (0, 1]");
  }
  const double t_start = times.back() - window_fraction * (times.back() - times.front());
  std::vector<double> ts, ls;
  bool any_above = false;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_start) continue;
    if (values[i] >= 1e-14) any_above = true;
    if (values[i] > 0.0) {
      ts.push_back(times[i]);
      ls.push_back(std::log(values[i]));
    }
  }
  if (!any_above) return std::numeric_limits<double>::infinity();
  if (ts.size() < 20) throw std::invalid_argument("decay_rate: fewer than 20 samples in the window");
  const double n = static_cast<double>(ts.size());
  double st = 0, sl = 0, stt = 0, stl = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += ls[i];
    stt += ts[i] * ts[i];
    stl += ts[i] * ls[i];
  }
  const double slope = (n * stl - st * sl) / (n * stt - st * st);
  return -slope;
}

/// Decay rate of |(F, G)| along a characteristic trajectory.
inline double decay_rate(const CharacteristicTrajectory& tr, double window_fraction = 0.5) {
  std::vector<double> ts, ns;
  ts.reserve(tr.samples.size());
  ns.reserve(tr.samples.size());
  for (const auto& s : tr.samples) {
    ts.push_back(s.t);
    ns.push_back(std::hypot(s.y[0], s.y[1]));
  }
  return decay_rate(ts, ns, window_fraction);
}

// ---------------------------------------------------------------------------
// Large-friction schedule

struct ScheduleEntry {
  double nu = 0.0;
  GlobalVerdict global = GlobalVerdict::all_smooth;
  bool smooth = false;
  double worst_r = kNaN;
  double worst_q_min = kNaN;
};

struct Theorem3Result {
  std::optional<double> nu_found;  // first schedule entry with an all-smooth sweep
  std::vector<ScheduleEntry> entries;
  std::string finding;
};

inline Theorem3Result verify_theorem_3(const PulseProfile& profile, int d, const RGrid& grid,
                                       const std::vector<double>& schedule, const SearchOptions& opts = {}) {
  if (schedule.empty()) throw std::invalid_argument("verify_theorem_3: empty schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (!(schedule[i] > schedule[i - 1])) throw std::invalid_argument("verify_theorem_3: schedule must increase");
  }
  Theorem3Result out;
  for (double nu : schedule) {
    const double horizon = opts.horizon.value_or(default_horizon(nu));
    const auto s = sweep_r(profile, grid, ModelParams{d, nu}, horizon, opts.sweep);
    out.entries.push_back({nu, s.global, !s.blowup_predicate(), s.worst_r, s.worst_q_min});
    if (!s.blowup_predicate()) {
      out.nu_found = nu;
      out.finding = "smooth on the whole grid";
      return out;
    }
  }
  out.finding = "no schedule entry up to nu = " + std::to_string(schedule.back()) + " was smooth on the whole grid";
  return out;
}

inline std::vector<double> default_theorem3_schedule() { return {0.5, 1, 2, 4, 8, 16, 32, 64}; }

}  // namespace coldplasma
