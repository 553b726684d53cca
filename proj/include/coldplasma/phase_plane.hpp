#pragma once

// Phase-plane geometry of the (F, G) system: the frictionless first integral,
// its Lyapunov derivative under friction, equilibria, and the extent of the
// closed level curve through a given point.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coldplasma/model.hpp"

namespace coldplasma {

class BracketingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_subcritical(double G, int d, const char* what) {
  if (!(G < 1.0 / d)) {
    throw std::domain_error(std::string(what) + ": requires G < 1/d (got G = " +
                            std::to_string(G) + ", d = " + std::to_string(d) + ")");
  }
}

}  // namespace detail

/// First integral of the frictionless system. Level sets are closed curves
/// around the origin (for d = 1 only when the level is negative).
inline double phase_invariant(PhasePoint p, int d) {
  detail::require_subcritical(p.G, d, "phase_invariant");
  if (d == 2) {
    const double x = 1.0 - 2.0 * p.G;
    return (2.0 * p.F * p.F + std::log(x) * x + 1.0) / (2.0 * x);
  }
  const double dm2 = d - 2.0;
  return (dm2 * p.F * p.F - 2.0 * p.G + 1.0) / (dm2 * std::pow(1.0 - d * p.G, 2.0 / d));
}

/// Time derivative of phase_invariant along the damped system; never positive.
inline double lyapunov_rate(PhasePoint p, const ModelParams& params) {
  detail::require_subcritical(p.G, params.d, "lyapunov_rate");
  return -2.0 * params.nu * p.F * p.F / std::pow(1.0 - params.d * p.G, 2.0 / params.d);
}

/// F^2 on the level curve {phase_invariant = level} as a function of G.
/// Negative where the curve does not reach that G.
inline double level_curve_f_squared(double G, double level, int d) {
  if (d == 2) {
    const double x = 1.0 - 2.0 * G;
    return level * x - 0.5 * x * std::log(x) - 0.5;
  }
  const double dm2 = d - 2.0;
  return (level * dm2 * std::pow(1.0 - d * G, 2.0 / d) + 2.0 * G - 1.0) / dm2;
}

// ---------------------------------------------------------------------------
// Equilibria

enum class EquilibriumKind {
  center,
  stable_focus,
  stable_node,
  stable_degenerate_node,
  saddle,
  unstable_node,
  saddle_node
};

inline std::string to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::center: return "center";
    case EquilibriumKind::stable_focus: return "stable_focus";
    case EquilibriumKind::stable_node: return "stable_node";
    case EquilibriumKind::stable_degenerate_node: return "stable_degenerate_node";
    case EquilibriumKind::saddle: return "saddle";
    case EquilibriumKind::unstable_node: return "unstable_node";
    case EquilibriumKind::saddle_node: return "saddle_node";
  }
  return "unknown";
}

struct Equilibrium {
  PhasePoint location;
  EquilibriumKind kind;
};

// Relative tolerance for recognising the bifurcation values nu = 2 and nu = 2/sqrt(d).
inline constexpr double kBifurcationTol = 1e-9;

inline std::vector<Equilibrium> classify_equilibria(const ModelParams& params) {
  params.validate();
  const double nu = params.nu;
  const double d = params.d;
  const auto near = [](double a, double b) {
    return std::abs(a - b) <= kBifurcationTol * std::max(1.0, std::abs(b));
  };

  std::vector<Equilibrium> out;
  EquilibriumKind origin = EquilibriumKind::stable_node;
  if (nu == 0.0) {
    origin = EquilibriumKind::center;
  } else if (near(nu, 2.0)) {
    origin = EquilibriumKind::stable_degenerate_node;
  } else if (nu < 2.0) {
    origin = EquilibriumKind::stable_focus;
  }
  out.push_back({{0.0, 0.0}, origin});

  const double critical = 2.0 / std::sqrt(d);
  if (near(nu, critical)) {
    out.push_back({{-0.5 * nu, 1.0 / d}, EquilibriumKind::saddle_node});
  } else if (nu > critical) {
    const double s = std::sqrt(nu * nu - 4.0 / d);
    out.push_back({{-0.5 * (nu - s), 1.0 / d}, EquilibriumKind::saddle});
    out.push_back({{-0.5 * (nu + s), 1.0 / d}, EquilibriumKind::unstable_node});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Level-curve geometry

enum class FpForm {
  sqrt,     // true maximum of |F| on the level curve
  literal   // closed form with exponent (d-2)/d and no square root, used as F+ directly
};

struct GeometryOptions {
  FpForm fp_form = FpForm::sqrt;
  // Denominator point for the S-bounds M+-; defaults to the curve's own G0.
  std::optional<double> reference_g;
  double root_tol = 1e-10;
};

struct PhaseCurveGeometry {
  double c_d = 0.0;
  double g_minus = 0.0;
  double g_plus = 0.0;
  double f_plus = 0.0;
  double m_minus = 1.0;
  double m_plus = 1.0;
  double j_plus = 1.0;
};

namespace detail {

// Bisection for phase_invariant(G, 0) = level between lo (value below level)
// and hi (value above level). Endpoints are never evaluated.
inline double bisect_axis_root(double lo, double hi, double level, int d, double tol) {
  for (int it = 0; it < 4000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::abs(hi - lo) <= tol + 4.0 * 2.2e-16 * std::abs(mid)) return mid;
    if (phase_invariant({0.0, mid}, d) > level) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Maximum of F^2 over the closed level curve, from the stationarity
/// condition of level_curve_f_squared (F^2 = -G at the extremum). Returns 0
/// when the stationary point lies outside [g_minus, g_plus].
inline double max_f_squared_on_level(double level, int d, double g_minus, double g_plus) {
  double f2 = 0.0;
  double g_star = 0.0;
  if (d == 2) {
    const double x = std::exp(2.0 * level - 1.0);
    f2 = 0.5 * (x - 1.0);
    g_star = 0.5 * (1.0 - x);
  } else if (d == 1) {
    f2 = -(1.0 + level) / level;
    g_star = 1.0 + 1.0 / level;
  } else {
    const double dm2 = d - 2.0;
    const double x = std::pow(dm2 * level, d / dm2);
    f2 = (x - 1.0) / d;
    g_star = (1.0 - x) / d;
  }
  if (!(g_star >= g_minus && g_star <= g_plus) || !(f2 > 0.0)) return 0.0;
  return f2;
}

/// Literal closed form for the extremum of F on a level curve
/// (exponent (d-2)/d, no square root).
inline double literal_fp_expression(double level, int d) {
  const double dm2 = d - 2.0;
  return (std::pow(dm2 * level, dm2 / d) - 1.0) / d;
}

inline PhaseCurveGeometry phase_curve_geometry(PhasePoint p0, const ModelParams& params,
                                               const GeometryOptions& opts = {}) {
  params.validate();
  const int d = params.d;
  detail::require_subcritical(p0.G, d, "phase_curve_geometry");
  if (!std::isfinite(p0.F) || !std::isfinite(p0.G)) {
    throw std::domain_error("phase_curve_geometry: non-finite initial point");
  }

  PhaseCurveGeometry g;
  g.c_d = phase_invariant(p0, d);
  const double origin_level = phase_invariant({0.0, 0.0}, d);
  const double inv_d = 1.0 / d;

  if (g.c_d <= origin_level) {
    g.g_minus = g.g_plus = 0.0;
  } else {
    // Right root in (0, 1/d): the axis invariant blows up at G -> 1/d.
    if (p0.F == 0.0 && p0.G > 0.0) {
      g.g_plus = p0.G;
    } else {
      g.g_plus = detail::bisect_axis_root(0.0, inv_d, g.c_d, d, opts.root_tol);
    }
    // Left root: expand the bracket geometrically until the level is exceeded.
    if (p0.F == 0.0 && p0.G < 0.0) {
      g.g_minus = p0.G;
    } else {
      double width = std::abs(p0.G) + 0.1;
      double hi_side = 0.0;
      double far = -width;
      bool found = false;
      for (int it = 0; it < 2100 && std::isfinite(far); ++it) {
        if (phase_invariant({0.0, far}, d) > g.c_d) {
          found = true;
          break;
        }
        hi_side = far;
        width *= 2.0;
        far = -width;
      }
      if (!found) {
        throw BracketingError("phase_curve_geometry: no left axis crossing for level " +
                              std::to_string(g.c_d) + " (d = " + std::to_string(d) +
                              "); the level curve is not closed");
      }
      g.g_minus = detail::bisect_axis_root(hi_side, far, g.c_d, d, opts.root_tol);
    }
  }

  switch (opts.fp_form) {
    case FpForm::sqrt:
      g.f_plus = std::sqrt(max_f_squared_on_level(g.c_d, d, g.g_minus, g.g_plus));
      break;
    case FpForm::literal:
      g.f_plus = literal_fp_expression(g.c_d, d);
      break;
  }

  const double g_ref = opts.reference_g.value_or(p0.G);
  detail::require_subcritical(g_ref, d, "phase_curve_geometry(reference)");
  const double expo = (d + 2.0) / (2.0 * d);
  g.m_plus = std::pow((1.0 - d * g.g_minus) / (1.0 - d * g_ref), expo);
  g.m_minus = std::pow((1.0 - d * g.g_plus) / (1.0 - d * g_ref), expo);

  const double nu = params.nu;
  const double delta = d == 3 ? 1.0 : 0.0;
  g.j_plus = 1.0 - 0.25 * nu * nu - 0.5 * (d + 2.0) * g.g_minus + nu * (d - 2.0) * g.f_plus +
             (1.0 - delta) * 0.5 * (d - 2.0) * (d - 4.0) * g.f_plus * g.f_plus;
  return g;
}

/// Lower bound of J over the region enclosed by a level curve (|F| <= f_plus,
/// G <= g_plus). Requires the geometry to carry the true maximum of |F|.
inline double j_lower_bound(const PhaseCurveGeometry& g, const ModelParams& params) {
  const double d = params.d;
  const double nu = params.nu;
  const double quad = std::max(0.0, (d - 2.0) * (d - 4.0));
  return 1.0 - 0.25 * nu * nu - 0.5 * (d + 2.0) * std::max(0.0, g.g_plus) -
         std::abs(d - 2.0) * nu * g.f_plus - 0.25 * quad * g.f_plus * g.f_plus;
}

/// Samples of the closed level curve through p (upper branch left to right,
/// then lower branch right to left), n points per branch.
inline std::vector<PhasePoint> level_curve_samples(PhasePoint p, int d, std::size_t n) {
  ModelParams params{d, 0.0};
  const auto geo = phase_curve_geometry(p, params);
  std::vector<PhasePoint> out;
  if (n < 2 || geo.g_minus == geo.g_plus) {
    out.push_back({0.0, geo.g_minus});
    return out;
  }
  out.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    // Cosine spacing clusters samples near the axis crossings.
    const double s = 0.5 * (1.0 - std::cos(M_PI * static_cast<double>(i) / (n - 1)));
    const double G = geo.g_minus + s * (geo.g_plus - geo.g_minus);
    out.push_back({std::sqrt(std::max(0.0, level_curve_f_squared(G, geo.c_d, d))), G});
  }
  for (std::size_t i = n; i-- > 0;) {
    out.push_back({-out[i].F, out[i].G});
  }
  return out;
}

}  // namespace coldplasma
