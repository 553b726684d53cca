#pragma once

// Dynamical systems along one characteristic of the radially symmetric
// collisional cold-plasma equations.
//
// Solutions have the form V = F(t, r) x, E = G(t, r) x. Along a characteristic
// dr/dt = F r the slopes (F, G) solve a planar system; the divergence
// deviations u = div V - dF, v = div E - dG solve a Riccati system whose
// linearization gives the scalar Q(t) whose first zero is the blow-up time.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace coldplasma {

struct ModelParams {
  int d = 2;         // spatial dimension
  double nu = 0.0;   // collision frequency

  void validate() const {
    if (d < 1) throw std::invalid_argument("ModelParams: dimension d must be >= 1");
    if (!std::isfinite(nu) || nu < 0.0) {
      throw std::invalid_argument("ModelParams: nu must be finite and non-negative");
    }
  }
  double inv_d() const { return 1.0 / static_cast<double>(d); }
};

struct PhasePoint {
  double F = 0.0;
  double G = 0.0;
};

struct PhaseRate {
  double dF = 0.0;
  double dG = 0.0;
};

inline PhaseRate rhs_phase(PhasePoint p, const ModelParams& params) {
  const double d = params.d;
  return {-p.F * p.F - p.G - params.nu * p.F, p.F - d * p.F * p.G};
}

/// Coefficient of the Hill-type equation H'' + J H = 0.
inline double j_coefficient(PhasePoint p, const ModelParams& params) {
  const double d = params.d;
  const double nu = params.nu;
  return 1.0 - 0.25 * nu * nu - 0.25 * (d - 2.0) * (d - 4.0) * p.F * p.F +
         (d - 2.0) * nu * p.F - 0.5 * (d + 2.0) * p.G;
}

// ---------------------------------------------------------------------------
// Six-component characteristic system (F, G, calF, H, Z, Q).

struct CharacteristicState {
  double F = 0.0;
  double G = 0.0;
  double calF = 0.0;  // running integral of F
  double H = 0.0;
  double Z = 0.0;     // dH/dt
  double Q = 1.0;

  using Vector = std::array<double, 6>;

  Vector pack() const { return {F, G, calF, H, Z, Q}; }
  static CharacteristicState unpack(const Vector& y) { return {y[0], y[1], y[2], y[3], y[4], y[5]}; }
  PhasePoint phase() const { return {F, G}; }
};

/// exp(-nu t / 2 - (d + 2)/2 * calF), the weight linking H to p1 = dQ/dt.
inline double q_weight(double t, double calF, const ModelParams& params) {
  return std::exp(-0.5 * params.nu * t - 0.5 * (params.d + 2.0) * calF);
}

inline CharacteristicState::Vector rhs_characteristic(double t, const CharacteristicState::Vector& y,
                                                      const ModelParams& params) {
  const PhasePoint p{y[0], y[1]};
  const auto [dF, dG] = rhs_phase(p, params);
  const double J = j_coefficient(p, params);
  return {dF, dG, y[0], y[4], -J * y[3], y[3] * q_weight(t, y[2], params)};
}

inline CharacteristicState::Vector rhs_characteristic(double t, const CharacteristicState& s,
                                                      const ModelParams& params) {
  return rhs_characteristic(t, s.pack(), params);
}

// ---------------------------------------------------------------------------
// Direct Riccati system for (u, v) coupled to (F, G); the oracle for the
// linearized path.

using RiccatiVector = std::array<double, 4>;  // (F, G, u, v)

inline RiccatiVector rhs_riccati(double /*t*/, const RiccatiVector& y, const ModelParams& params) {
  const double F = y[0], G = y[1], u = y[2], v = y[3];
  const double d = params.d;
  const auto [dF, dG] = rhs_phase({F, G}, params);
  return {dF, dG, -u * u - 2.0 * u * F - v - params.nu * u, -u * v + (1.0 - d * G) * u - d * F * v};
}

// Divergences D = div V, lambda = div E along the characteristic, coupled to (F, G).
using DivergenceVector = std::array<double, 4>;  // (F, G, D, lambda)

inline DivergenceVector rhs_divergence(double /*t*/, const DivergenceVector& y,
                                       const ModelParams& params) {
  const double F = y[0], G = y[1], D = y[2], lam = y[3];
  const double d = params.d;
  const auto [dF, dG] = rhs_phase({F, G}, params);
  return {dF, dG,
          -D * D + 2.0 * (d - 1.0) * F * D - d * (d - 1.0) * F * F - lam - params.nu * D,
          D * (1.0 - lam)};
}

struct RiccatiState {
  double u = 0.0;
  double v = 0.0;
};

struct LinearizedComponents {
  double p1 = 0.0;
  double p2 = 0.0;
};

/// Recovers p1 = dQ/dt and p2 = -dp1/dt - (2F + nu) p1 from the characteristic state.
inline LinearizedComponents linearized_components(double t, const CharacteristicState& s,
                                                  const ModelParams& params) {
  const double w = q_weight(t, s.calF, params);
  const double d = params.d;
  return {s.H * w, (-s.Z + (0.5 * (d - 2.0) * s.F - 0.5 * params.nu) * s.H) * w};
}

/// u = p1 / Q, v = p2 / Q. Only meaningful while Q != 0.
inline RiccatiState recover_riccati(double t, const CharacteristicState& s, const ModelParams& params) {
  const auto [p1, p2] = linearized_components(t, s, params);
  return {p1 / s.Q, p2 / s.Q};
}

/// Electron density n = 1 - div E = 1 - v - d G.
inline double density(const RiccatiState& w, PhasePoint p, const ModelParams& params) {
  return 1.0 - w.v - params.d * p.G;
}

}  // namespace coldplasma
