#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "coldplasma/integrator.hpp"
#include "coldplasma/model.hpp"
#include "coldplasma/phase_plane.hpp"

using namespace coldplasma;
using V2 = std::array<double, 2>;
using V3 = std::array<double, 3>;

namespace {

// (F, G, calF): enough for the phase plane and the geometric invariant.
OdeSystem<V3> phase_system(const ModelParams& p) {
  return {3, [p](double, const V3& y) {
            const auto r = rhs_phase({y[0], y[1]}, p);
            return V3{r.dF, r.dG, y[0]};
          }};
}

Trajectory<V3> run_phase(PhasePoint p0, const ModelParams& p, double t1) {
  StepControl c;
  c.rel_tol = 1e-11;
  c.abs_tol = 1e-13;
  return integrate(phase_system(p), V3{p0.F, p0.G, 0.0}, {0.0, t1}, c);
}

// Independent copy of the frictionless invariant, written from the formulas
// rather than calling the library.
double invariant_oracle(double F, double G, int d) {
  if (d == 2) {
    const double x = 1 - 2 * G;
    return (2 * F * F + std::log(x) * x + 1) / (2 * x);
  }
  return ((d - 2) * F * F - 2 * G + 1) / ((d - 2) * std::pow(1 - d * G, 2.0 / d));
}

// F^2 on the level set, solving the invariant for F^2.
double f2_oracle(double G, double level, int d) {
  if (d == 2) {
    const double x = 1 - 2 * G;
    return (2 * x * level - std::log(x) * x - 1) / 2;
  }
  return (level * (d - 2) * std::pow(1 - d * G, 2.0 / d) + 2 * G - 1) / (d - 2);
}

double golden_max(const std::function<double(double)>& f, double a, double b) {
  const double phi = (std::sqrt(5.0) - 1) / 2;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  for (int i = 0; i < 300; ++i) {
    if (f(c) > f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - phi * (b - a);
    d = a + phi * (b - a);
  }
  return f(0.5 * (a + b));
}

// Plain bisection on a sign change, scanning left from 0 in steps of 0.01.
double left_root_oracle(double level, int d) {
  double hi = 0.0, lo = -0.01;
  while (invariant_oracle(0, lo, d) < level) {
    hi = lo;
    lo -= 0.01;
  }
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (invariant_oracle(0, m, d) < level ? hi : lo) = m;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(RhsPhase, Examples) {
  auto r = rhs_phase({0, 0}, {2, 0.3});
  EXPECT_EQ(r.dF, 0.0);
  EXPECT_EQ(r.dG, 0.0);
  r = rhs_phase({0, 0.2426}, {2, 0.018});
  EXPECT_DOUBLE_EQ(r.dF, -0.2426);
  EXPECT_EQ(r.dG, 0.0);
  r = rhs_phase({-0.5, 0.25}, {3, 1.0});
  EXPECT_NEAR(r.dF, 0.0, 1e-15);
  EXPECT_NEAR(r.dG, -0.125, 1e-15);
}

TEST(RhsCharacteristic, Examples) {
  const auto z = rhs_characteristic(0.0, CharacteristicState{}, {2, 0.5});
  for (double x : z) EXPECT_EQ(x, 0.0);
  for (int d : {1, 2, 3, 5}) {
    const auto y = rhs_characteristic(0.0, CharacteristicState{0, 0, 0, 1, 0, 1}, {d, 0.0});
    EXPECT_EQ(y[4], -1.0);
    EXPECT_EQ(y[5], 1.0);
  }
  const double G = 0.41 * std::exp(-0.06125);
  EXPECT_NEAR(G, 0.385641, 1e-6);
  const auto y = rhs_characteristic(0.0, CharacteristicState{0, G, 0, 0, 0.0, 1}, {2, 0.018});
  EXPECT_EQ(y[4], 0.0);
  EXPECT_EQ(y[5], 0.0);
}

TEST(JCoefficient, Examples) {
  EXPECT_EQ(j_coefficient({0, 0}, {2, 0.0}), 1.0);
  EXPECT_EQ(j_coefficient({0, 0}, {2, 2.0}), 0.0);
  EXPECT_NEAR(j_coefficient({0.1, 0.1}, {3, 0.5}), 0.74, 1e-12);
}

TEST(RhsRiccati, Examples) {
  auto r = rhs_riccati(0, {0.3, -0.1, 0, 0}, {3, 0.4});
  EXPECT_EQ(r[2], 0.0);
  EXPECT_EQ(r[3], 0.0);
  r = rhs_riccati(0, {0, 0, 1, 0}, {2, 0.0});
  EXPECT_EQ(r[2], -1.0);
  EXPECT_EQ(r[3], 1.0);
  r = rhs_riccati(0, {0, 0.2, -0.1, 0.05}, {2, 0.1});
  EXPECT_NEAR(r[2], -0.05, 1e-15);
  EXPECT_NEAR(r[3], -0.055, 1e-15);
}

TEST(RhsDivergence, MatchesRiccatiUnderShift) {
  // D = u + dF, lambda = v + dG.
  const ModelParams p{3, 0.7};
  const double F = 0.2, G = -0.1, u = 0.4, v = -0.3;
  const auto rr = rhs_riccati(0, {F, G, u, v}, p);
  const auto rd = rhs_divergence(0, {F, G, u + 3 * F, v + 3 * G}, p);
  EXPECT_NEAR(rd[2], rr[2] + 3 * rr[0], 1e-14);
  EXPECT_NEAR(rd[3], rr[3] + 3 * rr[1], 1e-14);
}

TEST(PhaseInvariant, Examples) {
  EXPECT_DOUBLE_EQ(phase_invariant({0, 0}, 3), 1.0);
  EXPECT_DOUBLE_EQ(phase_invariant({0, 0}, 2), 0.5);
  EXPECT_NEAR(phase_invariant({0, 0.2}, 3), 0.6 / std::pow(0.4, 2.0 / 3.0), 1e-15);
  EXPECT_NEAR(phase_invariant({0, 0.2}, 3), 1.10521, 1e-5);
  EXPECT_THROW(phase_invariant({0, 0.5}, 2), std::domain_error);
  EXPECT_THROW(phase_invariant({0, 0.4}, 3), std::domain_error);
}

TEST(LyapunovRate, Examples) {
  EXPECT_EQ(lyapunov_rate({0, 0.1}, {2, 0.5}), -0.0);
  EXPECT_EQ(lyapunov_rate({0.7, 0.1}, {2, 0.0}), -0.0);
  EXPECT_DOUBLE_EQ(lyapunov_rate({1, 0}, {2, 0.5}), -1.0);
  EXPECT_THROW(lyapunov_rate({1, 1}, {2, 0.5}), std::domain_error);
}

TEST(LyapunovRate, MatchesChainRuleOfInvariant) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(-0.4, 0.4);
  for (int d = 1; d <= 5; ++d) {
    for (int k = 0; k < 20; ++k) {
      const ModelParams p{d, 0.8};
      const PhasePoint x{U(rng), std::min(U(rng), 0.9 / d)};
      const auto r = rhs_phase(x, p);
      const double h = 1e-6;
      const double dPhi_dF = (invariant_oracle(x.F + h, x.G, d) - invariant_oracle(x.F - h, x.G, d)) / (2 * h);
      const double dPhi_dG = (invariant_oracle(x.F, x.G + h, d) - invariant_oracle(x.F, x.G - h, d)) / (2 * h);
      EXPECT_NEAR(dPhi_dF * r.dF + dPhi_dG * r.dG, lyapunov_rate(x, p), 1e-7) << "d=" << d;
    }
  }
}

TEST(Equilibria, Examples) {
  auto e = classify_equilibria({2, 1.0});
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].kind, EquilibriumKind::stable_focus);

  e = classify_equilibria({2, 2.0 / std::sqrt(2.0)});
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].kind, EquilibriumKind::stable_focus);
  EXPECT_EQ(e[1].kind, EquilibriumKind::saddle_node);
  EXPECT_NEAR(e[1].location.F, -std::sqrt(2.0) / 2, 1e-15);
  EXPECT_EQ(e[1].location.G, 0.5);

  e = classify_equilibria({1, 3.0});
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e[0].kind, EquilibriumKind::stable_node);
  EXPECT_EQ(e[1].kind, EquilibriumKind::saddle);
  EXPECT_NEAR(e[1].location.F, -(3 - std::sqrt(5.0)) / 2, 1e-15);
  EXPECT_EQ(e[2].kind, EquilibriumKind::unstable_node);
  EXPECT_NEAR(e[2].location.F, -(3 + std::sqrt(5.0)) / 2, 1e-15);

  EXPECT_EQ(classify_equilibria({2, 0.0})[0].kind, EquilibriumKind::center);
  EXPECT_EQ(classify_equilibria({2, 2.0})[0].kind, EquilibriumKind::stable_degenerate_node);
  EXPECT_EQ(classify_equilibria({3, 2.0}).size(), 3u);
}

TEST(Equilibria, AreZerosOfTheField) {
  for (int d = 1; d <= 5; ++d) {
    for (double nu : {0.0, 0.5, 1.2, 2.0, 3.7}) {
      for (const auto& e : classify_equilibria({d, nu})) {
        const auto r = rhs_phase(e.location, {d, nu});
        EXPECT_NEAR(r.dF, 0.0, 1e-14);
        EXPECT_NEAR(r.dG, 0.0, 1e-14);
      }
    }
  }
}

TEST(Equilibria, StabilityMatchesJacobian) {
  // Eigenvalues of the Jacobian at each equilibrium, from trace and determinant.
  for (int d = 1; d <= 5; ++d) {
    for (double nu : {0.3, 1.0, 1.9, 2.5, 4.0}) {
      for (const auto& e : classify_equilibria({d, nu})) {
        const double F = e.location.F, G = e.location.G;
        const double a = -2 * F - nu, b = -1, c = 1 - d * G, dd = -d * F;
        const double tr = a + dd, det = a * dd - b * c, disc = tr * tr - 4 * det;
        switch (e.kind) {
          case EquilibriumKind::stable_focus: EXPECT_TRUE(tr < 0 && disc < 0); break;
          case EquilibriumKind::stable_node: EXPECT_TRUE(tr < 0 && det > 0 && disc > 0); break;
          case EquilibriumKind::saddle: EXPECT_LT(det, 0); break;
          case EquilibriumKind::unstable_node: EXPECT_TRUE(tr > 0 && det > 0); break;
          default: break;
        }
      }
    }
  }
}

TEST(Geometry, OriginIsDegenerate) {
  const auto g = phase_curve_geometry({0, 0}, {2, 0.4});
  EXPECT_EQ(g.g_minus, 0.0);
  EXPECT_EQ(g.g_plus, 0.0);
  EXPECT_EQ(g.m_minus, 1.0);
  EXPECT_EQ(g.m_plus, 1.0);
  EXPECT_EQ(g.f_plus, 0.0);
  EXPECT_DOUBLE_EQ(g.j_plus, 1 - 0.04);
}

TEST(Geometry, ThreeDimensionalAxisPoint) {
  const auto g = phase_curve_geometry({0, 0.2}, {3, 0.0});
  EXPECT_NEAR(g.c_d, 1.10521, 1e-5);
  EXPECT_EQ(g.g_plus, 0.2);
  const double gm = left_root_oracle(g.c_d, 3);
  EXPECT_NEAR(g.g_minus, gm, 1e-9);
  EXPECT_NEAR(g.g_minus, -0.59, 0.01);
  EXPECT_DOUBLE_EQ(g.m_minus, 1.0);
  EXPECT_NEAR(g.m_plus, std::pow((1 - 3 * gm) / 0.4, 5.0 / 6.0), 1e-8);
  EXPECT_NEAR(g.m_plus, 5.0, 0.1);
  EXPECT_NEAR(g.j_plus, 1 - 2.5 * gm, 1e-9);
  EXPECT_NEAR(g.j_plus, 2.475, 0.01);
}

TEST(Geometry, FPlusIsTheMaximumOfFOnTheCurve) {
  // Independent maximization of F^2 over [g_minus, g_plus].
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(0, 1);
  for (int d = 1; d <= 5; ++d) {
    for (int k = 0; k < 10; ++k) {
      const PhasePoint p{0.6 * (U(rng) - 0.5), (U(rng) * 1.3 - 0.5) / d};
      PhaseCurveGeometry g;
      try {
        g = phase_curve_geometry(p, {d, 0.0});
      } catch (const BracketingError&) {
        ASSERT_EQ(d, 1) << "open level curves only occur for d = 1";
        continue;
      }
      const double level = invariant_oracle(p.F, p.G, d);
      const double best = golden_max([&](double G) { return f2_oracle(G, level, d); }, g.g_minus, g.g_plus);
      EXPECT_NEAR(g.f_plus, std::sqrt(std::max(0.0, best)), 1e-6) << "d=" << d;
      EXPECT_GE(g.f_plus, std::abs(p.F) - 1e-9);
      // The axis roots are on the level set.
      EXPECT_NEAR(invariant_oracle(0, g.g_minus, d), level, 1e-8 * (1 + std::abs(level)));
      EXPECT_NEAR(invariant_oracle(0, g.g_plus, d), level, 1e-8 * (1 + std::abs(level)));
      EXPECT_LE(g.g_minus, 0.0);
      EXPECT_GE(g.g_plus, 0.0);
      EXPECT_LT(g.g_plus, 1.0 / d);
      EXPECT_LE(g.m_minus, g.m_plus);
    }
  }
}

TEST(Geometry, PrintedExtremumDiffersFromTrueMaximum) {
  // The literal closed form is kept only as an opt-in.
  const auto sq = phase_curve_geometry({0, 0.2}, {3, 0.1});
  GeometryOptions lit;
  lit.fp_form = FpForm::literal;
  const auto lt = phase_curve_geometry({0, 0.2}, {3, 0.1}, lit);
  EXPECT_NEAR(lt.f_plus, (std::cbrt(sq.c_d) - 1) / 3, 1e-14);
  EXPECT_NEAR(sq.f_plus, std::sqrt((std::pow(sq.c_d, 3.0) - 1) / 3), 1e-12);
  EXPECT_GT(sq.f_plus, lt.f_plus);
}

TEST(Geometry, TwoDimensionalJPlusUsesOnlyGMinus) {
  for (double r : {0.0, 0.3, 1.0}) {
    const ModelParams p{2, 0.6};
    const auto g = phase_curve_geometry({0, 0.499 * std::exp(-r * r / 2)}, p);
    EXPECT_NEAR(g.j_plus, 1 - 0.09 - 2 * g.g_minus, 1e-14);
  }
}

TEST(Geometry, Errors) {
  EXPECT_THROW(phase_curve_geometry({0, 0.5}, {2, 0.1}), std::domain_error);
  // d = 1: levels >= 0 give open curves (the axis value stays negative).
  EXPECT_THROW(phase_curve_geometry({1.5, 0.0}, {1, 0.1}), BracketingError);
}

TEST(LevelCurve, SamplesLieOnTheCurve) {
  for (int d : {2, 3, 4}) {
    const PhasePoint p{0.0, 0.3 / d};
    const double level = phase_invariant(p, d);
    const auto pts = level_curve_samples(p, d, 100);
    ASSERT_EQ(pts.size(), 200u);
    for (const auto& q : pts) EXPECT_NEAR(phase_invariant(q, d), level, 1e-7);
  }
}

// ---------------------------------------------------------------------------
// Properties along integrated trajectories

TEST(Properties, ConservationWithoutFriction) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 10; ++k) {
    const int d = 2 + k % 4;
    const PhasePoint p0{0.4 * (U(rng) - 0.5), (U(rng) * 0.8 - 0.3) / d};
    const double level = phase_invariant(p0, d);
    const auto tr = run_phase(p0, {d, 0.0}, 100.0);
    ASSERT_EQ(tr.status, TerminalStatus::reached_horizon);
    for (const auto& s : tr.samples) {
      ASSERT_NEAR(phase_invariant({s.y[0], s.y[1]}, d), level, 1e-7 * (1 + std::abs(level)));
    }
  }
}

TEST(Properties, MonotoneWithFriction) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 10; ++k) {
    const int d = 2 + k % 4;
    const ModelParams p{d, 0.05 + 1.5 * U(rng)};
    const PhasePoint p0{0.4 * (U(rng) - 0.5), (U(rng) * 0.8 - 0.3) / d};
    const auto tr = run_phase(p0, p, 60.0);
    double prev = phase_invariant(p0, d);
    for (const auto& s : tr.samples) {
      const double now = phase_invariant({s.y[0], s.y[1]}, d);
      ASSERT_LE(now, prev + 1e-9);
      prev = now;
    }
  }
}

TEST(Properties, GeometricInvariantAndSign) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 10; ++k) {
    const int d = 1 + k % 5;
    const ModelParams p{d, 2.0 * U(rng)};
    const PhasePoint p0{0.4 * (U(rng) - 0.5), (U(rng) - 0.5) / d};
    const double c0 = 1 - d * p0.G;
    const auto tr = run_phase(p0, p, 30.0);
    for (const auto& s : tr.samples) {
      const double c = (1 - d * s.y[1]) * std::exp(d * s.y[2]);
      ASSERT_NEAR(c, c0, 1e-8 * std::abs(c0));
      ASSERT_GT((1 - d * s.y[1]) * c0, 0.0);
    }
  }
}

TEST(Properties, SBoundsAlongTrajectories) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 12; ++k) {
    const int d = 2 + k % 4;
    const ModelParams p{d, 0.05 + 1.9 * U(rng)};
    const PhasePoint p0{0.3 * (U(rng) - 0.5), (U(rng) * 0.9 - 0.3) / d};
    const auto g = phase_curve_geometry(p0, p);
    const auto tr = run_phase(p0, p, 40.0);
    const double e = (d + 2.0) / (2.0 * d);
    for (const auto& s : tr.samples) {
      const double S = std::pow((1 - d * s.y[1]) / (1 - d * p0.G), e);
      ASSERT_GE(S, g.m_minus * (1 - 1e-9));
      ASSERT_LE(S, g.m_plus * (1 + 1e-9));
    }
  }
}

TEST(Properties, JBoundedByJPlusForEvenAndHighDimensions) {
  // d = 2, 4, 5: every J term is dominated termwise by its J+ counterpart.
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> U(0, 1);
  for (int k = 0; k < 15; ++k) {
    const int d = std::array{2, 4, 5}[k % 3];
    const ModelParams p{d, 0.05 + 1.9 * U(rng)};
    const PhasePoint p0{0.3 * (U(rng) - 0.5), (U(rng) * 0.9 - 0.3) / d};
    const auto g = phase_curve_geometry(p0, p);
    const auto tr = run_phase(p0, p, 40.0);
    for (const auto& s : tr.samples) ASSERT_LE(j_coefficient({s.y[0], s.y[1]}, p), g.j_plus + 1e-9);
  }
}

TEST(Properties, AttractionToOrigin) {
  const ModelParams p{2, 0.8};
  const auto tr = run_phase({0.1, 0.3}, p, 60.0);
  EXPECT_LT(std::hypot(tr.final_state[0], tr.final_state[1]), 1e-6);
}

TEST(Properties, SupercriticalEscape) {
  for (int d : {1, 2, 3}) {
    const ModelParams p{d, 0.3};
    const auto tr = run_phase({0.0, 1.2 / d}, p, 100.0);
    ASSERT_EQ(tr.status, TerminalStatus::step_failure) << "d=" << d;
    EXPECT_GT(tr.final_state[1], 1e3);
    EXPECT_LT(tr.final_state[0], -1e3);
  }
}
