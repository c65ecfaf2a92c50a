#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "muskat/convergence.hpp"
#include "muskat/stationary.hpp"

using namespace muskat;

namespace {
PhysParams params(double gamma, double M = 4.0, double g = 1.0, double sigma = 1.0) {
  PhysParams p;
  p.g = g;
  p.sigma = sigma;
  p.gamma_jump = gamma;
  p.M = M;
  return p;
}
VesselGeometry flat(double c) { return {WallFamily::flat, c, 0.0}; }

double ode_residual(const StationaryState& st, const PhysParams& p) {
  auto k = curvature(st.h_s);
  double r = 0;
  for (int i = 0; i < k.size(); ++i) r = std::max(r, std::abs(-p.g * st.h_s[i] + p.sigma * k[i] - st.phi_s));
  return r;
}
}  // namespace

TEST(PhiS, ClosedFormSubstitution) {
  EXPECT_DOUBLE_EQ(phi_s_closed_form(params(0.0, 4.0), flat(-1.0)), -1.0);
  EXPECT_DOUBLE_EQ(phi_s_closed_form(params(0.5, 2.0), flat(0.0)), -0.5);
  EXPECT_NEAR(phi_s_closed_form(params(0.0, 1e-300, 2.0), flat(0.0)), 0.0, 1e-300);
}

TEST(Stationary, FlatCaseIsExact) {
  auto p = params(0.0);
  auto st = solve_stationary(p, flat(-1.0), 64);
  EXPECT_EQ(st.phi_s, -1.0);
  for (double h : st.h_s.v) EXPECT_NEAR(h, 1.0, 1e-12);
  EXPECT_NEAR(contact_angle(st), std::numbers::pi / 2, 1e-12);
}

TEST(Stationary, YoungsLawAtTheCorners) {
  for (double gam : {0.5, -0.5, 0.25, -0.25}) {
    auto p = params(gam);
    auto st = solve_stationary(p, flat(-1.0), 256);
    EXPECT_LT(std::abs(std::cos(contact_angle(st)) - gam / p.sigma), 1e-6) << "gamma=" << gam;
    EXPECT_GT(st.omega, 0.0);
    EXPECT_LT(st.omega, std::numbers::pi);
  }
  EXPECT_NEAR(solve_stationary(params(0.5), flat(-1), 256).omega, std::numbers::pi / 3, 1e-6);
  EXPECT_NEAR(solve_stationary(params(-0.5), flat(-1), 256).omega, 2 * std::numbers::pi / 3, 1e-6);
}

TEST(Stationary, ShapeFollowsSignOfGammaJump) {
  for (double gam : {-0.5, 0.5}) {
    auto st = solve_stationary(params(gam), flat(-1.0), 128);
    auto h2 = d2(st.h_s);
    for (int i = 1; i < st.h_s.N(); ++i) {
      if (gam < 0) EXPECT_LE(h2[i], 1e-12);
      else EXPECT_GE(h2[i], -1e-12);
    }
  }
}

TEST(Stationary, EvennessAndMass) {
  VesselGeometry bowl{WallFamily::parabolic, -1.5, 0.5};
  auto p = params(0.3, 3.0, 2.0, 1.5);
  auto st = solve_stationary(p, bowl, 128);
  for (int i = 0; i <= 128; ++i) EXPECT_LE(std::abs(st.h_s[i] - st.h_s[128 - i]), 1e-10);
  EXPECT_LE(std::abs(st.mass_residual), 1e-8);
  for (int i = 0; i <= 128; ++i) EXPECT_GT(st.h_s[i], st.h_w[i]);
}

TEST(Stationary, OdeResidualConvergesSecondOrder) {
  // Observed order = least-squares slope of log(residual) against log(N).
  for (double gam : {0.5, -0.25}) {
    auto p = params(gam);
    std::vector<double> Ns{64, 128, 256, 512}, res;
    for (double N : Ns) res.push_back(ode_residual(solve_stationary(p, flat(-1.0), static_cast<int>(N)), p));
    EXPECT_GE(observed_order(Ns, res), 1.9) << "gamma=" << gam;
  }
}

TEST(Stationary, RejectsTotalWetting) {
  EXPECT_THROW(solve_stationary(params(1.0), flat(-1.0), 64), std::invalid_argument);
  EXPECT_THROW(solve_stationary(params(-1.2), flat(-1.0), 64), std::invalid_argument);
}

TEST(Stationary, ReportsPinching) {
  // Deep bump in the wall with almost no fluid: the layer pinches.
  VesselGeometry bump{WallFamily::cosine, 0.0, 1.0};
  EXPECT_THROW(solve_stationary(params(0.0, 0.05), bump, 64), GeometryError);
}
