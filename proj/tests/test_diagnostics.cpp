#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "muskat/convergence.hpp"
#include "muskat/diagnostics.hpp"
#include "muskat/run.hpp"

using namespace muskat;

namespace {
constexpr double pi = std::numbers::pi;

VesselGeometry flat_vessel() { return {WallFamily::flat, -1.0, 0.0}; }

GridFn1D cosine(int N, double eps) {
  return GridFn1D::sample(N, [&](double x) { return eps * std::cos(pi * x); });
}

RunResult benchmark(int N, double dt, double t_end, double eps = 0.01) {
  muskat::Setup s(PhysParams{}, flat_vessel(), N, N / 4);
  StepperConfig c;
  c.dt = dt;
  c.t_end = t_end;
  return run(s, c, cosine(N, eps));
}

// Independent oracle for the order-1/2 seminorm of cos(pi x) on I: the integrand
// ((f(x)-f(y))/(x-y))^2 is smooth, so tensor Gauss-Legendre converges fast.
double half_seminorm_sq_cos() {
  const int n = 40;
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5)), dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2 / ((1 - z * z) * dp * dp);
  }
  double s = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double d = x[a] - x[b];
      const double q = std::abs(d) < 1e-14 ? -pi * std::sin(pi * x[a]) : (std::cos(pi * x[a]) - std::cos(pi * x[b])) / d;
      s += w[a] * w[b] * q * q;
    }
  return s / (2 * pi);  // c_theta at theta = 1/2
}
}  // namespace

TEST(FdWeights, ClassicStencils) {
  auto c = fd_weights(0.0, {-1.0, 0.0, 1.0}, 2);
  EXPECT_NEAR(c[1][0], -0.5, 1e-15);
  EXPECT_NEAR(c[1][2], 0.5, 1e-15);
  EXPECT_NEAR(c[2][0], 1.0, 1e-15);
  EXPECT_NEAR(c[2][1], -2.0, 1e-15);
  auto f = fd_weights(0.0, {-2.0, -1.0, 0.0, 1.0, 2.0}, 1)[1];
  const std::vector<double> ref = {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(f[i], ref[i], 1e-15);
}

TEST(FdWeights, OneSidedStencilsAreExactOnCubics) {
  const std::vector<double> x = {0.0, 0.1, 0.25, 0.3, 0.5};
  auto c = fd_weights(0.0, x, 3);
  auto p = [](double t) { return 2 - t + 3 * t * t - 4 * t * t * t; };
  double d1 = 0, d2 = 0, d3 = 0;
  for (int i = 0; i < 5; ++i) {
    d1 += c[1][i] * p(x[i]);
    d2 += c[2][i] * p(x[i]);
    d3 += c[3][i] * p(x[i]);
  }
  EXPECT_NEAR(d1, -1.0, 1e-10);
  EXPECT_NEAR(d2, 6.0, 1e-9);
  EXPECT_NEAR(d3, -24.0, 1e-7);
}

TEST(PhysicalEnergy, FlatProfiles) {
  PhysParams p;
  EXPECT_NEAR(physical_energy(GridFn1D(16, 0.0), p), 2.0, 1e-14);
  EXPECT_NEAR(physical_energy(GridFn1D(16, 1.0), p), 3.0, 1e-14);
  p.gamma_jump = 0.3;
  EXPECT_NEAR(physical_energy(GridFn1D(16, 1.0), p), 2.4, 1e-14);
}

TEST(Sobolev, ZeroAndConstants) {
  for (double s : {0.0, 0.5, 1.5, 2.5}) {
    EXPECT_EQ(sobolev_norm_frac(GridFn1D(32), s), 0.0);
    EXPECT_NEAR(sobolev_norm_frac(GridFn1D(32, -1.5), s), 1.5 * std::sqrt(2.0), 1e-12);
  }
  EXPECT_THROW(sobolev_norm_frac(GridFn1D(32), 3.0), std::invalid_argument);
  EXPECT_THROW(sobolev_norm_frac(GridFn1D(32), -0.1), std::invalid_argument);
  EXPECT_THROW(slobodeckij_sq(GridFn1D(32), 1.0), std::invalid_argument);
}

TEST(Sobolev, CosineAgainstIndependentValues) {
  auto f = cosine(256, 1.0);
  EXPECT_NEAR(sobolev_norm_frac(f, 1.0), std::sqrt(1 + pi * pi), 1e-3);
  EXPECT_NEAR(sobolev_norm_frac(f, 2.0), std::sqrt(1 + pi * pi + std::pow(pi, 4)), 1e-2);
  const double half = half_seminorm_sq_cos();
  EXPECT_NEAR(std::pow(sobolev_norm_frac(f, 0.5), 2), 1 + half, 1e-3 * (1 + half));
}

TEST(Sobolev, FractionalNormIsMonotoneInTheOrder) {
  auto f = GridFn1D::sample(128, [](double x) { return std::sin(3 * x) + x * x; });
  double prev = 0;
  for (double s : {0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5}) {
    const double v = sobolev_norm_frac(f, s);
    EXPECT_GE(v, prev) << "s=" << s;
    prev = v;
  }
}

TEST(DecayFit, SyntheticExponential) {
  std::vector<double> t, q;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.05 * k);
    q.push_back(3.0 * std::exp(-2.0 * t.back()));
  }
  auto f = decay_fit(t, q);
  EXPECT_NEAR(f.lambda, 2.0, 1e-10);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-10);
  EXPECT_NEAR(f.t0, 2.5, 1e-12);
  q[60] = 0.0;
  EXPECT_THROW(decay_fit(t, q), std::invalid_argument);
  EXPECT_THROW(decay_fit({0.0, 1.0}, {1.0, 0.5}), std::invalid_argument);
}

TEST(Records, ValuesRoundTrip) {
  DiagnosticsRecord r;
  r.t = 0.25;
  r.E_par = 1e-3;
  r.contact_mismatch = 7.0;
  r.flags = partial_history;
  auto v = record_values(r);
  ASSERT_EQ(v.size(), trajectory_columns().size());
  EXPECT_EQ(trajectory_columns()[12], "residual_energy_identity");
  auto b = record_from_values(v);
  EXPECT_EQ(record_values(b), v);
  v.pop_back();
  EXPECT_THROW(record_from_values(v), std::invalid_argument);
}

TEST(Run, ZeroEndTimeGivesASingleRecord) {
  auto r = benchmark(16, 1e-3, 0.0);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].t, 0.0);
  EXPECT_TRUE(r.records[0].flags & partial_history);
  EXPECT_EQ(r.status, "ok");
}

TEST(Run, EndTimeMustBeAMultipleOfTheStep) {
  StepperConfig c;
  c.dt = 0.3;
  c.t_end = 1.0;
  EXPECT_THROW(step_count(c), std::invalid_argument);
}

TEST(Run, EquilibriumRecordsAreIdentical) {
  muskat::Setup s(PhysParams{.gamma_jump = 0.3}, flat_vessel(), 16, 4);
  StepperConfig c;
  c.dt = 1e-3;
  c.t_end = 0.02;
  auto r = run(s, c, GridFn1D(16));
  ASSERT_EQ(r.records.size(), 21u);
  const double e0 = r.records[0].E_phys;
  for (const auto& x : r.records) {
    EXPECT_NEAR(x.E_phys, e0, 1e-14 * std::abs(e0));
    EXPECT_EQ(x.E_par, 0.0);
    EXPECT_EQ(x.D_par, 0.0);
    EXPECT_EQ(x.residual_energy_identity, 0.0);
    EXPECT_EQ(x.mass, 0.0);
  }
}

TEST(Run, EdgeRecordsAreFlaggedPartial) {
  auto r = benchmark(16, 1e-3, 0.02);
  ASSERT_EQ(r.records.size(), 21u);
  for (std::size_t k = 0; k < r.records.size(); ++k) {
    const bool edge = k < 2 || k + 2 >= r.records.size();
    EXPECT_EQ(bool(r.records[k].flags & partial_history), edge) << "record " << k;
  }
}

TEST(Run, InitialMeanIsProjectedOut) {
  muskat::Setup s(PhysParams{}, flat_vessel(), 16, 4);
  StepperConfig c;
  c.t_end = 0.0;
  auto r = run(s, c, GridFn1D::sample(16, [](double x) { return 0.01 + 0.01 * std::cos(pi * x); }));
  EXPECT_NEAR(r.mean_removed, 0.01, 1e-15);
  EXPECT_NEAR(r.records[0].mass, 0.0, 1e-16);
}

TEST(Run, BreakdownEndsWithATerminalRecord) {
  auto r = benchmark(16, 1e-3, 0.01, 3.0);
  EXPECT_EQ(r.status, "breakdown");
  ASSERT_FALSE(r.records.empty());
  EXPECT_EQ(r.records.back().flags, terminal_breakdown);
  EXPECT_TRUE(std::isnan(r.records.back().E_par));
  EXPECT_TRUE(summarize(r.records).breakdown);
}

TEST(Identities, EnergyIdentityResidualIsFirstOrderInTime) {
  std::vector<double> dts, r0, r1, mt;
  for (double dt : {2e-3, 1e-3, 5e-4}) {
    auto s = summarize(benchmark(16, dt, 0.8).records, 0.5);
    dts.push_back(dt);
    r0.push_back(s.max_residual_energy);
    r1.push_back(s.max_residual_higher_1);
    mt.push_back(s.max_mean_trace);
  }
  EXPECT_GE(loglog_slope(dts, r0), 0.9);
  EXPECT_GE(loglog_slope(dts, r1), 0.9);
  EXPECT_GE(loglog_slope(dts, mt), 0.9);
}

TEST(Identities, DecayAndComparisonOnAShortRun) {
  auto recs = benchmark(16, 2e-3, 2.0).records;
  auto s = summarize(recs, 0.5);
  ASSERT_TRUE(s.decay_ok) << s.decay_error;
  EXPECT_GT(s.decay.lambda, 0.0);
  EXPECT_GE(s.decay.r_squared, 0.99);
  EXPECT_TRUE(s.E_phys_monotone);
  EXPECT_GE(s.sandwich_min, 0.5);
  EXPECT_LE(s.sandwich_max, 1.5);
  // flat reference, g = sigma = 1: frakE is half the H^1 part of E_par at j = 0 ... 2
  EXPECT_NEAR(s.comparison_min, 0.5, 1e-12);
  EXPECT_NEAR(s.comparison_max, 0.5, 1e-12);
  EXPECT_LE(s.mass_drift, 1e-12);
}

TEST(LemmaA2, TaylorLimitsAreContinuous) {
  for (double z1 : {-3.0, -0.4, 0.0, 1.2, 4.5}) {
    auto lim = remainder_ratios(z1, 0.0);
    for (double z2 : {1e-3, -1e-3}) {
      auto r = remainder_ratios(z1, z2);
      for (int k = 0; k < 9; ++k)
        EXPECT_NEAR(r[k], lim[k], 1e-2 * std::max(1.0, std::abs(lim[k]))) << remainder_ratio_names()[k] << " z1=" << z1;
    }
  }
}

TEST(LemmaA2, ScanIsFiniteAndStable) {
  auto rep = lemmaA2_scan(-5, 5, 0.05);
  EXPECT_TRUE(rep.finite);
  EXPECT_LT(rep.max_drift, 0.01);
  for (double v : rep.sup) EXPECT_GT(v, 0.0);
}
