#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "convergence.hpp"
#include "corner.hpp"
#include "elliptic.hpp"
#include "mesh.hpp"
#include "stationary.hpp"

namespace muskat {

struct ConvergenceRow {
  int N = 0;
  double error = 0;
  double order = 0;  // pairwise against the previous row (0 for the first)
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double fitted_order = 0;
  double max_green_residual = 0;  // relative discrete Green identity residual over all solves
};

// Mixed problem with Phi = cos(pi x / 2) cosh(pi (y + 1) / 2) on the terrain-following
// mesh under a curved stationary meniscus (identity coefficients, eta = 0).
inline ConvergenceStudy elliptic_convergence(const std::vector<int>& Ns, double gamma_jump = 0.4) {
  constexpr double pi = std::numbers::pi;
  auto exact = [](double x, double y) { return std::cos(pi * x / 2) * std::cosh(pi * (y + 1) / 2); };
  BoundaryFlux wall = [](double x, double y, double nx, double ny) {
    const double gx = -pi / 2 * std::sin(pi * x / 2) * std::cosh(pi * (y + 1) / 2);
    const double gy = pi / 2 * std::cos(pi * x / 2) * std::sinh(pi * (y + 1) / 2);
    return gx * nx + gy * ny;
  };
  PhysParams p;
  p.gamma_jump = gamma_jump;
  const VesselGeometry v{WallFamily::flat, -1.0, 0.0};
  ConvergenceStudy out;
  std::vector<double> ns, es;
  for (int N : Ns) {
    auto st = solve_stationary(p, v, N);
    auto m = build_mesh(v, st.h_s, N, N / 2);
    auto cf = identity_coeffs(m);
    MixedSolver s(cf, m);
    GridFn1D d(N);
    for (int i = 0; i <= N; ++i) d[i] = exact(m.X[m.gamma(i)], m.Y[m.gamma(i)]);
    auto phi = s.solve(d.v, nullptr, &wall);
    ConvergenceRow r;
    r.N = N;
    r.error = l2_error(m, phi, exact);
    if (!out.rows.empty()) r.order = std::log(out.rows.back().error / r.error) / std::log(double(N) / out.rows.back().N);
    out.rows.push_back(r);
    ns.push_back(N);
    es.push_back(r.error);

    // Green identity for the homogeneous problem with the same Dirichlet data.
    auto h = s.solve(d.v);
    auto res = s.gamma_residual(h);
    double boundary = 0;
    for (int i = 0; i <= N; ++i) boundary += d[i] * res[i];
    const double bulk = dirichlet_energy(cf, m, h);
    out.max_green_residual = std::max(out.max_green_residual, std::abs(boundary - bulk) / std::max(1.0, bulk));
  }
  if (Ns.size() >= 2) out.fitted_order = observed_order(ns, es);
  return out;
}

}  // namespace muskat
