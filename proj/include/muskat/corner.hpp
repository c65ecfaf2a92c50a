#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "convergence.hpp"
#include "diffeo.hpp"
#include "elliptic.hpp"
#include "mesh.hpp"

namespace muskat {

// Wedge benchmark: straight free surface meeting the vertical wall x = -1 at the
// interior angle omega, exact solution r^a cos(a (theta + pi/2)) with a = pi / omega.
struct CornerProblem {
  double omega;
  double alpha() const { return std::numbers::pi / omega; }
  double slope() const { return -1.0 / std::tan(omega); }
  double top(double x) const { return slope() * (x + 1.0); }
  double bottom() const { return std::min(0.0, top(1.0)) - 1.5; }

  double exact(double x, double y) const {
    const double r = std::hypot(x + 1.0, y), th = std::atan2(y, x + 1.0);
    return std::pow(r, alpha()) * std::cos(alpha() * (th + 0.5 * std::numbers::pi));
  }
  void gradient(double x, double y, double& gx, double& gy) const {
    const double a = alpha(), r = std::hypot(x + 1.0, y), th = std::atan2(y, x + 1.0);
    if (r == 0.0) {
      gx = gy = 0.0;
      return;
    }
    const double ra = a * std::pow(r, a - 1.0), ph = a * (th + 0.5 * std::numbers::pi) - th;
    gx = ra * std::cos(ph);
    gy = -ra * std::sin(ph);
  }
};

// Mesh graded toward the corner in x (geometric ratio x_grading) and toward the surface in s.
inline Mesh corner_mesh(const CornerProblem& cp, int Nx, int Ny, double x_grading = 1.0, double s_grading = 1.0) {
  auto t = graded_levels(Nx, x_grading, false);
  std::vector<double> xs(Nx + 1), top(Nx + 1), bot(Nx + 1, cp.bottom());
  for (int i = 0; i <= Nx; ++i) {
    xs[i] = -1.0 + 2.0 * (1.0 - t[Nx - i]);
    top[i] = cp.top(xs[i]);
  }
  return build_mesh_general(xs, top, bot, graded_levels(Ny, s_grading, false));
}

struct CornerResult {
  double exponent = 0;  // fitted exponent of Phi near the corner
  double l2 = 0;        // L2 error (mean-adjusted)
  int samples = 0;
};

// Solves the pure Neumann problem with the exact flux on every boundary and fits
// log |grad Phi_h| against log r over r in [r_lo, r_hi].
inline CornerResult solve_corner(const CornerProblem& cp, const Mesh& m, double r_lo, double r_hi) {
  auto cf = identity_coeffs(m);
  BoundaryFlux flux = [&](double x, double y, double nx, double ny) {
    double gx, gy;
    cp.gradient(x, y, gx, gy);
    return gx * nx + gy * ny;
  };
  NeumannData data;
  data.g1 = &flux;
  data.g2 = &flux;
  auto res = solve_neumann(cf, m, data, 1e-10, 1e-4);

  CornerResult out;
  double ex = 0;
  for (int q = 0; q < m.quad_points(); ++q) ex += m.qw[q] * cp.exact(m.qx[q], m.qy[q]);
  out.l2 = l2_error(m, res.phi, [&](double x, double y) { return cp.exact(x, y); }, ex / mesh_area(m));

  auto g = gauss_gradients(m, res.phi);
  std::vector<double> rs, gs;
  for (int q = 0; q < m.quad_points(); ++q) {
    const double r = std::hypot(m.qx[q] + 1.0, m.qy[q]);
    if (r < r_lo || r > r_hi) continue;
    rs.push_back(r);
    gs.push_back(std::hypot(g[2 * q], g[2 * q + 1]));
  }
  out.samples = static_cast<int>(rs.size());
  if (out.samples < 2) throw std::invalid_argument("solve_corner: fit window contains too few points");
  out.exponent = loglog_slope(rs, gs) + 1.0;
  return out;
}

}  // namespace muskat
