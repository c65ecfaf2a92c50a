#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "model.hpp"
#include "stationary.hpp"

namespace muskat {

// Terrain-following tensor mesh (x, s) -> (x, h_w(x) + s (h_s(x) - h_w(x))).
// Node (i, j) has index j*(nx+1) + i; j = ny is the free surface Gamma.
struct Mesh {
  int nx = 0, ny = 0;
  std::vector<double> xs;      // nx+1 abscissae
  std::vector<double> ss;      // ny+1 logical levels in [0,1]
  std::vector<double> top;     // h_s at xs
  std::vector<double> bottom;  // h_w at xs
  std::vector<double> X, Y;    // node coordinates

  // 2x2 Gauss data, 4 points per cell, cell c = j*nx + i.
  std::vector<double> qx, qy, qw;   // physical point and weight * |det F|
  std::vector<double> qgrad;        // [pt][node a][2]
  std::vector<double> qxi_loc;      // logical x within the cell (for the surface slope)

  int nodes() const { return (nx + 1) * (ny + 1); }
  int cells() const { return nx * ny; }
  int idx(int i, int j) const { return j * (nx + 1) + i; }
  int gamma(int i) const { return idx(i, ny); }
  bool on_gamma(int n) const { return n / (nx + 1) == ny; }
  std::array<int, 4> cell_nodes(int c) const {
    const int i = c % nx, j = c / nx;
    return {idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)};
  }
  int quad_points() const { return 4 * cells(); }

  // Piecewise-linear surface between Gamma nodes and its slope.
  int column_of(double x) const {
    int lo = 0, hi = nx;
    while (hi - lo > 1) {
      const int m = (lo + hi) / 2;
      if (xs[m] <= x) lo = m; else hi = m;
    }
    return lo;
  }
  double surface(double x) const {
    const int e = column_of(x);
    const double t = (x - xs[e]) / (xs[e + 1] - xs[e]);
    return top[e] + t * (top[e + 1] - top[e]);
  }
  double surface_slope_cell(int e) const { return (top[e + 1] - top[e]) / (xs[e + 1] - xs[e]); }
  double surface_slope_node(int i) const {
    if (i == 0) return surface_slope_cell(0);
    if (i == nx) return surface_slope_cell(nx - 1);
    return 0.5 * (surface_slope_cell(i - 1) + surface_slope_cell(i));
  }
};

namespace detail {
inline constexpr double gauss2[2] = {-0.57735026918962576451, 0.57735026918962576451};

// Bilinear shape functions on the reference square, node order (-1,-1),(1,-1),(1,1),(-1,1).
inline void q1_shape(double r, double s, double N[4], double dNr[4], double dNs[4]) {
  const double rr[4] = {-1, 1, 1, -1}, sv[4] = {-1, -1, 1, 1};
  for (int a = 0; a < 4; ++a) {
    N[a] = 0.25 * (1 + rr[a] * r) * (1 + sv[a] * s);
    dNr[a] = 0.25 * rr[a] * (1 + sv[a] * s);
    dNs[a] = 0.25 * sv[a] * (1 + rr[a] * r);
  }
}

// Physical gradients of the 4 shape functions at (r,s); returns det F.
inline double q1_gradients(const double cx[4], const double cy[4], double r, double s, double N[4],
                           double gx[4], double gy[4]) {
  double dNr[4], dNs[4];
  q1_shape(r, s, N, dNr, dNs);
  double xr = 0, xs = 0, yr = 0, ys = 0;
  for (int a = 0; a < 4; ++a) {
    xr += dNr[a] * cx[a];
    xs += dNs[a] * cx[a];
    yr += dNr[a] * cy[a];
    ys += dNs[a] * cy[a];
  }
  const double det = xr * ys - xs * yr;
  for (int a = 0; a < 4; ++a) {
    gx[a] = (ys * dNr[a] - yr * dNs[a]) / det;
    gy[a] = (-xs * dNr[a] + xr * dNs[a]) / det;
  }
  return det;
}
}  // namespace detail

inline std::vector<double> graded_levels(int n, double grading, bool both_ends) {
  // grading = 1 is uniform; > 1 clusters nodes toward the end(s) geometrically.
  std::vector<double> t(n + 1);
  if (grading == 1.0) {
    for (int k = 0; k <= n; ++k) t[k] = static_cast<double>(k) / n;
    return t;
  }
  auto one_sided = [grading](int m) {
    std::vector<double> w(m);
    double tot = 0;
    for (int k = 0; k < m; ++k) {
      w[k] = std::pow(grading, -static_cast<double>(k));
      tot += w[k];
    }
    std::vector<double> pos(m + 1, 0.0);
    // smallest cells at the end (position 1)
    for (int k = 0; k < m; ++k) pos[k + 1] = pos[k] + w[m - 1 - k] / tot;
    pos[m] = 1.0;
    return pos;
  };
  if (!both_ends) return one_sided(n);
  if (n % 2) throw std::invalid_argument("graded_levels: two-sided grading needs an even count");
  auto half = one_sided(n / 2);
  for (int k = 0; k <= n / 2; ++k) {
    t[n / 2 + k] = 0.5 + 0.5 * half[k];
    t[n / 2 - k] = 0.5 - 0.5 * half[k];
  }
  return t;
}

inline Mesh build_mesh_general(const std::vector<double>& xs, const std::vector<double>& top,
                               const std::vector<double>& bottom, const std::vector<double>& levels) {
  Mesh m;
  m.nx = static_cast<int>(xs.size()) - 1;
  m.ny = static_cast<int>(levels.size()) - 1;
  if (m.nx < 1 || m.ny < 1) throw std::invalid_argument("build_mesh: need at least one cell");
  m.xs = xs;
  m.ss = levels;
  m.top = top;
  m.bottom = bottom;
  for (int i = 0; i <= m.nx; ++i)
    if (!(top[i] - bottom[i] > 0)) {
      std::ostringstream os;
      os << "build_mesh: layer thickness " << top[i] - bottom[i] << " <= 0 at x=" << xs[i];
      throw GeometryError(os.str());
    }
  m.X.resize(m.nodes());
  m.Y.resize(m.nodes());
  for (int j = 0; j <= m.ny; ++j)
    for (int i = 0; i <= m.nx; ++i) {
      m.X[m.idx(i, j)] = xs[i];
      m.Y[m.idx(i, j)] = bottom[i] + levels[j] * (top[i] - bottom[i]);
    }
  const int nq = m.quad_points();
  m.qx.resize(nq);
  m.qy.resize(nq);
  m.qw.resize(nq);
  m.qgrad.resize(static_cast<std::size_t>(nq) * 8);
  m.qxi_loc.resize(nq);
  for (int c = 0; c < m.cells(); ++c) {
    auto nd = m.cell_nodes(c);
    double cx[4], cy[4];
    for (int a = 0; a < 4; ++a) {
      cx[a] = m.X[nd[a]];
      cy[a] = m.Y[nd[a]];
    }
    int q = 4 * c;
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a, ++q) {
        double N[4], gx[4], gy[4];
        const double det = detail::q1_gradients(cx, cy, detail::gauss2[a], detail::gauss2[b], N, gx, gy);
        if (!(det > 0)) throw GeometryError("build_mesh: non-positive cell Jacobian");
        double px = 0, py = 0;
        for (int k = 0; k < 4; ++k) {
          px += N[k] * cx[k];
          py += N[k] * cy[k];
          m.qgrad[8 * q + 2 * k] = gx[k];
          m.qgrad[8 * q + 2 * k + 1] = gy[k];
        }
        m.qx[q] = px;
        m.qy[q] = py;
        m.qw[q] = det;  // unit Gauss weights
        m.qxi_loc[q] = detail::gauss2[a];
      }
  }
  return m;
}

inline Mesh build_mesh(const VesselGeometry& vessel, const GridFn1D& h_s, int Nx, int Ny, double x_grading = 1.0,
                       double s_grading = 1.0) {
  if (h_s.N() != Nx) throw std::invalid_argument("build_mesh: h_s must be sampled on the Nx grid");
  std::vector<double> xs(Nx + 1), top(Nx + 1), bottom(Nx + 1);
  auto tx = graded_levels(Nx, x_grading, true);
  for (int i = 0; i <= Nx; ++i) {
    xs[i] = -1.0 + 2.0 * tx[i];
    top[i] = h_s[i];
    bottom[i] = vessel.hw(xs[i]);
  }
  if (x_grading != 1.0) {
    // h_s is only known on the uniform grid; interpolate linearly.
    for (int i = 0; i <= Nx; ++i) {
      const double u = (xs[i] + 1.0) / h_s.dx();
      int k = std::min(Nx - 1, std::max(0, static_cast<int>(std::floor(u))));
      const double t = u - k;
      top[i] = (1 - t) * h_s[k] + t * h_s[k + 1];
    }
  }
  return build_mesh_general(xs, top, bottom, graded_levels(Ny, s_grading, false));
}

// Total area of the cells (sum of quadrature weights).
inline double mesh_area(const Mesh& m) {
  double a = 0;
  for (double w : m.qw) a += w;
  return a;
}

}  // namespace muskat
