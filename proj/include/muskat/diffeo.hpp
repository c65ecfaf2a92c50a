#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "grid.hpp"
#include "mesh.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "stationary.hpp"

namespace muskat {

struct DiffeoBreakdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double smoothstep5(double t) {
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}
inline double smoothstep5_prime(double t) {
  if (t <= 0 || t >= 1) return 0.0;
  return 30.0 * t * t * (t - 1.0) * (t - 1.0);
}

// Samples on x0 + k h, k = 0..M-1, of a function periodic with period M h.
struct PaddedFn {
  std::vector<double> v;
  double x0 = 0.0;
  double h = 0.0;
  int pad = 0;
  double period() const { return v.size() * h; }
};

// Even reflection across x = +-1, quintic taper to zero over the outer half of the pad.
inline PaddedFn extend(const GridFn1D& eta, int pad) {
  const int N = eta.N();
  if (pad < N / 2 || pad > N)
    throw std::invalid_argument("extend: pad must lie in [N/2, N]");
  PaddedFn E;
  E.h = eta.dx();
  E.pad = pad;
  E.x0 = -1.0 - pad * E.h;
  const int M = N + 2 * pad;
  E.v.assign(M, 0.0);
  const double half = 0.5 * pad;
  for (int k = 0; k < M; ++k) {
    int j = k - pad;
    double dist = 0.0;  // in grid steps beyond the interval
    if (j < 0) {
      dist = -j;
      j = -j;
    } else if (j > N) {
      dist = j - N;
      j = 2 * N - j;
    }
    double taper = 1.0;
    if (dist > half) taper = 1.0 - smoothstep5((dist - half) / (pad - half));
    E.v[k] = eta[j] * taper;
  }
  return E;
}

// Harmonic extension of a periodic sample into z < 0: each mode e^{i zeta x} -> e^{i zeta x + |zeta| z}.
class PoissonExtension {
 public:
  PoissonExtension() = default;
  explicit PoissonExtension(const PaddedFn& E) : x0_(E.x0) {
    const int M = static_cast<int>(E.v.size());
    const int K = M / 2;
    zeta1_ = 2.0 * std::numbers::pi / E.period();
    c_.assign(K + 1, {0.0, 0.0});
    for (int k = 0; k <= K; ++k) {
      std::complex<double> s{0.0, 0.0};
      for (int m = 0; m < M; ++m) {
        const double th = -2.0 * std::numbers::pi * static_cast<double>((static_cast<long long>(k) * m) % M) / M;
        s += E.v[m] * std::complex<double>(std::cos(th), std::sin(th));
      }
      const double scale = (k == 0 || (M % 2 == 0 && k == K)) ? 1.0 / M : 2.0 / M;
      c_[k] = s * scale;
    }
    bool any = false;
    for (auto& c : c_)
      if (std::abs(c) > 0) any = true;
    zero_ = !any;
  }

  bool zero() const { return zero_; }

  struct Value {
    double f = 0, fx = 0, fz = 0;
  };

  // Per-column mode phases a_k = c_k e^{i zeta_k (x - x0)}.
  std::vector<std::complex<double>> column(double x) const {
    std::vector<std::complex<double>> a(c_.size());
    const double th = zeta1_ * (x - x0_);
    const std::complex<double> w(std::cos(th), std::sin(th));
    std::complex<double> p(1.0, 0.0);
    for (std::size_t k = 0; k < c_.size(); ++k) {
      if (k % 64 == 0) p = std::polar(1.0, th * static_cast<double>(k));
      a[k] = c_[k] * p;
      p *= w;
    }
    return a;
  }

  Value eval_column(const std::vector<std::complex<double>>& a, double z) const {
    if (z > 1e-12) throw std::logic_error("PoissonExtension: evaluation point above the surface (z > 0)");
    z = std::min(z, 0.0);
    const double q = std::exp(zeta1_ * z);
    int kmax = static_cast<int>(a.size()) - 1;
    if (z < 0) kmax = std::min<int>(kmax, static_cast<int>(std::ceil(42.0 / (zeta1_ * -z))) + 1);
    double f = 0, fz = 0, fx = 0;
    for (int k = kmax; k >= 0; --k) {
      f = f * q + a[k].real();
      fz = fz * q + k * a[k].real();
      fx = fx * q + k * a[k].imag();
    }
    return {f, zeta1_ * fx * -1.0, zeta1_ * fz};
  }

  Value eval(double x, double z) const { return eval_column(column(x), z); }

  double zeta1() const { return zeta1_; }

 private:
  double x0_ = 0.0, zeta1_ = 1.0;
  std::vector<std::complex<double>> c_;
  bool zero_ = true;
};

// Cutoff xi(y): 0 below y_lo = max h_w + d/4, 1 above y_hi = min h_s - d/4.
struct Cutoff {
  double y_lo = 0, y_hi = 1;
  double operator()(double y) const { return smoothstep5((y - y_lo) / (y_hi - y_lo)); }
  double prime(double y) const { return smoothstep5_prime((y - y_lo) / (y_hi - y_lo)) / (y_hi - y_lo); }
};

inline Cutoff cutoff_xi(const std::vector<double>& h_w, const std::vector<double>& h_s) {
  const double top_min = *std::min_element(h_s.begin(), h_s.end());
  const double bot_max = *std::max_element(h_w.begin(), h_w.end());
  const double d = top_min - bot_max;
  if (!(d > 0)) throw GeometryError("cutoff_xi: min h_s must exceed max h_w");
  return {bot_max + 0.25 * d, top_min - 0.25 * d};
}

inline Cutoff cutoff_xi(const Mesh& m) { return cutoff_xi(m.bottom, m.top); }

inline Cutoff cutoff_xi(const VesselGeometry& vessel, const GridFn1D& h_s) {
  return cutoff_xi(vessel.sample(h_s.N()).v, h_s.v);
}

// Point samples of eta-dagger and its physical gradient.
struct ExtSamples {
  std::vector<double> val, dx, dy;
};

struct HarmonicExtension {
  PoissonExtension P;
  ExtSamples nodes;  // on mesh nodes
  ExtSamples quad;   // on Gauss points
  bool zero = true;
};

namespace detail {
// Surface slope used in the chain rule at a Gauss point or node.
inline ExtSamples sample_columns(const PoissonExtension& P, const Mesh& m, const std::vector<double>& px,
                                 const std::vector<double>& py, const std::vector<double>& slope,
                                 const std::vector<int>& col_start) {
  const int n = static_cast<int>(px.size());
  ExtSamples s;
  s.val.assign(n, 0.0);
  s.dx.assign(n, 0.0);
  s.dy.assign(n, 0.0);
  const int ncol = static_cast<int>(col_start.size()) - 1;
  parallel_for(ncol, [&](int c) {
    const int b = col_start[c], e = col_start[c + 1];
    if (b == e) return;
    auto a = P.column(px[b]);
    for (int k = b; k < e; ++k) {
      const double z = py[k] - m.surface(px[k]);
      auto v = P.eval_column(a, z);
      s.val[k] = v.f;
      s.dx[k] = v.fx - slope[k] * v.fz;
      s.dy[k] = v.fz;
    }
  });
  return s;
}
}  // namespace detail

// Evaluates eta-dagger(x,y) = (P * E eta)(x, y - h_s(x)) at nodes and Gauss points of the mesh.
// Points below the cutoff support are skipped (their coefficients do not depend on eta-dagger).
inline HarmonicExtension poisson_extend(const PaddedFn& Eeta, const Mesh& m, const Cutoff* xi = nullptr) {
  HarmonicExtension H;
  H.P = PoissonExtension(Eeta);
  H.zero = H.P.zero();
  const int nn = m.nodes(), nq = m.quad_points();
  if (H.zero) {
    H.nodes = {std::vector<double>(nn, 0.0), std::vector<double>(nn, 0.0), std::vector<double>(nn, 0.0)};
    H.quad = {std::vector<double>(nq, 0.0), std::vector<double>(nq, 0.0), std::vector<double>(nq, 0.0)};
    return H;
  }
  auto skip = [&](double y) { return xi && y < xi->y_lo; };
  // Group points by abscissa so the mode phases are computed once per column.
  {
    std::vector<double> px, py, sl;
    std::vector<int> start{0}, where;
    for (int i = 0; i <= m.nx; ++i) {
      for (int j = 0; j <= m.ny; ++j) {
        const int n = m.idx(i, j);
        if (skip(m.Y[n])) continue;
        px.push_back(m.X[n]);
        py.push_back(m.Y[n]);
        sl.push_back(m.surface_slope_node(i));
        where.push_back(n);
      }
      start.push_back(static_cast<int>(px.size()));
    }
    auto s = detail::sample_columns(H.P, m, px, py, sl, start);
    H.nodes = {std::vector<double>(nn, 0.0), std::vector<double>(nn, 0.0), std::vector<double>(nn, 0.0)};
    for (std::size_t k = 0; k < where.size(); ++k) {
      H.nodes.val[where[k]] = s.val[k];
      H.nodes.dx[where[k]] = s.dx[k];
      H.nodes.dy[where[k]] = s.dy[k];
    }
  }
  {
    std::vector<double> px, py, sl;
    std::vector<int> start{0}, where;
    for (int i = 0; i < m.nx; ++i)
      for (int a = 0; a < 2; ++a) {
        for (int j = 0; j < m.ny; ++j)
          for (int b = 0; b < 2; ++b) {
            const int q = 4 * (j * m.nx + i) + 2 * b + a;
            if (skip(m.qy[q])) continue;
            px.push_back(m.qx[q]);
            py.push_back(m.qy[q]);
            sl.push_back(m.surface_slope_cell(i));
            where.push_back(q);
          }
        start.push_back(static_cast<int>(px.size()));
      }
    auto s = detail::sample_columns(H.P, m, px, py, sl, start);
    H.quad = {std::vector<double>(nq, 0.0), std::vector<double>(nq, 0.0), std::vector<double>(nq, 0.0)};
    for (std::size_t k = 0; k < where.size(); ++k) {
      H.quad.val[where[k]] = s.val[k];
      H.quad.dx[where[k]] = s.dx[k];
      H.quad.dy[where[k]] = s.dy[k];
    }
  }
  return H;
}

// Flow coefficients at a set of points. A = [[a11, a12], [a12, a22]], Sigma = [[1, s12], [0, s22]].
struct CoeffSamples {
  std::vector<double> detJ, a11, a12, a22, s12, s22, xi;
  int size() const { return static_cast<int>(detJ.size()); }
};

struct CoeffFields {
  CoeffSamples quad;
  CoeffSamples nodes;
  bool identity = true;
  double detJ_min = 1.0, detJ_max = 1.0;
};

namespace detail {
inline CoeffSamples coeffs_from(const ExtSamples& e, const std::vector<double>& ys, const Cutoff& xi) {
  const int n = static_cast<int>(ys.size());
  CoeffSamples c;
  for (auto* v : {&c.detJ, &c.a11, &c.a12, &c.a22, &c.s12, &c.s22, &c.xi}) v->resize(n);
  for (int k = 0; k < n; ++k) {
    const double x = xi(ys[k]), xp = xi.prime(ys[k]);
    const double J = 1.0 + xp * e.val[k] + x * e.dy[k];
    const double p = x * e.dx[k];
    c.xi[k] = x;
    c.detJ[k] = J;
    c.a11[k] = J;
    c.a12[k] = -p;
    c.a22[k] = (1.0 + p * p) / J;
    c.s12[k] = -p / J;
    c.s22[k] = 1.0 / J;
  }
  return c;
}
}  // namespace detail

inline CoeffFields identity_coeffs(const Mesh& m) {
  auto ident = [](int n, const Mesh& mm, bool nodes) {
    CoeffSamples c;
    c.detJ.assign(n, 1.0);
    c.a11.assign(n, 1.0);
    c.a12.assign(n, 0.0);
    c.a22.assign(n, 1.0);
    c.s12.assign(n, 0.0);
    c.s22.assign(n, 1.0);
    auto xi = cutoff_xi(mm);
    c.xi.resize(n);
    for (int k = 0; k < n; ++k) c.xi[k] = xi(nodes ? mm.Y[k] : mm.qy[k]);
    return c;
  };
  CoeffFields f;
  f.quad = ident(m.quad_points(), m, false);
  f.nodes = ident(m.nodes(), m, true);
  return f;
}

// Builds Sigma, A, detJ; throws DiffeoBreakdown when detJ leaves [detJ_lo, detJ_hi].
inline CoeffFields assemble_coeffs(const HarmonicExtension& ext, const Cutoff& xi, const Mesh& m,
                                   double detJ_lo = 0.25, double detJ_hi = 4.0) {
  CoeffFields f;
  f.identity = ext.zero;
  f.quad = detail::coeffs_from(ext.quad, m.qy, xi);
  f.nodes = detail::coeffs_from(ext.nodes, m.Y, xi);
  double lo = 1e300, hi = -1e300;
  for (const auto* s : {&f.quad, &f.nodes})
    for (double J : s->detJ) {
      lo = std::min(lo, J);
      hi = std::max(hi, J);
    }
  f.detJ_min = lo;
  f.detJ_max = hi;
  if (!(lo >= detJ_lo && hi <= detJ_hi)) {
    std::ostringstream os;
    os << "diffeomorphism breakdown: detJ in [" << lo << ", " << hi << "] outside [" << detJ_lo << ", " << detJ_hi
       << "]";
    throw DiffeoBreakdown(os.str());
  }
  return f;
}

// Convenience: eta on the Gamma grid -> coefficients on the mesh.
inline CoeffFields coeffs_for(const GridFn1D& eta, const Mesh& m, double detJ_lo = 0.25, double detJ_hi = 4.0) {
  if (eta.N() != m.nx) throw std::invalid_argument("coeffs_for: eta grid does not match the mesh");
  const auto xi = cutoff_xi(m);
  bool zero = true;
  for (double a : eta.v)
    if (a != 0.0) zero = false;
  if (zero) return identity_coeffs(m);
  const auto ext = poisson_extend(extend(eta, eta.N()), m, &xi);
  return assemble_coeffs(ext, xi, m, detJ_lo, detJ_hi);
}

}  // namespace muskat
