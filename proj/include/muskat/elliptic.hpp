#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "diffeo.hpp"
#include "grid.hpp"
#include "mesh.hpp"
#include "parallel.hpp"

namespace muskat {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DiscreteField {
  std::vector<double> v;
  DiscreteField() = default;
  explicit DiscreteField(int n, double fill = 0.0) : v(n, fill) {}
  int size() const { return static_cast<int>(v.size()); }
  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }
};

// Boundary flux density per unit arc length, given the point and outward unit normal.
using BoundaryFlux = std::function<double(double x, double y, double nx, double ny)>;

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Lumped trapezoid weights of the Gamma abscissae.
inline Vec gamma_weights(const Mesh& m) {
  Vec w(m.nx + 1);
  for (int i = 0; i <= m.nx; ++i) {
    const double l = i > 0 ? m.xs[i] - m.xs[i - 1] : 0.0;
    const double r = i < m.nx ? m.xs[i + 1] - m.xs[i] : 0.0;
    w[i] = 0.5 * (l + r);
  }
  return w;
}

inline SpMat assemble_stiffness(const CoeffFields& cf, const Mesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m.cells()) * 16);
  const auto& A = cf.quad;
  for (int c = 0; c < m.cells(); ++c) {
    auto nd = m.cell_nodes(c);
    double ke[4][4] = {};
    for (int q = 4 * c; q < 4 * c + 4; ++q) {
      const double* G = &m.qgrad[8 * q];
      const double w = m.qw[q];
      const double a11 = A.a11[q], a12 = A.a12[q], a22 = A.a22[q];
      for (int a = 0; a < 4; ++a) {
        const double fx = a11 * G[2 * a] + a12 * G[2 * a + 1];
        const double fy = a12 * G[2 * a] + a22 * G[2 * a + 1];
        for (int b = 0; b < 4; ++b) ke[a][b] += w * (fx * G[2 * b] + fy * G[2 * b + 1]);
      }
    }
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) trip.emplace_back(nd[a], nd[b], ke[a][b]);
  }
  SpMat K(m.nodes(), m.nodes());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

// Consistent load of a nodal source field: F_i = int f_h phi_i.
inline Vec volume_load(const Mesh& m, const std::vector<double>& f) {
  Vec F = Vec::Zero(m.nodes());
  for (int c = 0; c < m.cells(); ++c) {
    auto nd = m.cell_nodes(c);
    int q = 4 * c;
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a, ++q) {
        double N[4], dr[4], ds[4];
        detail::q1_shape(detail::gauss2[a], detail::gauss2[b], N, dr, ds);
        double fq = 0;
        for (int k = 0; k < 4; ++k) fq += N[k] * f[nd[k]];
        for (int k = 0; k < 4; ++k) F[nd[k]] += m.qw[q] * fq * N[k];
      }
  }
  return F;
}

enum class BoundaryPart { gamma, bottom, left, right };

// Boundary segments (node pairs) of a part, oriented with the domain on the left.
inline std::vector<std::pair<int, int>> boundary_segments(const Mesh& m, BoundaryPart p) {
  std::vector<std::pair<int, int>> s;
  switch (p) {
    case BoundaryPart::gamma:
      for (int i = m.nx; i > 0; --i) s.emplace_back(m.idx(i, m.ny), m.idx(i - 1, m.ny));
      break;
    case BoundaryPart::bottom:
      for (int i = 0; i < m.nx; ++i) s.emplace_back(m.idx(i, 0), m.idx(i + 1, 0));
      break;
    case BoundaryPart::right:
      for (int j = 0; j < m.ny; ++j) s.emplace_back(m.idx(m.nx, j), m.idx(m.nx, j + 1));
      break;
    case BoundaryPart::left:
      for (int j = m.ny; j > 0; --j) s.emplace_back(m.idx(0, j), m.idx(0, j - 1));
      break;
  }
  return s;
}

// Adds int_part weight(x,y) * g(x,y,n) phi_i ds with 2-point Gauss per segment.
// weight is the nodal detJ on the wall (1 when null).
inline void add_boundary_load(Vec& F, const Mesh& m, BoundaryPart p, const BoundaryFlux& g,
                              const std::vector<double>* nodal_weight = nullptr) {
  for (auto [a, b] : boundary_segments(m, p)) {
    const double tx = m.X[b] - m.X[a], ty = m.Y[b] - m.Y[a];
    const double len = std::hypot(tx, ty);
    const double nxv = ty / len, nyv = -tx / len;
    for (double gp : detail::gauss2) {
      const double t = 0.5 * (1 + gp);
      const double x = m.X[a] + t * tx, y = m.Y[a] + t * ty;
      double wgt = 1.0;
      if (nodal_weight) wgt = (1 - t) * (*nodal_weight)[a] + t * (*nodal_weight)[b];
      const double val = 0.5 * len * wgt * g(x, y, nxv, nyv);
      F[a] += (1 - t) * val;
      F[b] += t * val;
    }
  }
}

// Adds int_I g1(x) phi_i dx on Gamma for nodal per-dx flux density g1 (P1 in x).
inline void add_gamma_density_load(Vec& F, const Mesh& m, const std::vector<double>& g1) {
  for (int e = 0; e < m.nx; ++e) {
    const double h = m.xs[e + 1] - m.xs[e];
    const int a = m.gamma(e), b = m.gamma(e + 1);
    F[a] += h * (g1[e] / 3.0 + g1[e + 1] / 6.0);
    F[b] += h * (g1[e] / 6.0 + g1[e + 1] / 3.0);
  }
}

// Mixed problem: Dirichlet on Gamma, natural conormal condition on Gamma_w.
// Free nodes are the first (nx+1)*ny indices; Gamma nodes are the last row.
class MixedSolver {
 public:
  MixedSolver(const CoeffFields& cf, const Mesh& m) : m_(&m), cf_(&cf) {
    K_ = assemble_stiffness(cf, m);
    nf_ = (m.nx + 1) * m.ny;
    ng_ = m.nx + 1;
    Kff_ = K_.topLeftCorner(nf_, nf_);
    Kfg_ = K_.topRightCorner(nf_, ng_);
    Kgf_ = K_.bottomLeftCorner(ng_, nf_);
    Kgg_ = Mat(SpMat(K_.bottomRightCorner(ng_, ng_)));
    llt_.compute(Kff_);
    if (llt_.info() != Eigen::Success) throw SolverError("mixed solve: factorization failed (singular system)");
    W_ = gamma_weights(m);
  }

  const Mesh& mesh() const { return *m_; }
  const CoeffFields& coeffs() const { return *cf_; }
  const SpMat& stiffness() const { return K_; }
  const Vec& weights() const { return W_; }

  // Full nodal field for Gamma data d, nodal source f (optional), wall flux (optional).
  DiscreteField solve(const std::vector<double>& d, const std::vector<double>* f = nullptr,
                      const BoundaryFlux* wall = nullptr) const {
    if (static_cast<int>(d.size()) != ng_) throw std::invalid_argument("mixed solve: Dirichlet data size mismatch");
    Vec G = Vec::Zero(m_->nodes());
    if (f) G -= volume_load(*m_, *f);
    if (wall) add_wall_load(G, *wall);
    Vec dg = Eigen::Map<const Vec>(d.data(), ng_);
    Vec rhs = G.head(nf_) - Kfg_ * dg;
    Vec uf = llt_.solve(rhs);
    if (llt_.info() != Eigen::Success) throw SolverError("mixed solve: back-substitution failed");
    DiscreteField out(m_->nodes());
    for (int k = 0; k < nf_; ++k) out[k] = uf[k];
    for (int i = 0; i < ng_; ++i) out[nf_ + i] = d[i];
    last_load_ = G;
    return out;
  }

  // Gamma residual r_i = int_Gamma (A grad Phi . n) phi_i ds for a field solved by solve().
  Vec gamma_residual(const DiscreteField& phi) const {
    Vec p = Eigen::Map<const Vec>(phi.v.data(), m_->nodes());
    Vec r = K_.bottomRows(ng_) * p;
    if (last_load_.size() == m_->nodes()) r -= last_load_.tail(ng_);
    return r;
  }

  // Conormal flux density per unit x on Gamma (lumped recovery).
  std::vector<double> gamma_flux(const DiscreteField& phi) const {
    Vec r = gamma_residual(phi);
    std::vector<double> u(ng_);
    for (int i = 0; i < ng_; ++i) u[i] = r[i] / W_[i];
    return u;
  }

  // Solves K_ff X = K_fg; cached. Needed for the Schur complement.
  const Mat& harmonic_lift() const {
    if (X_.size() == 0) {
      Mat B = Mat(Kfg_);
      X_.resize(nf_, ng_);
      const int chunks = std::min(ng_, std::max(1, worker_count()));
      parallel_for(chunks, [&](int c) {
        const int b = c * ng_ / chunks, e = (c + 1) * ng_ / chunks;
        if (e > b) X_.middleCols(b, e - b) = llt_.solve(B.middleCols(b, e - b));
      });
    }
    return X_;
  }

  // S = K_gg - K_gf K_ff^{-1} K_fg, the weak DN form (symmetrized).
  Mat schur() const {
    const Mat& X = harmonic_lift();
    Mat S = Kgg_ - Kgf_ * X;
    return 0.5 * (S + S.transpose());
  }

  // Interior values from Gamma values for f = 0, zero wall flux.
  DiscreteField lift(const std::vector<double>& d) const {
    const Mat& X = harmonic_lift();
    Vec dg = Eigen::Map<const Vec>(d.data(), ng_);
    Vec uf = -X * dg;
    last_load_.resize(0);
    DiscreteField out(m_->nodes());
    for (int k = 0; k < nf_; ++k) out[k] = uf[k];
    for (int i = 0; i < ng_; ++i) out[nf_ + i] = d[i];
    return out;
  }

 private:
  void add_wall_load(Vec& G, const BoundaryFlux& wall) const {
    const auto* w = &cf_->nodes.detJ;
    add_boundary_load(G, *m_, BoundaryPart::bottom, wall, w);
    add_boundary_load(G, *m_, BoundaryPart::left, wall, w);
    add_boundary_load(G, *m_, BoundaryPart::right, wall, w);
  }

  const Mesh* m_;
  const CoeffFields* cf_;
  SpMat K_, Kff_, Kfg_, Kgf_;
  Mat Kgg_;
  int nf_ = 0, ng_ = 0;
  Eigen::SimplicialLDLT<SpMat> llt_;
  Vec W_;
  mutable Vec last_load_;
  mutable Mat X_;
};

inline DiscreteField solve_mixed(const CoeffFields& cf, const Mesh& m, const GridFn1D& dirichlet,
                                 const std::vector<double>* f = nullptr, const BoundaryFlux* wall = nullptr) {
  MixedSolver s(cf, m);
  return s.solve(dirichlet.v, f, wall);
}

inline GridFn1D dn_apply(const MixedSolver& s, const GridFn1D& dirichlet) {
  auto phi = s.solve(dirichlet.v);
  return GridFn1D(s.gamma_flux(phi));
}

inline GridFn1D dn_apply(const CoeffFields& cf, const Mesh& m, const GridFn1D& dirichlet) {
  MixedSolver s(cf, m);
  return dn_apply(s, dirichlet);
}

// Dense DN matrix: flux = DN * data. W * DN equals the symmetric Schur complement.
struct DNMatrix {
  Mat DN;
  Mat S;  // W * DN
  Vec W;
  long long snapshot_id = 0;
};

inline DNMatrix dn_assemble(const MixedSolver& s, long long snapshot_id = 0) {
  DNMatrix d;
  d.S = s.schur();
  d.W = s.weights();
  d.DN = d.W.cwiseInverse().asDiagonal() * d.S;
  d.snapshot_id = snapshot_id;
  return d;
}

inline DNMatrix dn_assemble(const CoeffFields& cf, const Mesh& m) { return dn_assemble(MixedSolver(cf, m)); }

// Bulk dissipation int detJ |Sigma grad Phi|^2 by Gauss quadrature.
inline double dirichlet_energy(const CoeffFields& cf, const Mesh& m, const DiscreteField& phi) {
  double e = 0;
  for (int c = 0; c < m.cells(); ++c) {
    auto nd = m.cell_nodes(c);
    for (int q = 4 * c; q < 4 * c + 4; ++q) {
      const double* G = &m.qgrad[8 * q];
      double gx = 0, gy = 0;
      for (int a = 0; a < 4; ++a) {
        gx += phi[nd[a]] * G[2 * a];
        gy += phi[nd[a]] * G[2 * a + 1];
      }
      const double sx = gx + cf.quad.s12[q] * gy, sy = cf.quad.s22[q] * gy;
      e += m.qw[q] * cf.quad.detJ[q] * (sx * sx + sy * sy);
    }
  }
  return e;
}

// Gradient of a nodal field at every Gauss point: [2*q], [2*q+1].
inline std::vector<double> gauss_gradients(const Mesh& m, const DiscreteField& phi) {
  std::vector<double> g(2 * static_cast<std::size_t>(m.quad_points()));
  for (int c = 0; c < m.cells(); ++c) {
    auto nd = m.cell_nodes(c);
    for (int q = 4 * c; q < 4 * c + 4; ++q) {
      const double* G = &m.qgrad[8 * q];
      double gx = 0, gy = 0;
      for (int a = 0; a < 4; ++a) {
        gx += phi[nd[a]] * G[2 * a];
        gy += phi[nd[a]] * G[2 * a + 1];
      }
      g[2 * q] = gx;
      g[2 * q + 1] = gy;
    }
  }
  return g;
}

// L2 error against a closed form, 3x3 Gauss per cell.
inline double l2_error(const Mesh& m, const DiscreteField& phi, const std::function<double(double, double)>& exact,
                       double shift = 0.0) {
  static const double g3[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static const double w3[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double e = 0;
  for (int c = 0; c < m.cells(); ++c) {
    auto nd = m.cell_nodes(c);
    double cx[4], cy[4];
    for (int a = 0; a < 4; ++a) {
      cx[a] = m.X[nd[a]];
      cy[a] = m.Y[nd[a]];
    }
    for (int b = 0; b < 3; ++b)
      for (int a = 0; a < 3; ++a) {
        double N[4], gx[4], gy[4];
        const double det = detail::q1_gradients(cx, cy, g3[a], g3[b], N, gx, gy);
        double x = 0, y = 0, u = 0;
        for (int k = 0; k < 4; ++k) {
          x += N[k] * cx[k];
          y += N[k] * cy[k];
          u += N[k] * phi[nd[k]];
        }
        const double d = u + shift - exact(x, y);
        e += w3[a] * w3[b] * det * d * d;
      }
  }
  return std::sqrt(e);
}

// Integral of a nodal field (bilinear interpolant) over the mesh.
inline double field_integral(const Mesh& m, const DiscreteField& phi) {
  double s = 0;
  for (int c = 0; c < m.cells(); ++c) {
    auto nd = m.cell_nodes(c);
    int q = 4 * c;
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a, ++q) {
        double N[4], dr[4], ds[4];
        detail::q1_shape(detail::gauss2[a], detail::gauss2[b], N, dr, ds);
        double u = 0;
        for (int k = 0; k < 4; ++k) u += N[k] * phi[nd[k]];
        s += m.qw[q] * u;
      }
  }
  return s;
}

struct NeumannResult {
  DiscreteField phi;
  double compatibility_mismatch = 0.0;  // int f - boundary flux, before correction
  double correction = 0.0;              // constant removed from the source
};

struct NeumannData {
  const std::vector<double>* f = nullptr;          // nodal source
  const std::vector<double>* g1_density = nullptr; // per-dx density on Gamma (Gamma nodes)
  const BoundaryFlux* g1 = nullptr;                // per-ds flux on Gamma
  const BoundaryFlux* g2 = nullptr;                // Sigma grad Phi . n on Gamma_w (weighted by detJ)
};

// Pure Neumann problem div(A grad Phi) = f with zero-mean gauge.
inline NeumannResult solve_neumann(const CoeffFields& cf, const Mesh& m, const NeumannData& data,
                                   double tol_exact = 1e-10, double tol_reject = 1e-6) {
  const int n = m.nodes();
  SpMat K = assemble_stiffness(cf, m);
  Vec G = Vec::Zero(n);
  if (data.g1_density) add_gamma_density_load(G, m, *data.g1_density);
  if (data.g1) add_boundary_load(G, m, BoundaryPart::gamma, *data.g1);
  if (data.g2) {
    const auto* w = &cf.nodes.detJ;
    add_boundary_load(G, m, BoundaryPart::bottom, *data.g2, w);
    add_boundary_load(G, m, BoundaryPart::left, *data.g2, w);
    add_boundary_load(G, m, BoundaryPart::right, *data.g2, w);
  }
  Vec Ff = Vec::Zero(n);
  if (data.f) Ff = volume_load(m, *data.f);
  Vec rhs = G - Ff;

  // Lumped "mass" of each node: int phi_i.
  std::vector<double> ones(n, 1.0);
  Vec mass = volume_load(m, ones);
  const double area = mass.sum();

  NeumannResult res;
  const double mismatch = rhs.sum();
  const double scale = std::max(1.0, rhs.cwiseAbs().sum());
  res.compatibility_mismatch = -mismatch;
  if (std::abs(mismatch) > tol_reject * scale) {
    std::ostringstream os;
    os << "neumann solve: incompatible data (mismatch " << mismatch << ")";
    throw std::invalid_argument(os.str());
  }
  if (std::abs(mismatch) > tol_exact * scale) {
    // Remove a constant source c with c * area = mismatch.
    res.correction = mismatch / area;
    rhs -= res.correction * mass;
  }

  // Bordered system with a Lagrange multiplier for int Phi = 0.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(K.nonZeros() + 2 * n);
  for (int k = 0; k < K.outerSize(); ++k)
    for (SpMat::InnerIterator it(K, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, n, mass[i]);
    trip.emplace_back(n, i, mass[i]);
  }
  SpMat B(n + 1, n + 1);
  B.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(B);
  lu.factorize(B);
  if (lu.info() != Eigen::Success) throw SolverError("neumann solve: factorization failed");
  Vec b(n + 1);
  b.head(n) = rhs;
  b[n] = 0.0;
  Vec x = lu.solve(b);
  res.phi = DiscreteField(n);
  for (int i = 0; i < n; ++i) res.phi[i] = x[i];
  return res;
}

}  // namespace muskat
