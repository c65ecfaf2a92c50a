#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "diffeo.hpp"
#include "elliptic.hpp"
#include "grid.hpp"
#include "mesh.hpp"
#include "model.hpp"
#include "stationary.hpp"

namespace muskat {

enum class Scheme { explicit_euler, semi_implicit };

struct StepperConfig {
  double dt = 1e-3;
  Scheme scheme = Scheme::semi_implicit;
  int dn_refresh = 1;  // 1 = every step, k > 1 = lagged(k)
  double t_end = 1.0;
  int snapshot_stride = 0;  // 0 disables snapshots
  double detJ_lo = 0.25, detJ_hi = 4.0;
};

// Fixed data of a run: parameters, stationary reference, mesh and the 1D surface operators.
struct Setup {
  PhysParams params;
  VesselGeometry vessel;
  StationaryState st;
  Mesh mesh;
  int N = 0;
  double dx = 0;
  std::vector<double> hs_slope;  // chord slopes of h_s, N entries
  std::vector<double> c;         // (1 + hs_slope^2)^{-3/2}
  Vec W;                         // trapezoid weights

  Setup(const PhysParams& p, const VesselGeometry& v, int Nx, int Ny) : params(p), vessel(v) {
    st = solve_stationary(p, v, Nx);
    mesh = build_mesh(v, st.h_s, Nx, Ny);
    init();
  }
  Setup(const PhysParams& p, const VesselGeometry& v, StationaryState s, Mesh m)
      : params(p), vessel(v), st(std::move(s)), mesh(std::move(m)) {
    init();
  }

 private:
  void init() {
    N = st.h_s.N();
    dx = st.h_s.dx();
    hs_slope = element_slopes(st.h_s);
    c.resize(N);
    for (int e = 0; e < N; ++e) c[e] = std::pow(1.0 + hs_slope[e] * hs_slope[e], -1.5);
    W = Eigen::Map<const Vec>(trapezoid_weights(N).data(), N + 1);
  }
};

// Weak surface-tension vector sum_e dx (c_e eta'_e + R(hs'_e, eta'_e)) phi_i' split into
// the linear part (c) and the remainder part (R).
struct SurfaceForce {
  Vec linear, remainder;
};

inline SurfaceForce surface_force(const Setup& s, const GridFn1D& eta) {
  SurfaceForce f{Vec::Zero(s.N + 1), Vec::Zero(s.N + 1)};
  for (int e = 0; e < s.N; ++e) {
    const double ep = (eta[e + 1] - eta[e]) / s.dx;
    const double lin = s.c[e] * ep, rem = remainder_R(s.hs_slope[e], ep);
    f.linear[e] -= lin;
    f.linear[e + 1] += lin;
    f.remainder[e] -= rem;
    f.remainder[e + 1] += rem;
  }
  return f;
}

// Tridiagonal matrix of the linear part: L eta = surface_force(eta).linear.
inline Mat surface_stiffness(const Setup& s) {
  Mat L = Mat::Zero(s.N + 1, s.N + 1);
  for (int e = 0; e < s.N; ++e) {
    const double k = s.c[e] / s.dx;
    L(e, e) += k;
    L(e + 1, e + 1) += k;
    L(e, e + 1) -= k;
    L(e + 1, e) -= k;
  }
  return L;
}

// Pointwise surface quantity q = eta'/(1+hs'^2)^{3/2} + R(hs', eta') with model stencils.
inline GridFn1D surface_flux_pointwise(const GridFn1D& eta, const GridFn1D& h_s) {
  require_same_grid(eta, h_s, "surface_flux_pointwise");
  auto ep = d1(eta), hp = d1(h_s);
  GridFn1D q(eta.N());
  for (int i = 0; i < q.size(); ++i) q[i] = ep[i] * slope::S1(hp[i]) + remainder_R(hp[i], ep[i]);
  return q;
}

// Phi on Gamma = -g eta + sigma (eta'/(1+hs'^2)^{3/2} + R(hs', eta'))'.
inline GridFn1D dirichlet_data(const GridFn1D& eta, const GridFn1D& h_s, const PhysParams& p) {
  auto dq = d1(surface_flux_pointwise(eta, h_s));
  GridFn1D out(eta.N());
  for (int i = 0; i < out.size(); ++i) out[i] = -p.g * eta[i] + p.sigma * dq[i];
  return out;
}

// Contact-point velocities: d_t eta(+-1) = -+ sigma q(+-1).
inline std::pair<double, double> contact_rhs(const GridFn1D& eta, const GridFn1D& h_s, const PhysParams& p) {
  auto q = surface_flux_pointwise(eta, h_s);
  return {p.sigma * q[0], -p.sigma * q[q.N()]};
}

// Weak conormal flux Sigma grad Phi . N_h per unit x on Gamma (no sources, no wall flux).
inline GridFn1D kinematic_rhs(const GridFn1D& eta, const DiscreteField& phi, const CoeffFields& cf, const Mesh& m) {
  if (eta.N() != m.nx) throw std::invalid_argument("kinematic_rhs: eta grid does not match the mesh");
  SpMat K = assemble_stiffness(cf, m);
  Vec p = Eigen::Map<const Vec>(phi.v.data(), m.nodes());
  Vec r = K.bottomRows(m.nx + 1) * p;
  Vec W = gamma_weights(m);
  GridFn1D u(m.nx);
  for (int i = 0; i <= m.nx; ++i) u[i] = r[i] / W[i];
  return u;
}

struct SimState {
  double t = 0;
  long step = 0;
  GridFn1D eta;
  GridFn1D u;  // instantaneous d_t eta
  DiscreteField Phi;
  std::shared_ptr<const CoeffFields> coeffs;
  std::shared_ptr<const MixedSolver> solver;
  Mat S;  // weak DN form for the current (or lagged) coefficients
  long dn_age = 0;
  double contact_mismatch = 0;  // |u(+-1) - pointwise contact law|
};

class Stepper {
 public:
  Stepper(const Setup& s, StepperConfig cfg) : s_(&s), cfg_(cfg) {
    if (!(cfg_.dt > 0)) throw std::invalid_argument("stepper: dt must be positive");
    if (cfg_.dn_refresh < 1) throw std::invalid_argument("stepper: lagged refresh interval must be >= 1");
    L_ = surface_stiffness(s);
    G_ = s.params.g * Mat(s.W.asDiagonal()) + s.params.sigma * L_;
  }

  const Setup& setup() const { return *s_; }
  const StepperConfig& config() const { return cfg_; }

  // State at eta with freshly built coefficients and the instantaneous potential.
  SimState prepare(const GridFn1D& eta, double t = 0.0, long step = 0) const {
    SimState st;
    st.t = t;
    st.step = step;
    st.eta = eta;
    refresh(st);
    evaluate(st);
    return st;
  }

  SimState step(const SimState& cur) const {
    const Setup& s = *s_;
    const int n = s.N + 1;
    const double dt = cfg_.dt;
    GridFn1D eta_new = cur.eta;
    if (cfg_.scheme == Scheme::explicit_euler) {
      for (int i = 0; i < n; ++i) eta_new[i] += dt * cur.u[i];
    } else {
      auto F = surface_force(s, cur.eta);
      Vec eta0 = Eigen::Map<const Vec>(cur.eta.v.data(), n);
      Vec Winv = s.W.cwiseInverse();
      Mat SW = cur.S * Winv.asDiagonal();
      Mat Bdt = Mat::Zero(n, n);
      Bdt(0, 0) = Bdt(n - 1, n - 1) = 1.0 / dt;
      Mat A = Mat(s.W.asDiagonal()) / dt + SW * (G_ + Bdt);
      Vec rhs = -SW * (G_ * eta0 + s.params.sigma * F.remainder);
      Eigen::PartialPivLU<Mat> lu(A);
      Vec d = lu.solve(rhs);
      if (!d.allFinite()) throw SolverError("semi-implicit step: singular stepping matrix");
      for (int i = 0; i < n; ++i) eta_new[i] += d[i];
    }
    SimState next;
    next.t = cur.t + dt;
    next.step = cur.step + 1;
    next.eta = eta_new;
    if (cur.dn_age + 1 < cfg_.dn_refresh && cur.solver) {
      next.coeffs = cur.coeffs;
      next.solver = cur.solver;
      next.S = cur.S;
      next.dn_age = cur.dn_age + 1;
    } else {
      refresh(next);
    }
    evaluate(next);
    return next;
  }

 private:
  void refresh(SimState& st) const {
    st.coeffs = std::make_shared<const CoeffFields>(coeffs_for(st.eta, s_->mesh, cfg_.detJ_lo, cfg_.detJ_hi));
    st.solver = std::make_shared<const MixedSolver>(*st.coeffs, s_->mesh);
    st.S = st.solver->schur();
    st.dn_age = 0;
  }

  // Coupled weak system: W u = S Phi, W Phi = -g W eta - sigma K(eta) - B u.
  void evaluate(SimState& st) const {
    const Setup& s = *s_;
    const int n = s.N + 1;
    auto F = surface_force(s, st.eta);
    Vec eta = Eigen::Map<const Vec>(st.eta.v.data(), n);
    Vec b = -s.params.g * s.W.cwiseProduct(eta) - s.params.sigma * (F.linear + F.remainder);
    Vec Winv = s.W.cwiseInverse();
    Mat A = Mat(s.W.asDiagonal());
    A.row(0) += Winv[0] * st.S.row(0);
    A.row(n - 1) += Winv[n - 1] * st.S.row(n - 1);
    Vec phi = A.partialPivLu().solve(b);
    Vec u = Winv.cwiseProduct(st.S * phi);
    std::vector<double> pg(phi.data(), phi.data() + n);
    st.Phi = st.solver->lift(pg);
    st.u = GridFn1D(std::vector<double>(u.data(), u.data() + n));
    auto [cl, cr] = contact_rhs(st.eta, s.st.h_s, s.params);
    st.contact_mismatch = std::max(std::abs(u[0] - cl), std::abs(u[n - 1] - cr));
  }

  const Setup* s_;
  StepperConfig cfg_;
  Mat L_, G_;
};

inline SimState step_explicit(const Stepper& stp, const SimState& st) {
  if (stp.config().scheme != Scheme::explicit_euler) throw std::invalid_argument("step_explicit: stepper is not explicit");
  return stp.step(st);
}

inline SimState step_semi_implicit(const Stepper& stp, const SimState& st) {
  if (stp.config().scheme != Scheme::semi_implicit) throw std::invalid_argument("step_semi_implicit: stepper is not semi-implicit");
  return stp.step(st);
}

// Forward-Euler bound 2 / rho(M) for the linearized map u = -M eta at the state's DN
// form, M = W^-1 S (W + B W^-1 S)^-1 (g W + sigma L).
inline double explicit_stability_bound(const Setup& s, const SimState& st) {
  const int n = s.N + 1;
  Vec Winv = s.W.cwiseInverse();
  Mat WS = Winv.asDiagonal() * st.S;
  Mat A = Mat(s.W.asDiagonal());
  A.row(0) += WS.row(0);
  A.row(n - 1) += WS.row(n - 1);
  Mat G = s.params.g * Mat(s.W.asDiagonal()) + s.params.sigma * surface_stiffness(s);
  Mat M = WS * A.partialPivLu().solve(G);
  const double rho = Eigen::EigenSolver<Mat>(M, false).eigenvalues().cwiseAbs().maxCoeff();
  if (!(rho > 0)) throw SolverError("explicit_stability_bound: degenerate operator");
  return 2.0 / rho;
}

// Removes the trapezoid mean; returns the removed value.
inline double project_zero_mean(GridFn1D& eta) {
  const double mean = trapezoid(eta) / 2.0;
  for (double& v : eta.v) v -= mean;
  return mean;
}

inline double surface_mass(const GridFn1D& eta) { return trapezoid(eta); }

}  // namespace muskat
