#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "parallel.hpp"

namespace muskat {

// Fornberg finite-difference weights: c[k][i] approximates the k-th derivative at z
// from values at nodes x[i], k = 0..m.
inline std::vector<std::vector<double>> fd_weights(double z, const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> c(m + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

// int (g h^2/2 + sigma sqrt(1+h'^2)) - gamma (h(-1) + h(1)); element slopes for h'.
inline double physical_energy(const GridFn1D& h, const PhysParams& p) {
  GridFn1D sq = h;
  for (double& v : sq.v) v = 0.5 * p.g * v * v;
  double e = trapezoid(sq);
  for (double s : element_slopes(h)) e += p.sigma * h.dx() * std::sqrt(1.0 + s * s);
  return e - p.gamma_jump * (h[0] + h[h.N()]);
}

// ||f||_{H^1}^2 with trapezoid L2 part and element slopes.
inline double h1_norm_sq(const GridFn1D& f) {
  GridFn1D sq = f;
  for (double& v : sq.v) v *= v;
  double s = trapezoid(sq);
  for (double d : element_slopes(f)) s += f.dx() * d * d;
  return s;
}

// Gagliardo-Slobodeckij seminorm squared of order theta in (0,1), normalized to match
// the Fourier seminorm on the line. Midpoint rule off the diagonal, local-slope
// correction on the diagonal cells.
inline double slobodeckij_sq(const GridFn1D& u, double theta) {
  if (!(theta > 0 && theta < 1)) throw std::invalid_argument("slobodeckij_sq: theta must lie in (0,1)");
  const int N = u.N();
  const double h = u.dx(), p = 1.0 + 2.0 * theta;
  std::vector<double> mid(N), sl(N);
  for (int a = 0; a < N; ++a) {
    mid[a] = 0.5 * (u[a] + u[a + 1]);
    sl[a] = (u[a + 1] - u[a]) / h;
  }
  std::vector<double> kern(N);
  for (int d = 1; d < N; ++d) kern[d] = std::pow(d * h, -p);
  double off = 0;
  for (int a = 0; a < N; ++a)
    for (int b = a + 1; b < N; ++b) {
      const double df = mid[a] - mid[b];
      off += df * df * kern[b - a];
    }
  double diag = 0;
  const double cell = 2.0 * std::pow(h, 3.0 - 2.0 * theta) / ((2.0 - 2.0 * theta) * (3.0 - 2.0 * theta));
  for (double s : sl) diag += s * s * cell;
  const double c = 2.0 * std::numbers::pi / (std::tgamma(1.0 + 2.0 * theta) * std::sin(std::numbers::pi * theta));
  return (2.0 * h * h * off + diag) / c;
}

// ||f||_{H^s(I)} for s in [0,3): integer part by stencil derivatives, fractional part by
// the Slobodeckij seminorm of the top derivative.
inline double sobolev_norm_frac(const GridFn1D& f, double s) {
  if (!(s >= 0) || s >= 3) throw std::invalid_argument("sobolev_norm_frac: order must lie in [0, 3)");
  const int k = static_cast<int>(std::floor(s));
  const double theta = s - k;
  auto l2 = [](const GridFn1D& g) {
    GridFn1D sq = g;
    for (double& v : sq.v) v *= v;
    return trapezoid(sq);
  };
  double sq = l2(f);
  GridFn1D top = f;
  if (k >= 1) {
    top = d1(f);
    sq += l2(top);
  }
  if (k >= 2) {
    top = d2(f);
    sq += l2(top);
  }
  if (theta > 0) sq += slobodeckij_sq(top, theta);
  return std::sqrt(sq);
}

// int Phi^2 over the mesh (bilinear interpolant, 2x2 Gauss).
inline double field_l2_sq(const Mesh& m, const Vec& phi) {
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
        s += m.qw[q] * u * u;
      }
  }
  return s;
}

struct DiagConfig {
  double delta = 0.5;  // eta is measured in H^{3/2+delta}
};

enum RecordFlags : int { partial_history = 1, terminal_breakdown = 2 };

struct DiagnosticsRecord {
  double t = 0, E_phys = 0, E_par = 0, frakE = 0, frakF = 0, D_par = 0, frakD = 0;
  double eta_m1 = 0, eta_p1 = 0, dteta_m1 = 0, dteta_p1 = 0, mass = 0, residual_energy_identity = 0;
  double E_improved = 0, D_improved = 0, residual_higher_1 = 0, residual_higher_2 = 0;
  double source_S1 = 0, source_S2 = 0, mean_trace_residual = 0, phi_l2_ratio = 0, contact_mismatch = 0;
  int flags = 0;
};

// Column names of the trajectory CSV, in order.
inline const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> cols = {
      "t",          "E_phys",     "E_par",    "frakE",   "frakF",   "D_par",   "frakD",
      "eta_m1",     "eta_p1",     "dteta_m1", "dteta_p1", "mass",   "residual_energy_identity",
      "E_improved", "D_improved", "residual_higher_1", "residual_higher_2", "source_S1", "source_S2",
      "mean_trace_residual", "phi_l2_ratio", "contact_mismatch", "flags"};
  return cols;
}

inline std::vector<double> record_values(const DiagnosticsRecord& r) {
  return {r.t,          r.E_phys,     r.E_par,    r.frakE,    r.frakF,    r.D_par,     r.frakD,
          r.eta_m1,     r.eta_p1,     r.dteta_m1, r.dteta_p1, r.mass,     r.residual_energy_identity,
          r.E_improved, r.D_improved, r.residual_higher_1, r.residual_higher_2, r.source_S1, r.source_S2,
          r.mean_trace_residual, r.phi_l2_ratio, r.contact_mismatch, static_cast<double>(r.flags)};
}

inline DiagnosticsRecord record_from_values(const std::vector<double>& v) {
  if (v.size() != trajectory_columns().size()) throw std::invalid_argument("record_from_values: wrong column count");
  DiagnosticsRecord r;
  double* f[] = {&r.t,          &r.E_phys,     &r.E_par,    &r.frakE,    &r.frakF,    &r.D_par,     &r.frakD,
                 &r.eta_m1,     &r.eta_p1,     &r.dteta_m1, &r.dteta_p1, &r.mass,     &r.residual_energy_identity,
                 &r.E_improved, &r.D_improved, &r.residual_higher_1, &r.residual_higher_2, &r.source_S1,
                 &r.source_S2,  &r.mean_trace_residual, &r.phi_l2_ratio, &r.contact_mismatch};
  for (std::size_t k = 0; k + 1 < v.size(); ++k) *f[k] = v[k];
  r.flags = static_cast<int>(v.back());
  return r;
}

// Streams solver states and emits one record per state once its 5-state window is
// available (records lag the solver by two steps). Time derivatives come from the
// window by finite differences; the first state's d_t eta is the instantaneous one.
class DiagnosticsAccumulator {
 public:
  explicit DiagnosticsAccumulator(const Setup& s, DiagConfig cfg = {})
      : s_(&s), cfg_(cfg), ident_(identity_coeffs(s.mesh)), Kid_(assemble_stiffness(ident_, s.mesh)) {}

  std::vector<DiagnosticsRecord> push(const SimState& st) {
    Entry e;
    e.t = st.t;
    e.index = count_++;
    e.eta = Eigen::Map<const Vec>(st.eta.v.data(), st.eta.size());
    e.u = Eigen::Map<const Vec>(st.u.v.data(), st.u.size());
    e.Phi = Eigen::Map<const Vec>(st.Phi.v.data(), st.Phi.size());
    e.solver = st.solver;
    e.mismatch = st.contact_mismatch;
    buf_.push_back(std::move(e));
    if (buf_.size() > 5) buf_.pop_front();
    std::vector<DiagnosticsRecord> out;
    while (buf_.size() == 5 && next_ <= count_ - 3) out.push_back(emit(next_++));
    return out;
  }

  std::vector<DiagnosticsRecord> finish() {
    std::vector<DiagnosticsRecord> out;
    while (next_ < count_) out.push_back(emit(next_++));
    return out;
  }

 private:
  struct Entry {
    double t = 0;
    long index = 0;
    Vec eta, u, Phi;
    std::shared_ptr<const MixedSolver> solver;
    double mismatch = 0;
  };

  struct Stencil {
    int lo = 0;
    std::vector<double> w;
    bool ok = false, centered = false;
  };

  // Weights for the k-th time derivative at window position p.
  Stencil stencil(int p, int k) const {
    const int L = static_cast<int>(buf_.size());
    const int n = std::min(L, k <= 2 ? 3 : 5);
    Stencil s;
    if (n < k + 1) return s;
    s.lo = std::clamp(p - n / 2, 0, L - n);
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = buf_[s.lo + i].t;
    s.w = fd_weights(buf_[p].t, x, k)[k];
    s.ok = true;
    s.centered = (n == (k <= 2 ? 3 : 5)) && s.lo == p - n / 2;
    return s;
  }

  template <class Get>
  Vec dt(int p, int k, Get get, bool& partial) const {
    if (k == 0) return get(buf_[p]);
    auto s = stencil(p, k);
    if (!s.ok) {
      partial = true;
      return Vec::Zero(get(buf_[p]).size());
    }
    if (!s.centered) partial = true;
    Vec r = s.w[0] * get(buf_[s.lo]);
    for (std::size_t i = 1; i < s.w.size(); ++i) r += s.w[i] * get(buf_[s.lo + i]);
    return r;
  }

  Vec deta(int p, int k, bool& partial) const {
    if (k == 1 && buf_[p].index == 0) return buf_[p].u;
    return dt(p, k, [](const Entry& e) -> const Vec& { return e.eta; }, partial);
  }

  std::vector<double> slopes(const Vec& v) const {
    std::vector<double> s(s_->N);
    for (int e = 0; e < s_->N; ++e) s[e] = (v[e + 1] - v[e]) / s_->dx;
    return s;
  }

  // (1/2) v^T (g W + sigma L) v
  double quad(const Vec& v) const {
    double q = 0.5 * s_->params.g * v.cwiseAbs2().dot(s_->W);
    for (int e = 0; e < s_->N; ++e) {
      const double d = (v[e + 1] - v[e]) / s_->dx;
      q += 0.5 * s_->params.sigma * s_->c[e] * s_->dx * d * d;
    }
    return q;
  }

  double sum_Q(int j, const Vec& eta, const Vec& e1, const Vec& e2) const {
    auto a = slopes(eta), b = slopes(e1), c = slopes(e2);
    double q = 0;
    for (int e = 0; e < s_->N; ++e) q += s_->dx * residual_Q_point(j, s_->hs_slope[e], a[e], b[e], c[e]);
    return s_->params.sigma * q;
  }

  double sum_F(int j, const Vec& eta, const Vec& e1, const Vec& e2) const {
    auto a = slopes(eta), b = slopes(e1), c = slopes(e2);
    double q = 0;
    for (int e = 0; e < s_->N; ++e) q += s_->dx * source_calF_point(j, s_->hs_slope[e], a[e], b[e], c[e]);
    return s_->params.sigma * q;
  }

  // Bracket of the j-th identity at window position m: quadratic part and Q_j part.
  std::pair<double, double> bracket(int m, int j, bool& partial) const {
    Vec e0 = buf_[m].eta, e1 = deta(m, 1, partial), e2 = deta(m, 2, partial);
    const Vec& ej = j == 0 ? e0 : (j == 1 ? e1 : e2);
    return {quad(ej), sum_Q(j, e0, e1, e2)};
  }

  GridFn1D grid(const Vec& v) const { return GridFn1D(std::vector<double>(v.data(), v.data() + v.size())); }

  DiagnosticsRecord emit(long global) const {
    const Setup& s = *s_;
    const int p = static_cast<int>(global - buf_.front().index);
    const Entry& E = buf_[p];
    const int n = s.N + 1;
    bool partial = false;
    DiagnosticsRecord r;
    r.t = E.t;
    r.contact_mismatch = E.mismatch;

    std::array<Vec, 4> et;
    et[0] = E.eta;
    for (int k = 1; k <= 3; ++k) et[k] = deta(p, k, partial);
    std::array<Vec, 3> ph;
    for (int j = 0; j <= 2; ++j) ph[j] = dt(p, j, [](const Entry& e) -> const Vec& { return e.Phi; }, partial);

    const SpMat& K = E.solver->stiffness();
    auto Kt = [&](int k, const Vec& v, bool& part) {
      return dt(p, k, [&](const Entry& e) -> Vec { return e.solver->stiffness() * v; }, part);
    };

    GridFn1D h = s.st.h_s;
    for (int i = 0; i < n; ++i) h[i] += E.eta[i];
    r.E_phys = physical_energy(h, s.params);
    r.eta_m1 = E.eta[0];
    r.eta_p1 = E.eta[n - 1];
    r.dteta_m1 = et[1][0];
    r.dteta_p1 = et[1][n - 1];
    r.mass = E.eta.dot(s.W);

    double phi_l2 = 0;
    for (int j = 0; j <= 2; ++j) {
      r.E_par += h1_norm_sq(grid(et[j]));
      r.frakE += quad(et[j]);
      r.frakF += sum_Q(j, et[0], et[1], et[2]);
      const double ends = et[j + 1][0] * et[j + 1][0] + et[j + 1][n - 1] * et[j + 1][n - 1];
      r.D_par += ph[j].dot(Kid_ * ph[j]) + ends;
      r.frakD += ph[j].dot(K * ph[j]) + ends;
      const double l2 = field_l2_sq(s.mesh, ph[j]);
      phi_l2 += l2;
      r.D_improved += l2 + std::pow(sobolev_norm_frac(grid(et[j]), 2.5), 2);
    }
    r.D_improved += r.D_par;
    r.phi_l2_ratio = r.D_par > 0 ? phi_l2 / r.D_par : 0.0;
    r.E_improved = r.E_par + std::pow(sobolev_norm_frac(grid(et[0]), 1.5 + cfg_.delta), 2) +
                   std::pow(sobolev_norm_frac(grid(et[1]), 1.5), 2);

    // d/dt of the brackets by the first-derivative stencil over bracket values.
    std::array<double, 3> dB{0, 0, 0};
    auto st1 = stencil(p, 1);
    if (!st1.centered) partial = true;
    if (st1.ok) {
      for (std::size_t i = 0; i < st1.w.size(); ++i)
        for (int j = 0; j <= 2; ++j) {
          auto [qd, qq] = bracket(st1.lo + static_cast<int>(i), j, partial);
          dB[j] += st1.w[i] * (qd + qq);
        }
    } else {
      partial = true;
    }

    auto diss = [&](int j) {
      return ph[j].dot(K * ph[j]) + et[j + 1][0] * et[j + 1][0] + et[j + 1][n - 1] * et[j + 1][n - 1];
    };
    r.residual_energy_identity = dB[0] + diss(0);

    r.source_S1 = -ph[1].dot(Kt(1, ph[0], partial)) + sum_F(1, et[0], et[1], et[2]);
    r.source_S2 = -ph[2].dot(Kt(2, ph[0], partial) + 2.0 * Kt(1, ph[1], partial)) + sum_F(2, et[0], et[1], et[2]);
    r.residual_higher_1 = dB[1] + diss(1) - r.source_S1;
    r.residual_higher_2 = dB[2] + diss(2) - r.source_S2;

    Vec phiG = E.Phi.tail(n);
    r.mean_trace_residual = phiG.dot(s.W) + s.params.g * r.mass + r.dteta_m1 + r.dteta_p1;
    if (partial) r.flags |= partial_history;
    return r;
  }

  const Setup* s_;
  DiagConfig cfg_;
  CoeffFields ident_;
  SpMat Kid_;
  std::deque<Entry> buf_;
  long count_ = 0, next_ = 0;
};

struct DecayFit {
  double lambda = 0, r_squared = 0, t0 = 0, t1 = 0;
  int points = 0;
};

// Least squares of log q = a - lambda t over t in [t0, t1].
inline DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& q, double t0, double t1) {
  if (t.size() != q.size()) throw std::invalid_argument("decay_fit: size mismatch");
  std::vector<double> x, y;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t0 - 1e-12 || t[k] > t1 + 1e-12) continue;
    if (!(q[k] > 0)) throw std::invalid_argument("decay_fit: nonpositive value in the fit window");
    x.push_back(t[k]);
    y.push_back(std::log(q[k]));
  }
  if (x.size() < 3) throw std::invalid_argument("decay_fit: fewer than 3 points in the window");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k] / n;
    my += y[k] / n;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  DecayFit f;
  const double slope = sxy / sxx;
  f.lambda = -slope;
  double ssr = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - (my + slope * (x[k] - mx));
    ssr += e * e;
  }
  f.r_squared = syy > 0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  f.t0 = t0;
  f.t1 = t1;
  f.points = static_cast<int>(x.size());
  return f;
}

// Default tail window [t_end/2, t_end].
inline DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& q) {
  if (t.empty()) throw std::invalid_argument("decay_fit: empty series");
  return decay_fit(t, q, 0.5 * t.back(), t.back());
}

// The nine remainder ratios; the z2 = 0 row uses the Taylor limits.
inline std::array<double, 9> remainder_ratios(double z1, double z2) {
  using namespace slope;
  if (z2 == 0.0) {
    return {S2(z1) / 6, S2(z1) / 2, S2(z1), S3(z1) / 2, S2(z1), S4(z1) / 2, S3(z1), d3z2_R(z1, 0.0),
            d2z2dz1_R(z1, 0.0)};
  }
  const double z22 = z2 * z2;
  return {residual_Q0(z1, z2) / (z22 * z2),
          remainder_R(z1, z2) / z22,
          dz2_R(z1, z2) / z2,
          dz1_R(z1, z2) / z22,
          d2z2_R(z1, z2),
          d2z1_R(z1, z2) / z22,
          dz1dz2_R(z1, z2) / z2,
          d3z2_R(z1, z2),
          d2z2dz1_R(z1, z2)};
}

inline const std::array<const char*, 9>& remainder_ratio_names() {
  static const std::array<const char*, 9> n = {"Q0/z2^3",        "R/z2^2",         "dz2R/z2",
                                               "dz1R/z2^2",      "dz2dz2R",        "dz1dz1R/z2^2",
                                               "dz1dz2R/z2",     "dz2dz2dz2R",     "dz2dz2dz1R"};
  return n;
}

// Suprema of |ratio| over the grid lo + k*step (k = 0..n) in both variables.
inline std::array<double, 9> remainder_suprema(double lo, double hi, double step) {
  if (!(step > 0) || !(hi > lo)) throw std::invalid_argument("lemmaA2_scan: need step > 0 and hi > lo");
  const long n = std::lround((hi - lo) / step);
  std::vector<std::array<double, 9>> rows(n + 1);
  parallel_for(static_cast<int>(n + 1), [&](int a) {
    std::array<double, 9> s{};
    const double z1 = lo + a * step;
    for (long b = 0; b <= n; ++b) {
      double z2 = lo + b * step;
      if (std::abs(z2) < 0.5 * step) z2 = 0.0;
      auto r = remainder_ratios(z1, z2);
      for (int k = 0; k < 9; ++k) s[k] = std::max(s[k], std::isfinite(r[k]) ? std::abs(r[k]) : INFINITY);
    }
    rows[a] = s;
  });
  std::array<double, 9> sup{};
  for (const auto& r : rows)
    for (int k = 0; k < 9; ++k) sup[k] = std::max(sup[k], r[k]);
  return sup;
}

struct LemmaA2Report {
  std::array<double, 9> sup{}, sup_refined{};
  double max_drift = 0;  // max relative change of a supremum under step halving
  bool finite = true;
};

inline LemmaA2Report lemmaA2_scan(double lo = -5.0, double hi = 5.0, double step = 0.01) {
  LemmaA2Report r;
  r.sup = remainder_suprema(lo, hi, step);
  r.sup_refined = remainder_suprema(lo, hi, 0.5 * step);
  for (int k = 0; k < 9; ++k) {
    if (!std::isfinite(r.sup[k]) || !std::isfinite(r.sup_refined[k])) r.finite = false;
    r.max_drift = std::max(r.max_drift, std::abs(r.sup[k] - r.sup_refined[k]) / r.sup_refined[k]);
  }
  return r;
}

// Trajectory-level verdicts computed from the records alone.
struct TrajectorySummary {
  DecayFit decay;
  bool decay_ok = false;
  std::string decay_error;
  bool E_phys_monotone = true;  // after the first 3 records
  double sandwich_min = 0, sandwich_max = 0;  // (frakE+frakF)/frakE over records with frakE > 0
  double comparison_min = 0, comparison_max = 0;  // frakE / E_par
  // residual maxima skip records flagged partial_history (one-sided stencils)
  double max_residual_energy = 0, max_residual_higher_1 = 0, max_residual_higher_2 = 0;
  double max_mean_trace = 0, max_phi_ratio = 0;
  double mass_drift = 0;
  bool breakdown = false;
};

// Residual maxima only look at records with t >= residual_t_min (the initial layer of
// the stiff semi-discrete system otherwise dominates them). A negative fit bound
// selects the default tail window [t_end/2, t_end].
inline TrajectorySummary summarize(const std::vector<DiagnosticsRecord>& recs, double residual_t_min = 0.0,
                                   double fit_t0 = -1.0, double fit_t1 = -1.0) {
  TrajectorySummary s;
  std::vector<double> t, q;
  bool first = true;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const auto& r = recs[k];
    if (r.flags & terminal_breakdown) {
      s.breakdown = true;
      continue;
    }
    if (!(r.flags & partial_history)) {
      t.push_back(r.t);
      q.push_back(r.E_par);
    }
    if (k > 3 && r.E_phys > recs[k - 1].E_phys + 1e-14 * std::abs(recs[k - 1].E_phys)) s.E_phys_monotone = false;
    if (r.frakE > 0) {
      const double sw = (r.frakE + r.frakF) / r.frakE;
      const double cm = r.E_par > 0 ? r.frakE / r.E_par : 0.0;
      if (first) {
        s.sandwich_min = s.sandwich_max = sw;
        s.comparison_min = s.comparison_max = cm;
        first = false;
      }
      s.sandwich_min = std::min(s.sandwich_min, sw);
      s.sandwich_max = std::max(s.sandwich_max, sw);
      s.comparison_min = std::min(s.comparison_min, cm);
      s.comparison_max = std::max(s.comparison_max, cm);
    }
    s.mass_drift = std::max(s.mass_drift, std::abs(r.mass - recs.front().mass));
    if ((r.flags & partial_history) || r.t < residual_t_min) continue;
    s.max_residual_energy = std::max(s.max_residual_energy, std::abs(r.residual_energy_identity));
    s.max_residual_higher_1 = std::max(s.max_residual_higher_1, std::abs(r.residual_higher_1));
    s.max_residual_higher_2 = std::max(s.max_residual_higher_2, std::abs(r.residual_higher_2));
    s.max_mean_trace = std::max(s.max_mean_trace, std::abs(r.mean_trace_residual));
    s.max_phi_ratio = std::max(s.max_phi_ratio, r.phi_l2_ratio);
  }
  if (t.size() >= 3) {
    try {
      const double a = fit_t0 >= 0 ? fit_t0 : 0.5 * t.back(), b = fit_t1 >= 0 ? fit_t1 : t.back();
      s.decay = decay_fit(t, q, a, b);
      s.decay_ok = true;
    } catch (const std::invalid_argument& e) {
      s.decay_error = e.what();
    }
  } else {
    s.decay_error = "too few records";
  }
  return s;
}

}  // namespace muskat
