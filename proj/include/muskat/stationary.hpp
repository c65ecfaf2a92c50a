#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "grid.hpp"
#include "model.hpp"

namespace muskat {

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StationaryState {
  GridFn1D h_s;
  GridFn1D hs_prime;  // slopes from the shooting state, exact to the ODE solve
  GridFn1D h_w;
  double phi_s = 0.0;
  double omega = 0.5 * std::numbers::pi;
  double mass_residual = 0.0;
};

inline double phi_s_closed_form(const PhysParams& p, const VesselGeometry& vessel, int N = 256) {
  return p.gamma_jump - p.g * (p.M + vessel.integral(N)) / 2.0;
}

namespace detail {

struct ShootResult {
  std::vector<double> h, s;
  double area = 0.0;     // int_0^1 h dx
  bool escaped = false;  // |s| reached 1: slope blew up
  int escape_sign = 0;
};

// Integrates h' = s/sqrt(1-s^2), s' = (phi + g h)/sigma from x=0 to x=1 with RK4,
// recording at `steps` equal intervals (internal step at most 1/512).
inline ShootResult shoot(double h0, int steps, double phi, const PhysParams& p) {
  ShootResult r;
  r.h.resize(steps + 1);
  r.s.resize(steps + 1);
  const int sub = std::max(1, (512 + steps - 1) / steps);
  const double dx = 1.0 / (static_cast<double>(steps) * sub);
  double h = h0, s = 0.0, a = 0.0;
  r.h[0] = h;
  r.s[0] = s;
  auto rhs = [&](double hh, double ss, double& dh, double& ds) -> bool {
    if (!(std::abs(ss) < 1.0)) return false;
    dh = ss / std::sqrt(1.0 - ss * ss);
    ds = (phi + p.g * hh) / p.sigma;
    return true;
  };
  for (int k = 0; k < steps; ++k) {
    for (int j = 0; j < sub; ++j) {
      double k1h, k1s, k2h, k2s, k3h, k3s, k4h, k4s;
      const double hb = h;
      bool ok = rhs(h, s, k1h, k1s) && rhs(h + 0.5 * dx * k1h, s + 0.5 * dx * k1s, k2h, k2s) &&
                rhs(h + 0.5 * dx * k2h, s + 0.5 * dx * k2s, k3h, k3s) && rhs(h + dx * k3h, s + dx * k3s, k4h, k4s);
      if (ok) {
        // area' = h, with the RK4 stage values of h
        a += dx / 6.0 * (hb + 2 * (hb + 0.5 * dx * k1h) + 2 * (hb + 0.5 * dx * k2h) + (hb + dx * k3h));
        h += dx / 6.0 * (k1h + 2 * k2h + 2 * k3h + k4h);
        s += dx / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s);
      }
      if (!ok || !(std::abs(s) < 1.0)) {
        r.escaped = true;
        r.escape_sign = (phi + p.g * h >= 0) ? 1 : -1;
        return r;
      }
    }
    r.h[k + 1] = h;
    r.s[k + 1] = s;
  }
  r.area = a;
  return r;
}

}  // namespace detail

inline StationaryState solve_stationary(const PhysParams& p, const VesselGeometry& vessel, int N) {
  p.validate();
  if (N < 8 || N % 2 != 0) throw std::invalid_argument("solve_stationary: N must be even and >= 8");
  const double phi = phi_s_closed_form(p, vessel, N);
  const double target = p.gamma_jump / p.sigma;
  const int steps = N / 2;

  // Mismatch in s(1); escaped trajectories count as +-2.
  auto miss = [&](double h0) {
    auto r = detail::shoot(h0, steps, phi, p);
    if (r.escaped) return 2.0 * r.escape_sign - target;
    return r.s.back() - target;
  };

  double lo = -phi / p.g, hi = lo;
  double step = 1e-3 * (1.0 + std::abs(lo));
  double flo = miss(lo), fhi = flo;
  for (int k = 0; k < 200 && flo > 0; ++k) {
    lo -= step;
    step *= 2;
    flo = miss(lo);
  }
  step = 1e-3 * (1.0 + std::abs(hi));
  for (int k = 0; k < 200 && fhi < 0; ++k) {
    hi += step;
    step *= 2;
    fhi = miss(hi);
  }
  if (!(flo <= 0 && fhi >= 0)) {
    std::ostringstream os;
    os << "solve_stationary: shooting failed to bracket (phi_s=" << phi << ", s(1)-target at [" << lo << "," << hi
       << "] = [" << flo << "," << fhi << "])";
    throw GeometryError(os.str());
  }
  double h0 = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    h0 = 0.5 * (lo + hi);
    const double f = miss(h0);
    if (std::abs(f) <= 1e-13 || hi - lo < 1e-15 * (1.0 + std::abs(h0))) break;
    if (f < 0) {
      lo = h0;
      flo = f;
    } else {
      hi = h0;
      fhi = f;
    }
    // Secant polish once the bracket is tight and both ends are regular.
    if (hi - lo < 1e-6 && std::abs(flo) < 1 && std::abs(fhi) < 1) {
      double a = lo, b = hi, fa = flo, fb = fhi;
      for (int s = 0; s < 20 && std::abs(fb - fa) > 0; ++s) {
        const double c = b - fb * (b - a) / (fb - fa);
        if (!(c > lo && c < hi)) break;
        const double fc = miss(c);
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        if (std::abs(fc) <= 1e-13) break;
      }
      if (b > lo && b < hi && std::abs(fb) <= std::abs(miss(h0))) h0 = b;
      break;
    }
  }
  auto sol = detail::shoot(h0, steps, phi, p);
  if (sol.escaped) throw GeometryError("solve_stationary: slope blow-up at the converged root");
  if (std::abs(sol.s.back() - target) > 1e-12) {
    std::ostringstream os;
    os << "solve_stationary: shooting residual " << std::abs(sol.s.back() - target) << " above 1e-12";
    throw GeometryError(os.str());
  }

  StationaryState st;
  st.phi_s = phi;
  st.h_s = GridFn1D(N);
  st.hs_prime = GridFn1D(N);
  const int mid = N / 2;
  for (int k = 0; k <= steps; ++k) {
    const double sl = sol.s[k] / std::sqrt(1.0 - sol.s[k] * sol.s[k]);
    st.h_s[mid + k] = sol.h[k];
    st.h_s[mid - k] = sol.h[k];
    st.hs_prime[mid + k] = sl;
    st.hs_prime[mid - k] = -sl;
  }
  st.h_w = vessel.sample(N);
  for (int i = 0; i <= N; ++i)
    if (!(st.h_s[i] > st.h_w[i])) {
      std::ostringstream os;
      os << "solve_stationary: fluid layer pinches at x=" << st.h_s.x(i) << " (h_s=" << st.h_s[i]
         << ", h_w=" << st.h_w[i] << ")";
      throw GeometryError(os.str());
    }
  const double mass = 2.0 * sol.area - vessel.integral(N);
  st.mass_residual = mass - p.M;
  if (std::abs(st.mass_residual) > 1e-6) {
    std::ostringstream os;
    os << "solve_stationary: mass residual " << st.mass_residual << " exceeds 1e-6";
    throw GeometryError(os.str());
  }
  // -cot(omega) = h_s'(-1), omega in (0, pi)
  st.omega = 0.5 * std::numbers::pi + std::atan(st.hs_prime[0]);
  return st;
}

inline double contact_angle(const StationaryState& st) { return 0.5 * std::numbers::pi + std::atan(st.hs_prime[0]); }

}  // namespace muskat
