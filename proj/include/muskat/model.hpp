#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"

namespace muskat {

struct PhysParams {
  double g = 1.0;
  double sigma = 1.0;
  double gamma_jump = 0.0;
  double M = 4.0;

  // Returns the list of violated invariants (empty when valid).
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!(g > 0)) out.push_back("g must be positive");
    if (!(sigma > 0)) out.push_back("sigma must be positive");
    if (!(M > 0)) out.push_back("M must be positive");
    if (!(std::abs(gamma_jump) < sigma))
      out.push_back("partial wetting violated: Young's law cos(omega) = gamma_jump/sigma needs |gamma_jump| < sigma");
    return out;
  }
  void validate() const {
    auto v = violations();
    if (!v.empty()) throw std::invalid_argument(v.front());
  }
};

enum class WallFamily { flat, parabolic, cosine };

// Analytic lower wall: flat c0; parabolic c0 + c1 x^2; cosine c0 + c1 cos(pi x).
struct VesselGeometry {
  WallFamily family = WallFamily::flat;
  double c0 = -1.0;
  double c1 = 0.0;

  double hw(double x) const {
    switch (family) {
      case WallFamily::flat: return c0;
      case WallFamily::parabolic: return c0 + c1 * x * x;
      case WallFamily::cosine: return c0 + c1 * std::cos(std::numbers::pi * x);
    }
    return c0;
  }
  double dhw(double x) const {
    switch (family) {
      case WallFamily::flat: return 0.0;
      case WallFamily::parabolic: return 2.0 * c1 * x;
      case WallFamily::cosine: return -std::numbers::pi * c1 * std::sin(std::numbers::pi * x);
    }
    return 0.0;
  }
  GridFn1D sample(int N) const {
    return GridFn1D::sample(N, [this](double x) { return hw(x); });
  }
  double max_hw(int N) const {
    auto s = sample(N);
    double m = s[0];
    for (double a : s.v) m = std::max(m, a);
    return m;
  }
  double integral(int N) const { return trapezoid_corrected(sample(N), dhw(-1.0), dhw(1.0)); }
};

inline GridFn1D curvature(const GridFn1D& h) {
  if (h.size() < 9) throw std::invalid_argument("curvature: need at least 9 nodes");
  if (!h.finite()) throw std::invalid_argument("curvature: non-finite input");
  auto hp = d1(h);
  auto hpp = d2(h);
  GridFn1D k(h.N());
  for (int i = 0; i < h.size(); ++i) k[i] = hpp[i] / std::pow(1.0 + hp[i] * hp[i], 1.5);
  return k;
}

// S(u) = u / sqrt(1+u^2) and its derivatives.
namespace slope {
inline double S0(double u) { return u / std::sqrt(1.0 + u * u); }
inline double S1(double u) { return std::pow(1.0 + u * u, -1.5); }
inline double S2(double u) { return -3.0 * u * std::pow(1.0 + u * u, -2.5); }
inline double S3(double u) { return (12.0 * u * u - 3.0) * std::pow(1.0 + u * u, -3.5); }
inline double S4(double u) { return (45.0 * u - 60.0 * u * u * u) * std::pow(1.0 + u * u, -4.5); }
}  // namespace slope

// Curvature-expansion remainder R(z1,z2) = S(z1+z2) - S(z1) - z2 S'(z1).
inline double remainder_R(double z1, double z2) {
  using namespace slope;
  return S0(z1 + z2) - S0(z1) - z2 * S1(z1);
}
inline double dz2_R(double z1, double z2) { return slope::S1(z1 + z2) - slope::S1(z1); }
inline double d2z2_R(double z1, double z2) { return slope::S2(z1 + z2); }
inline double d3z2_R(double z1, double z2) { return slope::S3(z1 + z2); }
inline double dz1_R(double z1, double z2) {
  using namespace slope;
  return S1(z1 + z2) - S1(z1) - z2 * S2(z1);
}
inline double d2z1_R(double z1, double z2) {
  using namespace slope;
  return S2(z1 + z2) - S2(z1) - z2 * S3(z1);
}
inline double dz1dz2_R(double z1, double z2) { return slope::S2(z1 + z2) - slope::S2(z1); }
inline double d2z2dz1_R(double z1, double z2) { return slope::S3(z1 + z2); }

namespace detail {
inline constexpr double gl7_x[7] = {-0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
                                    0.4058451513773972,  0.7415311855993945,  0.9491079123427585};
inline constexpr double gl7_w[7] = {0.1294849661688697, 0.2797053914892766, 0.3818300505051189, 0.4179591836734694,
                                    0.3818300505051189, 0.2797053914892766, 0.1294849661688697};

template <class F>
double gl7(F& f, double a, double b) {
  const double c = 0.5 * (a + b), r = 0.5 * (b - a);
  double s = 0.0;
  for (int k = 0; k < 7; ++k) s += gl7_w[k] * f(c + r * gl7_x[k]);
  return s * r;
}

template <class F>
double adaptive_gl(F& f, double a, double b, double whole, double abs_tol, double rel_tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = gl7(f, a, m), right = gl7(f, m, b);
  const double est = left + right;
  if (depth <= 0 || std::abs(est - whole) <= abs_tol + rel_tol * std::abs(est)) return est;
  return adaptive_gl(f, a, m, left, 0.5 * abs_tol, rel_tol, depth - 1) +
         adaptive_gl(f, m, b, right, 0.5 * abs_tol, rel_tol, depth - 1);
}
}  // namespace detail

// Q0(z1,z2) = int_0^{z2} R(z1,z) dz by adaptive Gauss-Legendre.
inline double residual_Q0(double z1, double z2, double abs_tol = 1e-10, double rel_tol = 1e-13) {
  if (z2 == 0.0) return 0.0;
  auto f = [z1](double z) { return remainder_R(z1, z); };
  const double whole = detail::gl7(f, 0.0, z2);
  return detail::adaptive_gl(f, 0.0, z2, whole, abs_tol, rel_tol, 30);
}

// Pointwise residual energies Q_j and sources calF_j. For j=0 the time
// derivative arguments are unused.
inline double residual_Q_point(int j, double hsp, double ep, double dtep, double d2tep) {
  switch (j) {
    case 0: return residual_Q0(hsp, ep);
    case 1: return 0.5 * dtep * dtep * dz2_R(hsp, ep);
    case 2: return 0.5 * d2tep * d2tep * dz2_R(hsp, ep) + d2tep * dtep * dtep * d2z2_R(hsp, ep);
  }
  throw std::invalid_argument("residual_Q: j must be 0, 1 or 2");
}

inline double source_calF_point(int j, double hsp, double ep, double dtep, double d2tep) {
  switch (j) {
    case 1: return 0.5 * dtep * dtep * dtep * d2z2_R(hsp, ep);
    case 2:
      return 2.5 * d2tep * d2tep * dtep * d2z2_R(hsp, ep) + d2tep * dtep * dtep * dtep * d3z2_R(hsp, ep);
  }
  throw std::invalid_argument("source_calF: j must be 1 or 2");
}

namespace detail {
template <class P>
std::vector<double> pointwise(const char* what, P&& p, std::span<const double> a, std::span<const double> b,
                              std::span<const double> c, std::span<const double> d) {
  const std::size_t n = a.size();
  if (b.size() != n || c.size() != n || d.size() != n)
    throw std::invalid_argument(std::string(what) + ": mismatched grid sizes");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = p(a[i], b[i], c[i], d[i]);
  return out;
}
}  // namespace detail

inline std::vector<double> residual_Q(int j, std::span<const double> hsp, std::span<const double> ep,
                                      std::span<const double> dtep, std::span<const double> d2tep) {
  if (j < 0 || j > 2) throw std::invalid_argument("residual_Q: j must be 0, 1 or 2");
  return detail::pointwise(
      "residual_Q", [j](double a, double b, double c, double d) { return residual_Q_point(j, a, b, c, d); }, hsp, ep,
      dtep, d2tep);
}

inline std::vector<double> source_calF(int j, std::span<const double> hsp, std::span<const double> ep,
                                       std::span<const double> dtep, std::span<const double> d2tep) {
  if (j < 1 || j > 2) throw std::invalid_argument("source_calF: j must be 1 or 2");
  return detail::pointwise(
      "source_calF", [j](double a, double b, double c, double d) { return source_calF_point(j, a, b, c, d); }, hsp,
      ep, dtep, d2tep);
}

inline GridFn1D residual_Q(int j, const GridFn1D& hsp, const GridFn1D& ep, const GridFn1D& dtep,
                           const GridFn1D& d2tep) {
  return GridFn1D(residual_Q(j, std::span<const double>(hsp.v), ep.v, dtep.v, d2tep.v));
}

inline GridFn1D source_calF(int j, const GridFn1D& hsp, const GridFn1D& ep, const GridFn1D& dtep,
                            const GridFn1D& d2tep) {
  return GridFn1D(source_calF(j, std::span<const double>(hsp.v), ep.v, dtep.v, d2tep.v));
}

}  // namespace muskat
