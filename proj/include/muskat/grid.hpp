#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace muskat {

// Nodal values on N+1 uniform nodes of [-1,1].
struct GridFn1D {
  std::vector<double> v;

  GridFn1D() = default;
  explicit GridFn1D(int N, double fill = 0.0) : v(static_cast<std::size_t>(N) + 1, fill) {
    if (N < 8) throw std::invalid_argument("GridFn1D: need N >= 8, got " + std::to_string(N));
  }
  explicit GridFn1D(std::vector<double> vals) : v(std::move(vals)) {
    if (v.size() < 9) throw std::invalid_argument("GridFn1D: need at least 9 nodes");
  }

  template <class F>
  static GridFn1D sample(int N, F&& f) {
    GridFn1D g(N);
    for (int i = 0; i <= N; ++i) g.v[i] = f(g.x(i));
    return g;
  }

  int N() const { return static_cast<int>(v.size()) - 1; }
  int size() const { return static_cast<int>(v.size()); }
  double dx() const { return 2.0 / N(); }
  double x(int i) const { return -1.0 + i * dx(); }

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }

  bool finite() const {
    for (double a : v)
      if (!std::isfinite(a)) return false;
    return true;
  }

  GridFn1D& operator+=(const GridFn1D& o) {
    for (int i = 0; i < size(); ++i) v[i] += o.v[i];
    return *this;
  }
  GridFn1D& operator-=(const GridFn1D& o) {
    for (int i = 0; i < size(); ++i) v[i] -= o.v[i];
    return *this;
  }
  GridFn1D& operator*=(double a) {
    for (double& e : v) e *= a;
    return *this;
  }
  friend GridFn1D operator+(GridFn1D a, const GridFn1D& b) { return a += b; }
  friend GridFn1D operator-(GridFn1D a, const GridFn1D& b) { return a -= b; }
  friend GridFn1D operator*(double s, GridFn1D a) { return a *= s; }
};

inline void require_same_grid(const GridFn1D& a, const GridFn1D& b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": mismatched grid sizes");
}

// Centered 2nd-order first derivative, one-sided 2nd order at the ends.
inline GridFn1D d1(const GridFn1D& f) {
  const int N = f.N();
  const double h = f.dx();
  GridFn1D r(N);
  r[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  r[N] = (3.0 * f[N] - 4.0 * f[N - 1] + f[N - 2]) / (2.0 * h);
  for (int i = 1; i < N; ++i) r[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  return r;
}

inline GridFn1D d2(const GridFn1D& f) {
  const int N = f.N();
  const double h2 = f.dx() * f.dx();
  GridFn1D r(N);
  r[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
  r[N] = (2.0 * f[N] - 5.0 * f[N - 1] + 4.0 * f[N - 2] - f[N - 3]) / h2;
  for (int i = 1; i < N; ++i) r[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
  return r;
}

// Trapezoid weights of the grid (also the lumped P1 mass).
inline std::vector<double> trapezoid_weights(int N) {
  const double h = 2.0 / N;
  std::vector<double> w(static_cast<std::size_t>(N) + 1, h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

inline double trapezoid(const GridFn1D& f) {
  const double h = f.dx();
  double s = 0.5 * (f.v.front() + f.v.back());
  for (int i = 1; i < f.N(); ++i) s += f[i];
  return s * h;
}

// Trapezoid plus the Euler-Maclaurin end correction h^2/12 (f'(-1) - f'(1)).
inline double trapezoid_corrected(const GridFn1D& f, double df_left, double df_right) {
  const double h = f.dx();
  return trapezoid(f) + h * h / 12.0 * (df_left - df_right);
}

// Element (chord) slopes, N entries.
inline std::vector<double> element_slopes(const GridFn1D& f) {
  const int N = f.N();
  const double h = f.dx();
  std::vector<double> s(N);
  for (int e = 0; e < N; ++e) s[e] = (f[e + 1] - f[e]) / h;
  return s;
}

}  // namespace muskat
