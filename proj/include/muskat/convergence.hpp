#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace muskat {

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0 && y[k] > 0)) throw std::invalid_argument("loglog_slope: values must be positive");
    const double a = std::log(x[k]), b = std::log(y[k]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Observed convergence order of errors on resolutions N (error ~ N^-order).
inline double observed_order(const std::vector<double>& N, const std::vector<double>& err) {
  return -loglog_slope(N, err);
}

}  // namespace muskat
