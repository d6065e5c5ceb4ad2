#pragma once

// Independent reference computations for the unit tests. These deliberately
// avoid the library's quadrature and use plain midpoint rules.

#include <cmath>
#include <functional>
#include <numbers>

#include "qstrat/core.hpp"

namespace oracle {

using qstrat::Point;

/// Mean of f over the sphere |y - x| = r in R^3, midpoint rule in (cos theta, phi).
inline double sphere_mean_3d(const std::function<double(const Point&)>& f, const Point& x, double r, int m = 400) {
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double z = -1.0 + (i + 0.5) * 2.0 / m;
    const double s = std::sqrt(1.0 - z * z);
    for (int j = 0; j < 2 * m; ++j) {
      const double phi = (j + 0.5) * std::numbers::pi / m;
      Point y = x;
      y[0] += r * s * std::cos(phi);
      y[1] += r * s * std::sin(phi);
      y[2] += r * z;
      acc += f(y);
    }
  }
  return acc / (2.0 * m * m);
}

/// Mean over the circle |y - x| = r in R^2.
inline double circle_mean(const std::function<double(const Point&)>& f, const Point& x, double r, int m = 4000) {
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    const double phi = (j + 0.5) * 2.0 * std::numbers::pi / m;
    Point y = x;
    y[0] += r * std::cos(phi);
    y[1] += r * std::sin(phi);
    acc += f(y);
  }
  return acc / m;
}

/// Second-order central-difference Laplacian in R^n.
inline double laplacian(const std::function<double(const Point&)>& f, const Point& x, int n, double h = 1e-3) {
  double acc = 0.0;
  for (int d = 0; d < n; ++d) {
    Point a = x, b = x;
    a[d] += h;
    b[d] -= h;
    acc += f(a) - 2.0 * f(x) + f(b);
  }
  return acc / (h * h);
}

inline double riesz(double p, double t) {
  if (p > 2.0) return -std::pow(t, 2.0 - p);
  if (p == 2.0) return std::log(t);
  return std::pow(t, 2.0 - p);
}

}  // namespace oracle
