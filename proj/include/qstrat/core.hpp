#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qstrat {

/// Largest ambient dimension handled by the toolkit.
inline constexpr int kMaxDim = 4;

/// A point of R^n stored in a fixed array; coordinates past n are zero.
using Point = std::array<double, kMaxDim>;

enum class ErrorCode {
  domain,
  unsupported_characteristic,
  range,
  insufficient_data,
  scale,
  dimension,
  invalid_argument,
  resolution,
  memory_guard,
  insufficient_sampling,
  parse,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::unsupported_characteristic: return "unsupported_characteristic";
    case ErrorCode::range: return "range";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::scale: return "scale";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::resolution: return "resolution";
    case ErrorCode::memory_guard: return "memory_guard";
    case ErrorCode::insufficient_sampling: return "insufficient_sampling";
    case ErrorCode::parse: return "parse";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline Point operator+(const Point& a, const Point& b) {
  Point r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
  return r;
}

inline Point operator-(const Point& a, const Point& b) {
  Point r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] - b[i];
  return r;
}

inline Point operator*(double s, const Point& a) {
  Point r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = s * a[i];
  return r;
}

inline double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (int i = 0; i < kMaxDim; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }

inline double distance(const Point& a, const Point& b) { return norm(a - b); }

/// Unit coordinate vector e_i (0-based).
inline Point unit(int i) {
  Point e{};
  e[i] = 1.0;
  return e;
}

inline Point make_point(std::initializer_list<double> xs) {
  if (xs.size() > static_cast<std::size_t>(kMaxDim))
    throw Error(ErrorCode::dimension, "point has more than 4 coordinates");
  Point p{};
  std::copy(xs.begin(), xs.end(), p.begin());
  return p;
}

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Surface area of the unit sphere S^{n-1} in R^n.
inline double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

/// A closed ball B_radius(center) in R^n.
struct Ball {
  Point center{};
  double radius = 1.0;
};

}  // namespace qstrat
