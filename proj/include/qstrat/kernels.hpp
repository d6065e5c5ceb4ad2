#pragma once

// Riesz kernels K_p and K_p-convexity utilities on sampled radial profiles.

#include <string>
#include <utility>
#include <vector>

#include "qstrat/core.hpp"

namespace qstrat {

/// Normalization: K_p(t) = -t^{2-p} for p > 2, log t for p = 2,
/// t^{2-p} for 1 <= p < 2. Increasing and radially harmonic on R^p \ {0}.
class RieszKernel {
 public:
  explicit RieszKernel(double p) : p_(p) {
    if (!(p >= 1.0)) throw Error(ErrorCode::unsupported_characteristic, "Riesz characteristic p must be >= 1");
  }

  double p() const noexcept { return p_; }

  double operator()(double t) const {
    check(t);
    if (p_ == 2.0) return std::log(t);
    if (p_ > 2.0) return -std::pow(t, 2.0 - p_);
    return std::pow(t, 2.0 - p_);
  }

  double derivative(double t) const {
    check(t);
    if (p_ == 2.0) return 1.0 / t;
    return std::abs(2.0 - p_) * std::pow(t, 1.0 - p_);
  }

  /// Inverse of t -> K_p(t) on (0, inf).
  double inverse(double k) const {
    if (p_ == 2.0) return std::exp(k);
    if (p_ > 2.0) {
      if (!(k < 0.0)) throw Error(ErrorCode::range, "K_p takes only negative values for p > 2");
      return std::pow(-k, 1.0 / (2.0 - p_));
    }
    if (p_ == 1.0) return k;
    return std::pow(k, 1.0 / (2.0 - p_));
  }

 private:
  static void check(double t) {
    if (!(t > 0.0)) throw Error(ErrorCode::domain, "Riesz kernel evaluated at t <= 0");
  }

  double p_;
};

inline double riesz_kernel(double p, double t) { return RieszKernel(p)(t); }
inline double riesz_kernel_derivative(double p, double t) { return RieszKernel(p).derivative(t); }

enum class ProfileKind { S, M, V, theta_F, theta_G, other };

inline const char* to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::S: return "S";
    case ProfileKind::M: return "M";
    case ProfileKind::V: return "V";
    case ProfileKind::theta_F: return "theta_F";
    case ProfileKind::theta_G: return "theta_G";
    case ProfileKind::other: return "other";
  }
  return "other";
}

/// Sampled radius -> value curve. Radii strictly increasing.
class RadialProfile {
 public:
  RadialProfile() = default;
  RadialProfile(std::vector<double> radii, std::vector<double> values, ProfileKind kind = ProfileKind::other)
      : radii_(std::move(radii)), values_(std::move(values)), kind_(kind) {
    if (radii_.size() != values_.size())
      throw Error(ErrorCode::invalid_argument, "profile radii and values differ in length");
    for (std::size_t i = 0; i < radii_.size(); ++i) {
      if (!(radii_[i] > 0.0)) throw Error(ErrorCode::invalid_argument, "profile radii must be positive");
      if (i > 0 && !(radii_[i] > radii_[i - 1]))
        throw Error(ErrorCode::invalid_argument, "profile radii must be strictly increasing");
    }
  }

  const std::vector<double>& radii() const noexcept { return radii_; }
  const std::vector<double>& values() const noexcept { return values_; }
  ProfileKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return radii_.size(); }
  bool empty() const noexcept { return radii_.empty(); }

  /// Value at r, interpolated linearly in the K_p(r) coordinate.
  double at(double r, const RieszKernel& kernel) const {
    if (radii_.empty() || r < radii_.front() || r > radii_.back())
      throw Error(ErrorCode::range, "radius outside profile range");
    auto it = std::lower_bound(radii_.begin(), radii_.end(), r);
    std::size_t i = static_cast<std::size_t>(it - radii_.begin());
    if (radii_[i] == r) return values_[i];
    const double k0 = kernel(radii_[i - 1]);
    const double k1 = kernel(radii_[i]);
    const double w = (kernel(r) - k0) / (k1 - k0);
    return (1.0 - w) * values_[i - 1] + w * values_[i];
  }

 private:
  std::vector<double> radii_;
  std::vector<double> values_;
  ProfileKind kind_ = ProfileKind::other;
};

/// Difference quotient (f(r) - f(s)) / (K_p(r) - K_p(s)).
inline double kp_quotient(const RadialProfile& f, double r, double s, double p) {
  if (r == s) throw Error(ErrorCode::invalid_argument, "kp_quotient needs r != s");
  const RieszKernel kernel(p);
  return (f.at(r, kernel) - f.at(s, kernel)) / (kernel(r) - kernel(s));
}

/// Largest decrease between consecutive K_p-quotients; 0 means K_p-convex.
inline double kp_convexity_defect(const RadialProfile& f, double p) {
  if (f.size() < 3) throw Error(ErrorCode::insufficient_data, "convexity defect needs at least 3 radii");
  const RieszKernel kernel(p);
  const auto& r = f.radii();
  const auto& v = f.values();
  double defect = 0.0;
  double prev = (v[1] - v[0]) / (kernel(r[1]) - kernel(r[0]));
  for (std::size_t i = 2; i < f.size(); ++i) {
    const double next = (v[i] - v[i - 1]) / (kernel(r[i]) - kernel(r[i - 1]));
    defect = std::max(defect, prev - next);
    prev = next;
  }
  return defect;
}

}  // namespace qstrat
