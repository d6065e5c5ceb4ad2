#pragma once

// Deterministic product quadrature rules on spheres S^{n-1} and balls B^n, n <= 4.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <map>
#include <tuple>
#include <vector>

#include "qstrat/core.hpp"

namespace qstrat {

/// Gauss-Legendre nodes and weights on [a, b].
inline void gauss_legendre(int m, double a, double b, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(m, 0.0);
  weights.assign(m, 0.0);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (m == 1) p0 = 1.0;
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (m == 1) p0 = 1.0;
      dp = m * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = mid - half * x;
    nodes[m - 1 - i] = mid + half * x;
    weights[i] = half * w;
    weights[m - 1 - i] = half * w;
  }
}

/// Haar-random rotation of R^n from a seeded generator.
inline Eigen::MatrixXd random_rotation(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

/// Nodes on the unit sphere of R^n; weights sum to 1 (uniform probability measure).
struct SphereRule {
  int dim = 0;
  std::vector<Point> nodes;
  std::vector<double> weights;
  /// Typical geodesic distance between neighbouring nodes.
  double spacing = 0.0;

  std::size_t size() const noexcept { return nodes.size(); }
};

/// Product rule: trapezoid in angles, Gauss-Legendre in the polar coordinate,
/// then a seeded rotation (seed 0 keeps the coordinate-aligned rule).
inline SphereRule make_sphere_rule(int n, int target_nodes, std::uint64_t seed) {
  if (n < 1 || n > kMaxDim) throw Error(ErrorCode::dimension, "sphere rule dimension must be in [1,4]");
  if (target_nodes < 2) throw Error(ErrorCode::invalid_argument, "sphere rule needs at least 2 nodes");
  SphereRule rule;
  rule.dim = n;
  const double two_pi = 2.0 * std::numbers::pi;
  if (n == 1) {
    rule.nodes = {unit(0), -1.0 * unit(0)};
    rule.weights = {0.5, 0.5};
    rule.spacing = 2.0;
    return rule;
  }
  if (n == 2) {
    const int m = target_nodes;
    for (int j = 0; j < m; ++j) {
      const double phi = two_pi * (j + 0.5) / m;
      rule.nodes.push_back(make_point({std::cos(phi), std::sin(phi)}));
      rule.weights.push_back(1.0 / m);
    }
  } else if (n == 3) {
    const int mz = std::max(2, static_cast<int>(std::lround(std::sqrt(target_nodes / 2.0))));
    const int mphi = 2 * mz;
    std::vector<double> z, wz;
    gauss_legendre(mz, -1.0, 1.0, z, wz);
    for (int i = 0; i < mz; ++i) {
      const double s = std::sqrt(std::max(0.0, 1.0 - z[i] * z[i]));
      for (int j = 0; j < mphi; ++j) {
        const double phi = two_pi * (j + 0.5) / mphi;
        rule.nodes.push_back(make_point({s * std::cos(phi), s * std::sin(phi), z[i]}));
        rule.weights.push_back(0.5 * wz[i] / mphi);
      }
    }
  } else {
    // S^3 in Hopf coordinates: t = sin^2(eta) is uniformly distributed.
    const int mt = std::max(2, static_cast<int>(std::lround(std::cbrt(target_nodes / 4.0))));
    const int mxi = 2 * mt;
    std::vector<double> t, wt;
    gauss_legendre(mt, 0.0, 1.0, t, wt);
    for (int i = 0; i < mt; ++i) {
      const double a = std::sqrt(1.0 - t[i]);
      const double b = std::sqrt(t[i]);
      for (int j = 0; j < mxi; ++j) {
        const double x1 = two_pi * (j + 0.5) / mxi;
        for (int l = 0; l < mxi; ++l) {
          const double x2 = two_pi * (l + 0.25) / mxi;
          rule.nodes.push_back(make_point({a * std::cos(x1), a * std::sin(x1), b * std::cos(x2), b * std::sin(x2)}));
          rule.weights.push_back(wt[i] / (mxi * mxi));
        }
      }
    }
  }
  if (seed != 0) {
    const Eigen::MatrixXd q = random_rotation(n, seed);
    for (auto& node : rule.nodes) {
      Point rotated{};
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rotated[i] += q(i, j) * node[j];
      node = rotated;
    }
  }
  rule.spacing = std::pow(unit_sphere_area(n) / static_cast<double>(rule.size()), 1.0 / (n - 1));
  return rule;
}

/// Radial Gauss-Legendre shells on [0,1] with weights n*rho^{n-1} d rho; weights sum to 1.
struct RadialRule {
  std::vector<double> radii;
  std::vector<double> weights;
};

inline RadialRule make_radial_rule(int n, int shells) {
  if (shells < 1) throw Error(ErrorCode::invalid_argument, "radial rule needs at least one shell");
  RadialRule rule;
  std::vector<double> w;
  gauss_legendre(shells, 0.0, 1.0, rule.radii, w);
  rule.weights.resize(shells);
  for (int i = 0; i < shells; ++i) rule.weights[i] = w[i] * n * std::pow(rule.radii[i], n - 1);
  return rule;
}

/// Ball rule on B_1: weights sum to |B_1|.
struct BallRule {
  std::vector<Point> nodes;
  std::vector<double> weights;
  std::size_t size() const noexcept { return nodes.size(); }
};

inline BallRule make_ball_rule(int n, const SphereRule& sphere, int shells) {
  const RadialRule radial = make_radial_rule(n, shells);
  const double vol = unit_ball_volume(n);
  BallRule rule;
  rule.nodes.reserve(radial.radii.size() * sphere.size());
  for (std::size_t i = 0; i < radial.radii.size(); ++i)
    for (std::size_t j = 0; j < sphere.size(); ++j) {
      rule.nodes.push_back(radial.radii[i] * sphere.nodes[j]);
      rule.weights.push_back(vol * radial.weights[i] * sphere.weights[j]);
    }
  return rule;
}

struct QuadratureConfig {
  int sphere_nodes = 2048;
  int shells = 32;
  std::uint64_t seed = 1;
  /// Local refinement rounds for sphere/ball maxima.
  int max_refine_rounds = 2;
};

/// Pre-built rules for every dimension 1..4.
class Quadrature {
 public:
  explicit Quadrature(QuadratureConfig config = {}) : config_(config) {
    for (int n = 1; n <= kMaxDim; ++n) {
      spheres_[n - 1] = make_sphere_rule(n, config.sphere_nodes, config.seed + static_cast<std::uint64_t>(n));
      coarse_[n - 1] = make_sphere_rule(n, std::max(16, config.sphere_nodes / 8), config.seed + 17u * n);
      shells_[n - 1] = make_radial_rule(n, config.shells);
    }
  }

  const QuadratureConfig& config() const noexcept { return config_; }
  const SphereRule& sphere(int n) const { return spheres_.at(n - 1); }
  /// Coarser rule used for interior shells of the max search.
  const SphereRule& coarse_sphere(int n) const { return coarse_.at(n - 1); }
  const RadialRule& shells(int n) const { return shells_.at(n - 1); }

  /// Number of field evaluations of one ball integral in R^n.
  std::size_t ball_nodes(int n) const { return sphere(n).size() * shells(n).radii.size(); }

  /// Ball rule from the full or coarse sphere rule, built once per (n, coarse, shells).
  const BallRule& ball_rule(int n, bool coarse, int shells) const {
    const auto key = std::make_tuple(n, coarse, shells);
    auto it = balls_.find(key);
    if (it == balls_.end()) it = balls_.emplace(key, make_ball_rule(n, coarse ? coarse_sphere(n) : sphere(n), shells)).first;
    return it->second;
  }

 private:
  QuadratureConfig config_;
  std::array<SphereRule, kMaxDim> spheres_;
  std::array<SphereRule, kMaxDim> coarse_;
  std::array<RadialRule, kMaxDim> shells_;
  mutable std::map<std::tuple<int, bool, int>, BallRule> balls_;
};

}  // namespace qstrat
