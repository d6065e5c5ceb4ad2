#pragma once

// Spherical mean S, spherical max M, volume mean V, their radial profiles,
// and the Laplacian mass read off the left derivative of S.

#include <vector>

#include "qstrat/fields.hpp"
#include "qstrat/kernels.hpp"
#include "qstrat/quadrature.hpp"

namespace qstrat {

enum class Statistic { S, M, V };

inline ProfileKind profile_kind(Statistic s) {
  switch (s) {
    case Statistic::S: return ProfileKind::S;
    case Statistic::M: return ProfileKind::M;
    case Statistic::V: return ProfileKind::V;
  }
  return ProfileKind::other;
}

namespace detail {
inline void require_ball(const ScalarField& u, const Point& x, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::domain, "radius must be positive");
  if (r > u.room(x) * (1.0 + 1e-9) + 1e-12) throw Error(ErrorCode::domain, "ball B_r(x) not contained in field domain");
}

/// Orthonormal basis of the tangent space of the sphere at unit vector y.
inline std::vector<Point> tangent_basis(const Point& y, int n) {
  std::vector<Point> basis;
  for (int i = 0; i < n && static_cast<int>(basis.size()) < n - 1; ++i) {
    Point v = unit(i) - y[i] * y;
    for (const auto& b : basis) v = v - dot(v, b) * b;
    const double len = norm(v);
    if (len > 0.2) basis.push_back((1.0 / len) * v);
  }
  return basis;
}
}  // namespace detail

/// S(u,x,r): average of u over the sphere of radius r about x.
inline double spherical_mean(const ScalarField& u, const Point& x, double r, const Quadrature& quad) {
  detail::require_ball(u, x, r);
  const SphereRule& sphere = quad.sphere(u.dim());
  double acc = 0.0;
  for (std::size_t j = 0; j < sphere.size(); ++j) acc += sphere.weights[j] * u.sample(x + r * sphere.nodes[j]);
  return acc;
}

/// V(u,x,r): average of u over the ball of radius r about x.
inline double volume_mean(const ScalarField& u, const Point& x, double r, const Quadrature& quad) {
  detail::require_ball(u, x, r);
  return ball_average(u.dim(), Ball{x, r}, quad, [&](const Point& y) { return u.sample(y); });
}

/// M(u,x,r): sup of u over the closed ball, from sphere and interior samples
/// followed by compass refinement around the best candidates.
inline double spherical_max(const ScalarField& u, const Point& x, double r, const Quadrature& quad) {
  detail::require_ball(u, x, r);
  const int n = u.dim();
  struct Candidate {
    double value;
    double radius;  // fraction of r
    Point dir;
  };
  std::vector<Candidate> cands;
  const SphereRule& sphere = quad.sphere(n);
  for (const auto& node : sphere.nodes) cands.push_back({u.sample(x + r * node), 1.0, node});
  const SphereRule& coarse = quad.coarse_sphere(n);
  for (double frac : {0.25, 0.5, 0.75})
    for (const auto& node : coarse.nodes) cands.push_back({u.sample(x + (frac * r) * node), frac, node});
  cands.push_back({u.sample(x), 0.0, unit(0)});

  const std::size_t keep = std::min<std::size_t>(3, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                    [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
  double best = cands.front().value;
  const int rounds = std::max(0, quad.config().max_refine_rounds);
  for (std::size_t c = 0; c < keep && rounds > 0; ++c) {
    Candidate cur = cands[c];
    if (cur.radius == 0.0) continue;
    double step = sphere.spacing;
    const int max_iter = 16 * rounds;
    for (int it = 0; it < max_iter && step > 1e-9; ++it) {
      bool improved = false;
      const auto tangents = detail::tangent_basis(cur.dir, n);
      for (const auto& t : tangents) {
        for (double sgn : {1.0, -1.0}) {
          Point d = cur.dir + (sgn * step) * t;
          d = (1.0 / norm(d)) * d;
          const double v = u.sample(x + (cur.radius * r) * d);
          if (v > cur.value) {
            cur.value = v;
            cur.dir = d;
            improved = true;
          }
        }
      }
      if (cur.radius < 1.0) {
        for (double sgn : {1.0, -1.0}) {
          const double rad = std::clamp(cur.radius + sgn * step, 0.0, 1.0);
          const double v = u.sample(x + (rad * r) * cur.dir);
          if (v > cur.value) {
            cur.value = v;
            cur.radius = rad;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    best = std::max(best, cur.value);
  }
  return best;
}

inline double statistic(Statistic which, const ScalarField& u, const Point& x, double r, const Quadrature& quad) {
  switch (which) {
    case Statistic::S: return spherical_mean(u, x, r, quad);
    case Statistic::M: return spherical_max(u, x, r, quad);
    case Statistic::V: return volume_mean(u, x, r, quad);
  }
  return 0.0;
}

/// Per-radius statistic; radii are sorted ascending.
inline RadialProfile profile(const ScalarField& u, const Point& x, std::vector<double> radii, Statistic which,
                             const Quadrature& quad) {
  std::sort(radii.begin(), radii.end());
  std::vector<double> values;
  values.reserve(radii.size());
  for (double r : radii) values.push_back(statistic(which, u, x, r, quad));
  return RadialProfile(std::move(radii), std::move(values), profile_kind(which));
}

/// Left derivative of f(r) with respect to K_p(r), as a left difference
/// quotient with step r/8 and one Richardson extrapolation.
template <class F>
double left_kp_derivative(F&& f, double r, double p) {
  const RieszKernel kernel(p);
  const double delta = r / 8.0;
  const double fr = f(r);
  const double kr = kernel(r);
  const double q1 = (fr - f(r - delta)) / (kr - kernel(r - delta));
  const double q2 = (fr - f(r - 0.5 * delta)) / (kr - kernel(r - 0.5 * delta));
  return 2.0 * q2 - q1;
}

struct LaplacianMass {
  /// Mass of Delta u on B_r(x) in units where K_n(|.|) carries mass 1; clamped at 0.
  double value = 0.0;
  double raw = 0.0;
  bool non_subharmonic = false;
};

inline LaplacianMass laplacian_mass(const ScalarField& u, const Point& x, double r, const Quadrature& quad,
                                    double tolerance = 1e-6) {
  detail::require_ball(u, x, r);
  const double kn = std::max(1.0, static_cast<double>(u.dim()));
  const double raw = left_kp_derivative([&](double s) { return spherical_mean(u, x, s, quad); }, r, kn);
  LaplacianMass m;
  m.raw = raw;
  m.value = std::max(0.0, raw);
  m.non_subharmonic = raw < -tolerance;
  return m;
}

}  // namespace qstrat
