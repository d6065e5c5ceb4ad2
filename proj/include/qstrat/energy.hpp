#pragma once

// F-energy theta_F = S/K_p + M/K_p with the monotonicity normalization,
// G-energy theta_G over a family of p-planes, and the rigidity probes.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "qstrat/homogeneity.hpp"
#include "qstrat/means.hpp"

namespace qstrat {

/// A compact family of p-planes of R^n with its invariant probability measure.
struct GrassmannianFamily {
  enum class Kind { full, complex_lines, explicit_list };
  int n = 0;
  int p = 0;
  Kind kind = Kind::full;
  int samples = 64;
  std::uint64_t seed = 1;
  /// Planes of an explicit family.
  std::vector<PlaneFrame> planes;

  static GrassmannianFamily full(int n, int p, int samples, std::uint64_t seed) {
    return {n, p, Kind::full, samples, seed, {}};
  }
  static GrassmannianFamily complex_lines(int n, int samples, std::uint64_t seed) {
    return {n, 2, Kind::complex_lines, samples, seed, {}};
  }
  static GrassmannianFamily explicit_planes(std::vector<PlaneFrame> planes) {
    GrassmannianFamily f;
    f.kind = Kind::explicit_list;
    f.n = planes.empty() ? 0 : planes.front().ambient_dim();
    f.p = planes.empty() ? 0 : planes.front().dim();
    f.samples = static_cast<int>(planes.size());
    f.planes = std::move(planes);
    return f;
  }

  /// Seeded sample; explicit families return their planes.
  std::vector<PlaneFrame> sample() const {
    if (samples < 8) throw Error(ErrorCode::insufficient_sampling, "plane family needs at least 8 samples");
    if (n < 1 || n > kMaxDim || p < 1 || p > n) throw Error(ErrorCode::dimension, "family needs 1 <= p <= n <= 4");
    std::vector<PlaneFrame> out;
    std::mt19937_64 rng(seed);
    switch (kind) {
      case Kind::full:
        for (int i = 0; i < samples; ++i) out.push_back(random_plane(n, p, rng));
        break;
      case Kind::complex_lines: {
        if (n % 2 != 0 || p != 2) throw Error(ErrorCode::dimension, "complex lines need even n and p = 2");
        std::normal_distribution<double> g(0.0, 1.0);
        for (int i = 0; i < samples; ++i) {
          Point v{};
          for (int d = 0; d < n; ++d) v[d] = g(rng);
          v = (1.0 / norm(v)) * v;
          // standard complex structure: (a, b) -> (-b, a) on each coordinate pair
          Point jv{};
          for (int d = 0; d + 1 < n; d += 2) {
            jv[d] = -v[d + 1];
            jv[d + 1] = v[d];
          }
          out.push_back(PlaneFrame::from_vectors(n, {v, jv}));
        }
        break;
      }
      case Kind::explicit_list:
        for (const auto& w : planes) {
          if (w.dim() != p || w.ambient_dim() != n) throw Error(ErrorCode::dimension, "explicit family planes differ in dimension");
          out.push_back(w);
        }
        break;
    }
    return out;
  }
};

inline const char* to_string(GrassmannianFamily::Kind k) {
  switch (k) {
    case GrassmannianFamily::Kind::full: return "full";
    case GrassmannianFamily::Kind::complex_lines: return "complex_lines";
    case GrassmannianFamily::Kind::explicit_list: return "explicit";
  }
  return "full";
}

namespace detail {
inline void require_energy_p(double p) {
  if (!(p > 2.0)) throw Error(ErrorCode::unsupported_characteristic, "F-energy needs p > 2 (K_2 vanishes at r = 1)");
}
}  // namespace detail

/// theta_F(u,x,r) = S(u,x,r)/K_p(r) + M(u,x,r)/K_p(r).
inline double f_energy(const ScalarField& u, const Point& x, double r, const Quadrature& quad) {
  detail::require_energy_p(u.p());
  const double k = RieszKernel(u.p())(r);
  return (spherical_mean(u, x, r, quad) + spherical_max(u, x, r, quad)) / k;
}

inline RadialProfile f_energy_profile(const ScalarField& u, const Point& x, std::vector<double> radii, const Quadrature& quad) {
  detail::require_energy_p(u.p());
  std::sort(radii.begin(), radii.end());
  for (double r : radii)
    if (!(r > 0.0 && r <= 0.5)) throw Error(ErrorCode::range, "F-energy radii must lie in (0, 1/2]");
  std::vector<double> v;
  for (double r : radii) v.push_back(f_energy(u, x, r, quad));
  return RadialProfile(std::move(radii), std::move(v), ProfileKind::theta_F);
}

/// Probe centers: the origin and +-e_i/2.
inline std::vector<Point> probe_centers(int n) {
  std::vector<Point> c{Point{}};
  for (int i = 0; i < n; ++i) {
    c.push_back(0.5 * unit(i));
    c.push_back(-0.5 * unit(i));
  }
  return c;
}

struct Normalization {
  ScalarField field;
  double N = 0.0;
  std::vector<Point> centers;
};

/// u - N with N = max over centers x in B_1 (the half-integer lattice, which
/// contains the probe centers) of S(u,x,1/2) - Q_S(x) K_p(1/2) and the same for
/// M, where Q is the (1/2, 2/3) K_p-quotient of the profile.
inline Normalization normalize_for_monotonicity(const ScalarField& u, const Quadrature& quad) {
  const double p = u.p();
  detail::require_energy_p(p);
  const RieszKernel k(p);
  const double a = 0.5, b = 2.0 / 3.0;
  Normalization out;
  out.centers = ball_lattice(u.dim(), Ball{Point{}, 1.0}, 0.5);
  out.N = kNegInf;
  for (const auto& x : out.centers) {
    for (Statistic which : {Statistic::S, Statistic::M}) {
      const double fa = statistic(which, u, x, a, quad);
      const double fb = statistic(which, u, x, b, quad);
      const double q = (fb - fa) / (k(b) - k(a));
      out.N = std::max(out.N, fa - q * k(a));
    }
  }
  out.field = add_constant(u, -out.N);
  return out;
}

struct FRigidityReport {
  std::vector<double> deltas;
  /// theta_F(u,x,1/2) - theta_F(u,x,delta) per delta.
  std::vector<double> drops;
  double defect_lower = 0.0;
  double defect_upper = kInf;
};

inline FRigidityReport f_rigidity_probe(const ScalarField& u, const Point& x, std::vector<double> deltas,
                                        const Quadrature& quad, HomogeneityOptions opts = {}) {
  detail::require_energy_p(u.p());
  FRigidityReport rep;
  const double top = f_energy(u, x, 0.5, quad);
  std::sort(deltas.begin(), deltas.end());
  for (double d : deltas) {
    if (!(d > 0.0 && d <= 0.5)) throw Error(ErrorCode::range, "rigidity deltas must lie in (0, 1/2]");
    rep.deltas.push_back(d);
    rep.drops.push_back(top - f_energy(u, x, d, quad));
  }
  const auto h = homogeneity_defect(u, x, 1.0, 0, quad, opts);
  rep.defect_lower = h.lower;
  rep.defect_upper = h.upper;
  return rep;
}

struct GEnergyValue {
  double value = 0.0;
  /// Monte-Carlo standard error of the plane average (0 for explicit families).
  double standard_error = 0.0;
  double ambient_term = 0.0;
};

namespace detail {
inline int family_dim(const ScalarField& u, const GrassmannianFamily& family) {
  const double p = u.p();
  if (p < 2.0) throw Error(ErrorCode::unsupported_characteristic, "G-energy needs p >= 2");
  if (std::abs(p - std::round(p)) > 1e-12 || static_cast<int>(std::round(p)) != family.p)
    throw Error(ErrorCode::dimension, "family plane dimension must equal the characteristic p");
  if (family.n != u.dim()) throw Error(ErrorCode::dimension, "family ambient dimension differs from field dimension");
  return family.p;
}

inline GEnergyValue g_energy_from_planes(const ScalarField& u, const Point& x, double r,
                                         const std::vector<PlaneFrame>& planes, bool monte_carlo, const Quadrature& quad) {
  const double p = u.p();
  std::vector<double> per_plane;
  per_plane.reserve(planes.size());
  for (const auto& w : planes) {
    const ScalarField restricted = restrict_field(u, w, x);
    const double s = left_kp_derivative([&](double t) { return spherical_mean(restricted, Point{}, t, quad); }, r, p);
    const double m = left_kp_derivative([&](double t) { return spherical_max(restricted, Point{}, t, quad); }, r, p);
    per_plane.push_back(s + m);
  }
  GEnergyValue g;
  double sum = 0.0;
  for (double v : per_plane) sum += v;
  const double mean = sum / per_plane.size();
  double var = 0.0;
  for (double v : per_plane) var += (v - mean) * (v - mean);
  if (monte_carlo && per_plane.size() > 1) g.standard_error = std::sqrt(var / (per_plane.size() - 1) / per_plane.size());
  g.ambient_term = left_kp_derivative([&](double t) { return spherical_max(u, x, t, quad); }, r, p);
  g.value = mean + g.ambient_term;
  return g;
}
}  // namespace detail

/// theta_G(u,x,r): plane average of S'_-/K_p' + M'_-/K_p' of u restricted to W + x,
/// plus the ambient M'_-/K_p'.
inline GEnergyValue g_energy(const ScalarField& u, const Point& x, double r, const GrassmannianFamily& family,
                             const Quadrature& quad) {
  detail::family_dim(u, family);
  detail::require_ball(u, x, r);
  return detail::g_energy_from_planes(u, x, r, family.sample(), family.kind != GrassmannianFamily::Kind::explicit_list, quad);
}

struct GEnergyProfile {
  RadialProfile profile;
  std::vector<double> standard_error;
};

inline GEnergyProfile g_energy_profile(const ScalarField& u, const Point& x, std::vector<double> radii,
                                       const GrassmannianFamily& family, const Quadrature& quad) {
  detail::family_dim(u, family);
  std::sort(radii.begin(), radii.end());
  const auto planes = family.sample();
  const bool mc = family.kind != GrassmannianFamily::Kind::explicit_list;
  std::vector<double> v, se;
  for (double r : radii) {
    detail::require_ball(u, x, r);
    const auto g = detail::g_energy_from_planes(u, x, r, planes, mc, quad);
    v.push_back(g.value);
    se.push_back(g.standard_error);
  }
  return {RadialProfile(std::move(radii), std::move(v), ProfileKind::theta_G), std::move(se)};
}

struct GEnergyBound {
  /// max over probe centers of theta_G(u,x,1/2) / Lambda.
  double energy_ratio = 0.0;
  /// Plane average of ||u|_W||_{L1(A cap W)} over ||u||_{L1(A)}, A = A_{1/2,1}(0).
  double annulus_ratio = 0.0;
  double l1_norm = 0.0;
};

namespace detail {
/// Integral of |u(x + sum t_i w_i)| over the annulus a <= |t| <= b of the plane (or R^n).
inline double annulus_l1(const ScalarField& u, const PlaneFrame* plane, int dim, double a, double b, const Quadrature& quad) {
  std::vector<double> rho, wr;
  gauss_legendre(16, a, b, rho, wr);
  const SphereRule& sphere = quad.sphere(dim);
  const double area = unit_sphere_area(dim);
  double acc = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    double shell = 0.0;
    for (std::size_t j = 0; j < sphere.size(); ++j) {
      const Point t = rho[i] * sphere.nodes[j];
      const Point y = plane ? plane->embed(Point{}, t) : t;
      shell += sphere.weights[j] * finite_abs(u.sample(y));
    }
    acc += wr[i] * area * std::pow(rho[i], dim - 1) * shell;
  }
  return acc;
}
}  // namespace detail

inline GEnergyBound g_energy_bound_check(const ScalarField& u, double lambda, const GrassmannianFamily& family,
                                         const Quadrature& quad) {
  const int p = detail::family_dim(u, family);
  if (!(lambda > 0.0)) throw Error(ErrorCode::invalid_argument, "Lambda must be positive");
  GEnergyBound out;
  out.l1_norm = l1_norm(u, Ball{Point{}, 2.0}, quad).value;
  if (out.l1_norm > lambda * (1.0 + 1e-6))
    throw Error(ErrorCode::invalid_argument, "||u||_{L1(B_2)} exceeds Lambda");
  const auto planes = family.sample();
  const bool mc = family.kind != GrassmannianFamily::Kind::explicit_list;
  for (const auto& x : probe_centers(u.dim()))
    out.energy_ratio =
        std::max(out.energy_ratio, detail::g_energy_from_planes(u, x, 0.5, planes, mc, quad).value / lambda);
  const double ambient = detail::annulus_l1(u, nullptr, u.dim(), 0.5, 1.0, quad);
  double restricted = 0.0;
  for (const auto& w : planes) restricted += detail::annulus_l1(u, &w, p, 0.5, 1.0, quad);
  restricted /= planes.size();
  out.annulus_ratio = restricted == 0.0 ? 0.0 : restricted / ambient;
  return out;
}

struct GRigidityReport {
  double delta0 = 0.0;
  double outer_radius = 0.0;
  double theta_inner = 0.0;
  double theta_outer = 0.0;
  double drop = 0.0;
  double standard_error = 0.0;
  double defect_lower = 0.0;
  double defect_upper = kInf;
  /// Growth hypothesis ||u||_{L1(B_r(x))} <= lambda r^{n-p+2} (p > 2) or M(u,x,1) = 0 (p = 2).
  bool hypothesis_ok = true;
  double growth_ratio = 0.0;
};

/// Energy drop theta_G(u,x,min(1/delta0, R)) - theta_G(u,x,delta0) next to the defect at scale 1.
inline GRigidityReport g_rigidity_probe(const ScalarField& u, const Point& x, double delta0, const GrassmannianFamily& family,
                                        const Quadrature& quad, double lambda = kInf, double outer = 0.5,
                                        HomogeneityOptions opts = {}) {
  detail::family_dim(u, family);
  if (!(delta0 > 0.0 && delta0 < outer)) throw Error(ErrorCode::range, "delta0 must lie in (0, R)");
  GRigidityReport rep;
  rep.delta0 = delta0;
  rep.outer_radius = std::min(1.0 / delta0, outer);
  const auto planes = family.sample();
  const bool mc = family.kind != GrassmannianFamily::Kind::explicit_list;
  const auto inner = detail::g_energy_from_planes(u, x, delta0, planes, mc, quad);
  const auto outer_v = detail::g_energy_from_planes(u, x, rep.outer_radius, planes, mc, quad);
  rep.theta_inner = inner.value;
  rep.theta_outer = outer_v.value;
  rep.drop = outer_v.value - inner.value;
  rep.standard_error = std::hypot(inner.standard_error, outer_v.standard_error);
  const double p = u.p();
  const int n = u.dim();
  if (p > 2.0) {
    for (double r = rep.outer_radius; r >= delta0 * (1.0 - 1e-12); r *= 0.5) {
      const double l1 = l1_norm(u, Ball{x, r}, quad).value;
      rep.growth_ratio = std::max(rep.growth_ratio, l1 / std::pow(r, n - p + 2.0));
    }
    rep.hypothesis_ok = rep.growth_ratio <= lambda * (1.0 + 1e-6);
  } else {
    const double m = spherical_max(u, x, 1.0, quad);
    rep.growth_ratio = std::abs(m);
    rep.hypothesis_ok = std::abs(m) <= 1e-6;
  }
  const auto h = homogeneity_defect(u, x, 1.0, 0, quad, opts);
  rep.defect_lower = h.lower;
  rep.defect_upper = h.upper;
  return rep;
}

}  // namespace qstrat
