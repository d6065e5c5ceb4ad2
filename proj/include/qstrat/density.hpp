#pragma once

// Densities from K_p-quotients of radial profiles, and extraction of the
// high-density set E_c(u) on a lattice.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "qstrat/means.hpp"

namespace qstrat {

struct DensityEstimate {
  double theta_S = 0.0;
  double theta_M = 0.0;
  double theta_V = 0.0;
  /// The rung pair (smaller, larger) the estimates were read from.
  std::pair<double, double> radii_used{0.0, 0.0};
  /// |theta_S - (n-p+2)/n theta_V| and |theta_S - theta_M|.
  double consistency_V = 0.0;
  double consistency_M = 0.0;
  /// Quotient of the primary profile at every consecutive rung pair, from large to small.
  std::vector<double> quotients;
  /// Largest increase of the quotient as the radius decreases (0 when monotone).
  double monotonicity_defect = 0.0;
  /// Set when the quotient increases toward small radii beyond tolerance.
  bool non_subharmonic = false;
};

/// Geometric ladder r0, r0/2, ... of the given length.
inline std::vector<double> dyadic_ladder(double r0, int rungs) {
  std::vector<double> out;
  for (int i = 0; i < rungs; ++i) out.push_back(r0 * std::pow(0.5, i));
  return out;
}

namespace detail {
inline void check_ladder(const ScalarField& u, const Point& x, const std::vector<double>& ladder) {
  if (ladder.size() < 4) throw Error(ErrorCode::insufficient_data, "density ladder needs at least 4 radii");
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (!(ladder[i] < ladder[i - 1])) throw Error(ErrorCode::invalid_argument, "density ladder must be descending");
  const double ratio = ladder[1] / ladder[0];
  for (std::size_t i = 2; i < ladder.size(); ++i)
    if (std::abs(ladder[i] / ladder[i - 1] - ratio) > 1e-9 * std::max(1.0, ratio))
      throw Error(ErrorCode::invalid_argument, "density ladder must be geometric");
  if (!(ladder.back() > 0.0)) throw Error(ErrorCode::invalid_argument, "density ladder radii must be positive");
  detail::require_ball(u, x, ladder.front());
}

inline std::vector<double> ladder_quotients(const std::vector<double>& ladder, const std::vector<double>& values,
                                            const RieszKernel& k) {
  std::vector<double> q;
  for (std::size_t i = 1; i < ladder.size(); ++i)
    q.push_back((values[i - 1] - values[i]) / (k(ladder[i - 1]) - k(ladder[i])));
  return q;
}
}  // namespace detail

/// Densities at x from a descending geometric ladder, read off the smallest rung pair.
inline DensityEstimate density(const ScalarField& u, const Point& x, const std::vector<double>& ladder,
                               const Quadrature& quad, double tolerance = 0.02) {
  const double p = u.p();
  if (p < 2.0) throw Error(ErrorCode::unsupported_characteristic, "densities need p >= 2");
  detail::check_ladder(u, x, ladder);
  const int n = u.dim();
  const RieszKernel k(p);
  std::vector<double> s, m, v;
  for (double r : ladder) {
    s.push_back(spherical_mean(u, x, r, quad));
    m.push_back(spherical_max(u, x, r, quad));
    v.push_back(volume_mean(u, x, r, quad));
  }
  const auto qs = detail::ladder_quotients(ladder, s, k);
  const auto qm = detail::ladder_quotients(ladder, m, k);
  const auto qv = detail::ladder_quotients(ladder, v, k);

  DensityEstimate d;
  d.radii_used = {ladder.back(), ladder[ladder.size() - 2]};
  d.theta_M = std::max(0.0, qm.back());
  d.theta_V = std::max(0.0, qv.back());
  d.theta_S = p == 2.0 ? d.theta_M : std::max(0.0, qs.back());
  d.quotients = p == 2.0 ? qm : qs;
  double lowest = d.quotients.front();
  for (double q : d.quotients) {
    d.monotonicity_defect = std::max(d.monotonicity_defect, q - lowest);
    lowest = std::min(lowest, q);
  }
  const double scale = std::max(1.0, std::abs(d.quotients.front()));
  d.non_subharmonic = d.monotonicity_defect > tolerance * scale;
  d.consistency_V = std::abs(d.theta_S - (n - p + 2.0) / n * d.theta_V);
  d.consistency_M = std::abs(d.theta_S - d.theta_M);
  return d;
}

/// Default ladder at x: 4 dyadic rungs, top rung a quarter of the room.
inline DensityEstimate density(const ScalarField& u, const Point& x, const Quadrature& quad) {
  const double room = u.room(x);
  if (!(room > 0.0)) throw Error(ErrorCode::domain, "density point outside field domain");
  return density(u, x, dyadic_ladder(std::min(0.4, 0.25 * room), 4), quad);
}

struct HighDensityOptions {
  double tolerance = 0.02;
};

struct HighDensitySet {
  /// Accepted lattice points and their resolution-level quotients.
  std::vector<Point> points;
  std::vector<double> quotients;
  /// Component label of each point; components are ordered by first point.
  std::vector<int> component;
  /// Per component: the point nearest the component centroid.
  std::vector<Point> representatives;
  std::size_t count = 0;
  double step = 0.0;
  /// Cells screened at all levels.
  std::size_t cells_tested = 0;
};

namespace detail {
/// S-quotient on the rung pair (R, 2R).
inline double rung_quotient(const ScalarField& u, const Point& z, double r, const Quadrature& quad, const RieszKernel& k) {
  const double a = spherical_mean(u, z, r, quad);
  const double b = spherical_mean(u, z, 2.0 * r, quad);
  return (b - a) / (k(2.0 * r) - k(r));
}

struct PointHash {
  std::size_t operator()(const std::array<long long, kMaxDim>& a) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (long long v : a) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

/// Single-linkage components under distance <= radius.
inline std::vector<int> cluster(const std::vector<Point>& pts, int n, double radius) {
  std::vector<int> parent(pts.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  using Key = std::array<long long, kMaxDim>;
  std::unordered_map<Key, std::vector<int>, PointHash> buckets;
  auto key_of = [&](const Point& x) {
    Key key{};
    for (int d = 0; d < n; ++d) key[d] = static_cast<long long>(std::floor(x[d] / radius));
    return key;
  };
  for (std::size_t i = 0; i < pts.size(); ++i) buckets[key_of(pts[i])].push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Key base = key_of(pts[i]);
    int combos = 1;
    for (int d = 0; d < n; ++d) combos *= 3;
    for (int c = 0; c < combos; ++c) {
      Key key = base;
      int rem = c;
      for (int d = 0; d < n; ++d) {
        key[d] += rem % 3 - 1;
        rem /= 3;
      }
      auto it = buckets.find(key);
      if (it == buckets.end()) continue;
      for (int j : it->second)
        if (j > static_cast<int>(i) && distance(pts[i], pts[j]) <= radius * (1.0 + 1e-12)) parent[find(j)] = find(static_cast<int>(i));
    }
  }
  std::vector<int> label(pts.size(), -1);
  std::unordered_map<int, int> ids;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int root = find(static_cast<int>(i));
    auto [it, fresh] = ids.emplace(root, static_cast<int>(ids.size()));
    label[i] = it->second;
  }
  return label;
}
}  // namespace detail

/// Lattice approximation of E_c(u) inside the search ball.
///
/// Lattice points are centers of cubes of side `step`. A lattice point is kept
/// when its S-quotient on (rho, 2 rho), rho = step sqrt(n), is at least
/// c 2^{-(n-p)} (1 - tol): every point of density >= c has such a lattice point
/// within step sqrt(n)/2. Cubes are screened coarse to fine with the same test
/// at their own scale; a cube holding a point of density >= c always passes.
inline HighDensitySet high_density_set(const ScalarField& u, double c, const Ball& search, double step,
                                       const Quadrature& quad, HighDensityOptions opts = {}) {
  if (!(c > 0.0)) throw Error(ErrorCode::invalid_argument, "density threshold c must be positive");
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "grid step must be positive");
  const double p = u.p();
  if (p < 2.0) throw Error(ErrorCode::unsupported_characteristic, "densities need p >= 2");
  const int n = u.dim();
  const RieszKernel k(p);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double threshold = c * std::pow(2.0, -(n - p)) * (1.0 - opts.tolerance);

  HighDensitySet out;
  out.step = step;
  int levels = 0;
  while (step * std::pow(2.0, levels) < 2.0 * search.radius) ++levels;
  struct Cell {
    Point center;
    int level;  // side = step * 2^level
  };
  // top cell aligned so that leaf centers sit at search.center + step (k + 1/2)
  std::vector<Cell> stack{{search.center, levels}};
  if (levels == 0) {
    for (int d = 0; d < n; ++d) stack[0].center[d] += 0.5 * step;
  }
  std::vector<Point> accepted;
  std::vector<double> quotients;
  while (!stack.empty()) {
    const Cell cell = stack.back();
    stack.pop_back();
    const double side = step * std::ldexp(1.0, cell.level);
    const double half_diag = 0.5 * side * sqrt_n;
    if (distance(cell.center, search.center) > search.radius + half_diag) continue;
    if (cell.level == 0) {
      if (distance(cell.center, search.center) > search.radius) continue;
      const double rho = step * sqrt_n;
      if (2.0 * rho > u.room(cell.center)) continue;
      ++out.cells_tested;
      const double q = detail::rung_quotient(u, cell.center, rho, quad, k);
      if (q >= threshold) {
        accepted.push_back(cell.center);
        quotients.push_back(q);
      }
      continue;
    }
    const double radius = side * sqrt_n;
    if (2.0 * radius <= u.room(cell.center)) {
      ++out.cells_tested;
      if (detail::rung_quotient(u, cell.center, radius, quad, k) < threshold) continue;
    }
    const double quarter = 0.25 * side;
    for (int child = 0; child < (1 << n); ++child) {
      Cell next{cell.center, cell.level - 1};
      for (int d = 0; d < n; ++d) next.center[d] += ((child >> d) & 1) ? quarter : -quarter;
      stack.push_back(next);
    }
  }
  // deterministic order: lexicographic
  std::vector<std::size_t> order(accepted.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return accepted[a] < accepted[b]; });
  for (std::size_t i : order) {
    out.points.push_back(accepted[i]);
    out.quotients.push_back(quotients[i]);
  }
  out.component = detail::cluster(out.points, n, 2.0 * step);
  int components = 0;
  for (int l : out.component) components = std::max(components, l + 1);
  out.count = static_cast<std::size_t>(components);
  // representative: the component point closest to the component centroid
  std::vector<Point> centroid(out.count, Point{});
  std::vector<double> size(out.count, 0.0);
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    centroid[out.component[i]] = centroid[out.component[i]] + out.points[i];
    size[out.component[i]] += 1.0;
  }
  for (std::size_t l = 0; l < out.count; ++l) centroid[l] = (1.0 / size[l]) * centroid[l];
  out.representatives.assign(out.count, Point{});
  std::vector<double> best(out.count, kInf);
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    const int l = out.component[i];
    const double d = distance(out.points[i], centroid[l]);
    if (d < best[l]) {
      best[l] = d;
      out.representatives[l] = out.points[i];
    }
  }
  return out;
}

}  // namespace qstrat
