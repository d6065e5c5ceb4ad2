#pragma once

// Vitali coverings, tube volumes, the Minkowski bound check, nested stratum
// lattices and the tuple-indexed decomposition cover.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "qstrat/density.hpp"
#include "qstrat/homogeneity.hpp"

namespace qstrat {

struct VitaliCover {
  /// Indices into the input of the selected centers, in selection order.
  std::vector<std::size_t> selected;
  std::vector<Point> centers;
  double radius = 0.0;
  double cover_radius = 0.0;
  /// Both properties, checked over all pairs and all points.
  bool disjoint = false;
  bool covers = false;
};

/// Greedy Vitali selection: a point is kept when it is at distance >= 2r from every
/// kept point, so kept r-balls are disjoint and the 5r-balls (already 2r) cover.
inline VitaliCover vitali_cover(const std::vector<Point>& points, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::invalid_argument, "Vitali radius must be positive");
  VitaliCover v;
  v.radius = r;
  v.cover_radius = 5.0 * r;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool free = true;
    for (const auto& c : v.centers)
      if (distance(points[i], c) < 2.0 * r) {
        free = false;
        break;
      }
    if (free) {
      v.selected.push_back(i);
      v.centers.push_back(points[i]);
    }
  }
  v.disjoint = true;
  for (std::size_t a = 0; a < v.centers.size() && v.disjoint; ++a)
    for (std::size_t b = a + 1; b < v.centers.size(); ++b)
      if (distance(v.centers[a], v.centers[b]) < 2.0 * r) {
        v.disjoint = false;
        break;
      }
  v.covers = true;
  for (const auto& x : points) {
    bool hit = false;
    for (const auto& c : v.centers)
      if (distance(x, c) <= v.cover_radius) {
        hit = true;
        break;
      }
    if (!hit) {
      v.covers = false;
      break;
    }
  }
  return v;
}

/// Volume of the r-tube of a point set inside an ambient ball, counted on cells of
/// side h <= r/4: a cell counts when its center lies within r of some point.
inline double tube_volume(int n, const std::vector<Point>& points, double r, const Ball& ambient, double h) {
  if (n < 1 || n > kMaxDim) throw Error(ErrorCode::dimension, "tube dimension must be in [1,4]");
  if (!(r > 0.0 && h > 0.0)) throw Error(ErrorCode::invalid_argument, "tube radius and cell size must be positive");
  if (h > 0.25 * r * (1.0 + 1e-12)) throw Error(ErrorCode::resolution, "tube cell size exceeds r/4");
  if (points.empty()) return 0.0;
  const double span = (ambient.radius + r) / h + 2.0;
  if (span > 30000.0) throw Error(ErrorCode::memory_guard, "tube lattice too fine for the ambient ball");
  const double per_point = std::pow(2.0 * r / h + 2.0, n);
  if (per_point * points.size() > 2e9) throw Error(ErrorCode::memory_guard, "tube enumeration too large");

  std::unordered_set<std::uint64_t> cells;
  auto key = [](const std::array<int, kMaxDim>& c) {
    std::uint64_t k = 0;
    for (int d = 0; d < kMaxDim; ++d) k = (k << 16) | static_cast<std::uint16_t>(c[d] + 32768);
    return k;
  };
  for (const auto& x : points) {
    std::array<int, kMaxDim> lo{}, hi{}, c{};
    for (int d = 0; d < n; ++d) {
      lo[d] = static_cast<int>(std::floor((x[d] - r - ambient.center[d]) / h - 0.5));
      hi[d] = static_cast<int>(std::ceil((x[d] + r - ambient.center[d]) / h - 0.5));
      c[d] = lo[d];
    }
    for (;;) {
      Point y = ambient.center;
      for (int d = 0; d < n; ++d) y[d] += h * (c[d] + 0.5);
      if (distance(y, x) <= r && distance(y, ambient.center) <= ambient.radius) cells.insert(key(c));
      int d = 0;
      while (d < n && ++c[d] > hi[d]) c[d] = lo[d], ++d;
      if (d == n) break;
    }
  }
  return static_cast<double>(cells.size()) * std::pow(h, n);
}

/// Least-squares slope of log y against log x over entries with y > 0; NaN when fewer than two.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) continue;
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a, sy += b, sxx += a * a, sxy += a * b, ++m;
  }
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  const double den = m * sxx - sx * sx;
  if (std::abs(den) < 1e-300) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / den;
}

struct MinkowskiOptions {
  /// Lattice step of the E-set search.
  double step = 0.005;
  /// When positive the E-set is recomputed per radius with step = step_per_radius * r;
  /// the certified set is about 3 steps thick, so a fixed step flattens small-r slopes.
  double step_per_radius = 0.0;
  Ball search{Point{}, 1.0};
  /// Tube cells per radius: h = r / cells_per_radius, at least 4.
  double cells_per_radius = 4.0;
  /// bounded when no ratio exceeds slack times the ratio at the largest radius.
  double slack = 2.0;
  HighDensityOptions density;
};

struct MinkowskiReport {
  double eta = 0.0;
  double p = 0.0;
  /// E-set of the fixed step, or of the smallest radius when recomputed per radius.
  std::vector<Point> points;
  /// Certification gap of the E-set; empty here.
  std::vector<Point> indeterminate;
  std::vector<double> radii;
  std::vector<double> tube_volumes;
  std::vector<double> masses;
  std::vector<double> ratios;
  /// E-set sizes per radius when the set is recomputed per radius.
  std::vector<std::size_t> point_counts;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double max_ratio = 0.0;
  bool bounded = true;
  std::size_t components = 0;
};

/// Tube volumes of the E_eta set against eta^{-1} (mass of Delta u on B_{1+r}) r^p.
inline MinkowskiReport minkowski_bound_check(const ScalarField& u, double eta, std::vector<double> radii,
                                             const Quadrature& quad, const MinkowskiOptions& opts = {}) {
  if (!(eta > 0.0)) throw Error(ErrorCode::invalid_argument, "eta must be positive");
  if (radii.empty()) throw Error(ErrorCode::invalid_argument, "radius grid is empty");
  if (!(opts.cells_per_radius >= 4.0)) throw Error(ErrorCode::resolution, "tube cells per radius must be >= 4");
  std::sort(radii.begin(), radii.end());
  for (double r : radii)
    if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::range, "tube radii must lie in (0,1)");
  MinkowskiReport rep;
  rep.eta = eta;
  rep.p = u.p();
  const bool per_radius = opts.step_per_radius > 0.0;
  if (!per_radius) {
    const auto e = high_density_set(u, eta, opts.search, opts.step, quad, opts.density);
    rep.points = e.points;
    rep.components = e.count;
  }
  const int n = u.dim();
  for (double r : radii) {
    const Ball ambient{opts.search.center, opts.search.radius + r};
    std::vector<Point> local;
    if (per_radius) {
      auto e = high_density_set(u, eta, opts.search, opts.step_per_radius * r, quad, opts.density);
      rep.point_counts.push_back(e.points.size());
      if (rep.point_counts.size() == 1) rep.components = e.count;
      local = std::move(e.points);
      if (rep.point_counts.size() == 1) rep.points = local;
    }
    const double tube = tube_volume(n, per_radius ? local : rep.points, r, ambient, r / opts.cells_per_radius);
    const double mass = laplacian_mass(u, opts.search.center, opts.search.radius + r, quad).value;
    const double bound = mass * std::pow(r, rep.p) / eta;
    rep.radii.push_back(r);
    rep.tube_volumes.push_back(tube);
    rep.masses.push_back(mass);
    rep.ratios.push_back(tube == 0.0 ? 0.0 : (bound > 0.0 ? tube / bound : kInf));
  }
  rep.slope = loglog_slope(rep.radii, rep.tube_volumes);
  rep.max_ratio = *std::max_element(rep.ratios.begin(), rep.ratios.end());
  rep.bounded = std::isfinite(rep.max_ratio) && rep.max_ratio <= opts.slack * rep.ratios.back() + 1e-300;
  return rep;
}

namespace detail {
/// Exact key of a lattice point whose coordinates are dyadic multiples of the step.
inline std::array<std::int64_t, kMaxDim> point_key(const Point& x) {
  std::array<std::int64_t, kMaxDim> k{};
  for (int d = 0; d < kMaxDim; ++d) k[d] = std::llround(x[d] * 1099511627776.0);  // 2^40
  return k;
}

/// Caches per (point, scale) verdicts of the certified defect tests.
class DefectCache {
 public:
  DefectCache(const ScalarField& u, const Quadrature& quad, HomogeneityOptions opts) : u_(u), quad_(quad), opts_(opts) {}

  /// lower bound of the (k+1)-defect at scale s is >= eta.
  bool lower_at_least(const Point& x, double s, int k, double eta) {
    const auto key = std::make_tuple(point_key(x), std::llround(std::log2(s) * 1e6), k, eta);
    if (auto it = lower_.find(key); it != lower_.end()) return it->second;
    bool ok = false;
    if (s < u_.room(x)) {
      HomogeneityOptions o = opts_;
      o.lower_target = eta;
      FlowContext ctx = make_context(u_, x, s, quad_, o);
      HomogeneityReport rep;
      lower_bound(ctx, k + 1, o, rep);
      ok = rep.lower >= eta;
    }
    ++evaluations_;
    lower_.emplace(key, ok);
    return ok;
  }

  /// 1 when the 0-defect at scale s is certified above eps or undecided, 0 when upper <= eps.
  int high(const Point& x, double s, double eps) {
    const auto key = std::make_tuple(point_key(x), std::llround(std::log2(s) * 1e6), eps);
    if (auto it = high_.find(key); it != high_.end()) return it->second;
    int h = 1;
    if (s < u_.room(x)) {
      HomogeneityOptions o = opts_;
      o.lower_target = eps;
      FlowContext ctx = make_context(u_, x, s, quad_, o);
      HomogeneityReport rep;
      lower_bound(ctx, 0, o, rep);
      if (!(rep.lower > eps) && o.budget > 0) {
        upper_bound(ctx, 0, o, rep, eps);
        if (rep.upper <= eps) h = 0;
      }
    }
    ++evaluations_;
    high_.emplace(key, h);
    return h;
  }

  std::size_t evaluations() const { return evaluations_; }

 private:
  using Key = std::array<std::int64_t, kMaxDim>;
  const ScalarField& u_;
  const Quadrature& quad_;
  HomogeneityOptions opts_;
  std::map<std::tuple<Key, long long, int, double>, bool> lower_;
  std::map<std::tuple<Key, long long, double>, int> high_;
  std::size_t evaluations_ = 0;
};
}  // namespace detail

struct StratumLevel {
  double r = 0.0;
  double step = 0.0;
  /// Lattice points with certified lower bound >= eta at every scale r 2^i < 1.
  std::vector<Point> members;
  std::size_t candidates = 0;
  double tube_volume = 0.0;
};

struct StratumScaling {
  int k = 0;
  double eta = 0.0;
  Ball search;
  std::vector<StratumLevel> levels;
  /// log-log slope of the member tube volume at radius r against r.
  double slope = std::numeric_limits<double>::quiet_NaN();
  std::size_t evaluations = 0;
};

struct StratumScalingOptions {
  /// Lattice step as a multiple of the level radius.
  double step_factor = 2.0;
  double cells_per_radius = 4.0;
  bool tube = true;
};

namespace detail {
inline bool is_power_of_two_ratio(double a, double b) {
  const double l = std::log2(a / b);
  return l > 0.5 && std::abs(l - std::round(l)) < 1e-9;
}

/// Members of S^k_{eta,r} on the lattice center + step Z^n, for decreasing dyadic r.
/// S_{eta,r} shrinks with r for dyadic scale sets, so level i only visits lattice
/// points within one coarse cell diagonal of a level i-1 member.
inline std::vector<StratumLevel> nested_members(const ScalarField& u, double eta, int k, const Ball& search,
                                                const std::vector<double>& radii,
                                                const std::vector<double>& step_factors, DefectCache& cache) {
  const int n = u.dim();
  std::vector<StratumLevel> out;
  auto member = [&](const Point& x, double r) {
    if (k >= n) return true;
    for (double s : stratum_scales(r))
      if (!cache.lower_at_least(x, s, k, eta)) return false;
    return true;
  };
  for (std::size_t i = 0; i < radii.size(); ++i) {
    StratumLevel lv;
    lv.r = radii[i];
    lv.step = step_factors[i] * radii[i];
    std::vector<Point> cand;
    if (i == 0) {
      cand = ball_lattice(n, search, lv.step);
    } else {
      const auto& prev = out.back();
      const double reach = prev.step * std::sqrt(static_cast<double>(n));
      std::set<std::array<std::int64_t, kMaxDim>> seen;
      const int m = static_cast<int>(std::ceil(reach / lv.step));
      for (const auto& c : prev.members) {
        std::array<int, kMaxDim> base{}, idx{};
        for (int d = 0; d < n; ++d) {
          base[d] = static_cast<int>(std::llround((c[d] - search.center[d]) / lv.step));
          idx[d] = -m;
        }
        for (;;) {
          Point y = search.center;
          for (int d = 0; d < n; ++d) y[d] += lv.step * (base[d] + idx[d]);
          if (distance(y, c) <= reach && distance(y, search.center) <= search.radius * (1.0 + 1e-12) &&
              seen.insert(point_key(y)).second)
            cand.push_back(y);
          int d = 0;
          while (d < n && ++idx[d] > m) idx[d++] = -m;
          if (d == n) break;
        }
      }
      std::sort(cand.begin(), cand.end());
    }
    lv.candidates = cand.size();
    for (const auto& x : cand)
      if (member(x, lv.r)) lv.members.push_back(x);
    out.push_back(std::move(lv));
  }
  return out;
}

inline void require_dyadic_radii(const std::vector<double>& radii) {
  if (radii.empty()) throw Error(ErrorCode::invalid_argument, "radius ladder is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0 && radii[i] < 1.0)) throw Error(ErrorCode::scale, "stratum radii must lie in (0,1)");
    if (i > 0 && !is_power_of_two_ratio(radii[i - 1], radii[i]))
      throw Error(ErrorCode::scale, "stratum radii must decrease by powers of two");
  }
}
}  // namespace detail

/// Tube volumes of the certified members of S^k_{eta,r}, one level per radius.
inline StratumScaling stratum_scaling(const ScalarField& u, double eta, int k, const Ball& search,
                                      std::vector<double> radii, const Quadrature& quad, HomogeneityOptions opts = {},
                                      const StratumScalingOptions& sopts = {}) {
  if (!(eta > 0.0)) throw Error(ErrorCode::invalid_argument, "eta must be positive");
  if (k < 0) throw Error(ErrorCode::dimension, "stratum index k must be nonnegative");
  std::sort(radii.rbegin(), radii.rend());
  detail::require_dyadic_radii(radii);
  detail::DefectCache cache(u, quad, opts);
  StratumScaling out;
  out.k = k;
  out.eta = eta;
  out.search = search;
  out.levels = detail::nested_members(u, eta, k, search, radii, std::vector<double>(radii.size(), sopts.step_factor), cache);
  std::vector<double> rs, vs;
  for (auto& lv : out.levels) {
    if (sopts.tube)
      lv.tube_volume = tube_volume(u.dim(), lv.members, lv.r, Ball{search.center, search.radius + lv.r},
                                   lv.r / sopts.cells_per_radius);
    rs.push_back(lv.r);
    vs.push_back(lv.tube_volume);
  }
  out.slope = loglog_slope(rs, vs);
  out.evaluations = cache.evaluations();
  return out;
}

/// Greedy farthest-point net: every point lies within rho of a selected point.
inline std::vector<Point> farthest_point_cover(const std::vector<Point>& pts, double rho) {
  std::vector<Point> centers;
  if (pts.empty()) return centers;
  std::vector<double> gap(pts.size(), kInf);
  std::size_t next = 0;
  for (;;) {
    centers.push_back(pts[next]);
    double far = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      gap[i] = std::min(gap[i], distance(pts[i], centers.back()));
      if (gap[i] > far) {
        far = gap[i];
        next = i;
      }
    }
    if (far <= rho) break;
  }
  return centers;
}

struct CoverBall {
  int scale = 0;
  Point center;
  std::string tuple;
};

struct DecompositionCover {
  int k = 0;
  double eta = 0.0;
  double gamma = 0.0;
  double epsilon = 0.0;
  /// counts[j-1]: balls of radius gamma^j over all tuples.
  std::vector<std::size_t> counts;
  /// Per scale: tuple -> balls.
  std::vector<std::map<std::string, std::size_t>> tuple_counts;
  /// Per scale: number of H entries -> nonempty tuples with that weight.
  std::vector<std::map<int, std::size_t>> weight_histogram;
  std::vector<std::size_t> stratum_points;
  std::vector<CoverBall> trace;
  /// log-slope of counts against gamma^{-j}.
  double slope = std::numeric_limits<double>::quiet_NaN();
  std::size_t evaluations = 0;
};

struct DecompositionOptions {
  Ball search{Point{}, 1.0};
  double step_factor = 1.0;
  /// Budget of the upper bounds behind the H/L split.
  int budget = 8;
};

/// Inductive refinement: at scale gamma^j the certified stratum points inside the
/// balls of the tuple-T^{j-1} cover are split by their tuple T^j and each part is
/// covered by gamma^j-balls centered in it (H entry: 0-defect at scale gamma^{i-1}
/// above epsilon, or undecided).
inline DecompositionCover decomposition_cover(const ScalarField& u, double eta, double gamma, int jmax, int k,
                                              double epsilon, const Quadrature& quad, HomogeneityOptions opts = {},
                                              const DecompositionOptions& dopts = {}) {
  if (!(gamma > 0.0 && gamma <= 0.25)) throw Error(ErrorCode::scale, "gamma must lie in (0, 1/4]");
  const double lg = -std::log2(gamma);
  if (std::abs(lg - std::round(lg)) > 1e-9) throw Error(ErrorCode::scale, "gamma must be a power of 1/2");
  if (jmax < 1 || jmax > 6) throw Error(ErrorCode::range, "j-max must lie in [1,6]");
  if (!(eta > 0.0 && epsilon > 0.0)) throw Error(ErrorCode::invalid_argument, "eta and epsilon must be positive");
  if (k < 0) throw Error(ErrorCode::dimension, "stratum index k must be nonnegative");
  opts.budget = dopts.budget;
  const int m = static_cast<int>(std::round(lg));
  std::vector<double> radii;
  std::vector<double> factors;
  // levels between the gamma^j only prune candidates and run on a doubled step
  for (int e = m; e <= m * jmax; ++e) {
    radii.push_back(std::ldexp(1.0, -e));
    factors.push_back(e % m == 0 ? dopts.step_factor : 2.0 * dopts.step_factor);
  }
  detail::DefectCache cache(u, quad, opts);
  const auto levels = detail::nested_members(u, eta, k, dopts.search, radii, factors, cache);

  DecompositionCover out;
  out.k = k;
  out.eta = eta;
  out.gamma = gamma;
  out.epsilon = epsilon;
  struct Parent {
    Point center;
    std::string tuple;
  };
  std::vector<Parent> parents{{dopts.search.center, ""}};
  double parent_radius = dopts.search.radius;
  double parent_slack = 0.0;
  for (int j = 1; j <= jmax; ++j) {
    const double s = std::pow(gamma, j);
    const auto& members = levels[static_cast<std::size_t>(m * j - m)].members;
    out.stratum_points.push_back(members.size());
    auto tuple_of = [&](const Point& x) {
      std::string t;
      for (int i = 1; i <= j; ++i) t.push_back(cache.high(x, std::pow(gamma, i - 1), epsilon) ? '1' : '0');
      return t;
    };
    // active set: union of the tuple-T^{j-1} balls; each tuple T^j is covered once over it
    std::map<std::string, std::vector<Point>> groups;
    for (const auto& x : members) {
      std::string t;
      for (const auto& par : parents) {
        if (distance(x, par.center) > parent_radius + parent_slack) continue;
        if (t.empty()) t = tuple_of(x);
        if (t.compare(0, par.tuple.size(), par.tuple) == 0) {
          groups[t].push_back(x);
          break;
        }
      }
    }
    std::vector<Parent> next;
    std::map<std::string, std::size_t> per_tuple;
    for (const auto& [t, pts] : groups)
      for (const auto& c : farthest_point_cover(pts, s)) {
        next.push_back({c, t});
        ++per_tuple[t];
        out.trace.push_back({j, c, t});
      }
    out.counts.push_back(next.size());
    std::map<int, std::size_t> hist;
    for (const auto& [t, cnt] : per_tuple) ++hist[static_cast<int>(std::count(t.begin(), t.end(), '1'))];
    out.tuple_counts.push_back(std::move(per_tuple));
    out.weight_histogram.push_back(std::move(hist));
    parents = std::move(next);
    parent_radius = s;
    // lattice points stand for cells: a point of the set lies within half a cell diagonal of one
    parent_slack = 0.5 * dopts.step_factor * s * std::sqrt(static_cast<double>(u.dim()));
  }
  std::vector<double> inv, cnt;
  for (int j = 1; j <= jmax; ++j) {
    inv.push_back(std::pow(gamma, -j));
    cnt.push_back(static_cast<double>(out.counts[j - 1]));
  }
  out.slope = loglog_slope(inv, cnt);
  out.evaluations = cache.evaluations();
  return out;
}

}  // namespace qstrat
