#pragma once

// Quantitative homogeneity: a certified lower bound and a model-based upper
// bound on the L1(B_1) distance from u_{x,r} to k-homogeneous functions,
// quantitative strata S^k_{eta,r}, and the cone-splitting check.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "qstrat/flow.hpp"
#include "qstrat/means.hpp"

namespace qstrat {

namespace detail {
/// Minimizer of sum w_i |v_i - m| over m; non-finite entries are ignored.
inline double weighted_median(std::vector<std::pair<double, double>> vw) {
  vw.erase(std::remove_if(vw.begin(), vw.end(),
                          [](const auto& e) { return !std::isfinite(e.first) || !(e.second > 0.0); }),
           vw.end());
  if (vw.empty()) return 0.0;
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (const auto& e : vw) total += e.second;
  double acc = 0.0;
  for (const auto& e : vw) {
    acc += e.second;
    if (acc >= 0.5 * total) return e.first;
  }
  return vw.back().first;
}

inline double finite_abs(double v) { return std::isfinite(v) ? std::abs(v) : 0.0; }
}  // namespace detail

/// A k-homogeneous function at 0: zero, a kernel-distance model, or a
/// homogenized cone |y_perp|^{2-p} G(y_perp/|y_perp|) (p > 2) or
/// theta log|y_perp| + G(y_perp/|y_perp|) (p = 2), with y_perp the part of y
/// orthogonal to the invariance plane.
struct HomogeneousModel {
  enum class Kind { none, zero, kernel, homogenized };
  Kind kind = Kind::none;
  double p = 2.0;
  int k = 0;
  PlaneFrame plane;
  /// The singular plane of kernel models (contains `plane`).
  PlaneFrame kernel_plane;
  double theta = 0.0;
  /// Profile on unit vectors of the orthogonal complement of `plane`.
  std::shared_ptr<const std::function<double(const Point&)>> profile;

  double operator()(const Point& y) const {
    switch (kind) {
      case Kind::none:
      case Kind::zero: return 0.0;
      case Kind::kernel: {
        const double d = kernel_plane.distance(y);
        if (d == 0.0) return theta > 0.0 ? kNegInf : 0.0;
        return theta * RieszKernel(p)(d);
      }
      case Kind::homogenized: {
        const Point perp = plane.project_perp(y);
        const double d = norm(perp);
        if (d == 0.0) return kNegInf;
        const double g = (*profile)((1.0 / d) * perp);
        if (p == 2.0) return theta * std::log(d) + g;
        return theta * std::pow(d, 2.0 - p) * g;
      }
    }
    return 0.0;
  }

  ScalarField field(int n, double radius) const {
    const HomogeneousModel self = *this;
    return ScalarField(n, Ball{Point{}, radius}, p, [self](const Point& y) { return self(y); }, to_string(kind));
  }

  static const char* to_string(Kind k) {
    switch (k) {
      case Kind::none: return "none";
      case Kind::zero: return "zero";
      case Kind::kernel: return "kernel";
      case Kind::homogenized: return "homogenized";
    }
    return "none";
  }
};

struct HomogeneityOptions {
  /// Number of random planes in each Grassmannian search; 0 disables the upper bound.
  int budget = 256;
  std::uint64_t seed = 1;
  /// Translation terms of the lower bound (k >= 1).
  bool translation_bound = true;
  /// Full sphere rule for defect integrals; the coarse one otherwise.
  bool precise = true;
  int defect_shells = 16;
  int search_shells = 6;
  bool compute_upper = true;
  /// The lower-bound chain stops once this value is certified.
  double lower_target = kInf;
};

struct HomogeneityReport {
  double lower = 0.0;
  double upper = kInf;
  PlaneFrame plane;
  HomogeneousModel model;
  /// Triangle constant of the scale comparison.
  double c0 = 0.0;
  /// Scale defect D(0) and the translation terms T_1, T_2, ... that were evaluated.
  double scale_defect = 0.0;
  std::vector<double> translation_defects;
  std::size_t planes_searched = 0;
  /// Fitted models scoring below the lower bound (quadrature or direction-sampling slack);
  /// the reported upper bound is clamped to the lower one.
  std::size_t below_lower = 0;
};

/// 1 / (1 + 2^{n-p+2}).
inline double triangle_constant(int n, double p) { return 1.0 / (1.0 + std::pow(2.0, n - p + 2.0)); }

namespace detail {

/// Scaling data of one flowed field w = u_{x,r}.
struct FlowContext {
  ScalarField w;
  int n = 0;
  double p = 2.0;
  /// A homogeneous h satisfies h(y/2) = c + h(y) / lambda.
  double lambda = 1.0;
  bool free_constant = true;
  const BallRule* defect_rule_ = nullptr;
  const BallRule* search_rule_ = nullptr;
  const BallRule& defect_rule() const { return *defect_rule_; }
  const BallRule& search_rule() const { return *search_rule_; }
  std::vector<double> defect_values;
  std::vector<double> search_values;
  std::uint64_t seed = 1;
};

inline FlowContext make_context(const ScalarField& u, const Point& x, double r, const Quadrature& quad,
                                const HomogeneityOptions& opts) {
  FlowContext c;
  c.w = p_flow(u, x, r, quad);
  c.n = u.dim();
  c.p = u.p();
  c.lambda = std::pow(2.0, 2.0 - c.p);
  c.free_constant = !(c.p > 2.0);
  c.defect_rule_ = &quad.ball_rule(c.n, !opts.precise, opts.defect_shells);
  c.search_rule_ = &quad.ball_rule(c.n, true, opts.search_shells);
  c.defect_values.reserve(c.defect_rule().size());
  for (const auto& y : c.defect_rule().nodes) c.defect_values.push_back(c.w.sample(y));
  c.seed = opts.seed;
  return c;
}

inline const std::vector<double>& search_values(FlowContext& c) {
  if (c.search_values.empty())
    for (const auto& y : c.search_rule().nodes) c.search_values.push_back(c.w.sample(y));
  return c.search_values;
}

/// D(a) = min_c || lambda (w(a + (.-a)/2) - c) - w ||_{L1(B_rho(a))} (c = 0 when p > 2).
inline double scale_defect(const FlowContext& c, const Point& a, double rho, const BallRule& rule,
                           const std::vector<double>* cached = nullptr) {
  const double vol = std::pow(rho, c.n);
  std::vector<std::pair<double, double>> vw;
  vw.reserve(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Point y = a + rho * rule.nodes[i];
    const double wy = cached ? (*cached)[i] : c.w.sample(y);
    const double wh = c.w.sample(a + (0.5 * rho) * rule.nodes[i]);
    vw.emplace_back(c.lambda * wh - wy, vol * rule.weights[i]);
  }
  const double shift = c.free_constant ? weighted_median(vw) : 0.0;
  double acc = 0.0;
  for (const auto& [v, wt] : vw) acc += wt * finite_abs(v - shift);
  return acc;
}

inline std::vector<Point> scan_directions(const PlaneFrame& complement, std::uint64_t seed) {
  const int d = complement.dim();
  static const int targets[] = {0, 2, 12, 32, 64};
  const SphereRule s = make_sphere_rule(d, targets[d], seed);
  std::vector<Point> out;
  for (const auto& t : s.nodes) out.push_back(complement.embed(Point{}, t));
  return out;
}

/// Lower bound c0 max(D(0), T_1, ..., T_k), where T_j is the smallest over unit
/// e orthogonal to P_{j-1} of max(D(e/4), D(-e/4)) on balls of radius 1/2.
/// Every k-homogeneous h is 0-homogeneous along its plane V and V meets the
/// complement of any (j-1)-plane when j <= k, so each term bounds the defect.
/// P_j extends P_{j-1} by the minimizing direction; the chain does not depend
/// on k, so the bound is monotone in k.
inline void lower_bound(FlowContext& c, int k, const HomogeneityOptions& opts, HomogeneityReport& rep) {
  rep.c0 = triangle_constant(c.n, c.p);
  rep.scale_defect = scale_defect(c, Point{}, 1.0, c.defect_rule(), &c.defect_values);
  rep.lower = rep.c0 * rep.scale_defect;
  if (!opts.translation_bound) return;
  std::vector<Point> chain;
  for (int j = 1; j <= k && rep.lower < opts.lower_target; ++j) {
    const PlaneFrame p = PlaneFrame::from_vectors(c.n, chain);
    const auto dirs = scan_directions(p.complement(), c.seed + 101u * j);
    auto score = [&](const Point& e, double cap) {
      const double a = scale_defect(c, 0.25 * e, 0.5, c.search_rule());
      if (a >= cap) return a;
      return std::max(a, scale_defect(c, -0.25 * e, 0.5, c.search_rule()));
    };
    double best = kInf;
    Point arg{};
    // the last term is a minimum: once below the target the bound stays below it
    const bool last = j == k && std::isfinite(opts.lower_target);
    bool short_circuit = false;
    for (const auto& e : dirs) {
      const double sc = score(e, best);
      if (sc < best) {
        best = sc;
        arg = e;
      }
      if (last && rep.c0 * best < opts.lower_target) {
        short_circuit = true;
        break;
      }
    }
    if (short_circuit) return;
    // compass refinement of the minimizing direction within the complement
    const PlaneFrame comp = p.complement();
    // refinement only lowers the term, so it is skipped once the term cannot reach the target
    for (double step = 0.25; step > 1e-4 && comp.dim() > 1 &&
                            (std::isinf(opts.lower_target) || rep.c0 * best >= opts.lower_target);
         step *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (int i = 0; i < comp.dim(); ++i)
          for (double sgn : {1.0, -1.0}) {
            Point e = arg + (sgn * step) * comp.vector(i);
            e = comp.project(e);
            e = (1.0 / norm(e)) * e;
            const double sc = score(e, best);
            if (sc < best) {
              best = sc;
              arg = e;
              improved = true;
            }
          }
      }
    }
    rep.translation_defects.push_back(best);
    rep.lower = std::max(rep.lower, rep.c0 * best);
    chain.push_back(arg);
  }
}

/// Best theta >= 0 and score of w ~ theta * base + offset on a rule.
struct Fit {
  double theta = 0.0;
  double score = kInf;
};

inline Fit fit_scale(const BallRule& rule, const std::vector<double>& w, const std::vector<double>& base,
                     const std::vector<double>& offset) {
  std::vector<std::pair<double, double>> vw;
  vw.reserve(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i)
    if (std::isfinite(base[i]) && base[i] != 0.0)
      vw.emplace_back((w[i] - offset[i]) / base[i], rule.weights[i] * std::abs(base[i]));
  Fit f;
  f.theta = std::max(0.0, weighted_median(vw));
  f.score = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double model = std::isfinite(base[i]) ? f.theta * base[i] + offset[i] : offset[i];
    f.score += rule.weights[i] * finite_abs(w[i] - model);
  }
  return f;
}

inline Fit fit_kernel(const BallRule& rule, const std::vector<double>& w, const PlaneFrame& plane, double p) {
  const RieszKernel kernel(p);
  std::vector<double> base(rule.size()), zero(rule.size(), 0.0);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double d = plane.distance(rule.nodes[i]);
    base[i] = d > 0.0 ? kernel(d) : kNegInf;
  }
  return fit_scale(rule, w, base, zero);
}

/// Rotate basis vector i of the plane toward complement vector j by angle a.
inline PlaneFrame rotate_plane(const PlaneFrame& plane, int i, const Point& toward, double a) {
  std::vector<Point> vs;
  for (int m = 0; m < plane.dim(); ++m)
    vs.push_back(m == i ? std::cos(a) * plane.vector(m) + std::sin(a) * toward : plane.vector(m));
  return PlaneFrame::from_vectors(plane.ambient_dim(), vs);
}

/// Random search over G(m,n) followed by compass refinement; lower score is better.
template <class Score>
PlaneFrame search_planes(int n, int m, int budget, std::uint64_t seed, Score&& score, std::size_t& evaluated) {
  if (m == 0) return PlaneFrame::zero(n);
  if (m == n) {
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    return PlaneFrame::coordinate(n, all);
  }
  std::mt19937_64 rng(seed);
  PlaneFrame best;
  double best_score = kInf;
  for (int b = 0; b < budget; ++b) {
    PlaneFrame cand = random_plane(n, m, rng);
    const double s = score(cand);
    ++evaluated;
    if (s < best_score) {
      best_score = s;
      best = cand;
    }
  }
  for (double a = 0.25; a > 1e-5; a *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      const PlaneFrame comp = best.complement();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < comp.dim(); ++j)
          for (double sgn : {1.0, -1.0}) {
            PlaneFrame cand = rotate_plane(best, i, comp.vector(j), sgn * a);
            const double s = score(cand);
            ++evaluated;
            if (s < best_score * (1.0 - 1e-12)) {
              best_score = s;
              best = cand;
              improved = true;
            }
          }
    }
  }
  return best;
}

inline PlaneFrame first_vectors(const PlaneFrame& plane, int k) {
  std::vector<Point> vs;
  for (int i = 0; i < k; ++i) vs.push_back(plane.vector(i));
  return PlaneFrame::from_vectors(plane.ambient_dim(), vs);
}

/// Translation defect of w along the plane's basis on B_{1/2}.
inline double translation_score(const FlowContext& c, const PlaneFrame& plane) {
  double acc = 0.0;
  for (int i = 0; i < plane.dim(); ++i) {
    const Point v = 0.25 * plane.vector(i);
    for (std::size_t j = 0; j < c.search_rule().size(); ++j) {
      const Point y = 0.5 * c.search_rule().nodes[j];
      acc += c.search_rule().weights[j] * finite_abs(c.w.sample(y + v) - c.w.sample(y));
    }
  }
  return acc;
}

/// Profile of the homogenized model along the plane V, read at radius 1/2:
/// mean over sigma in {1, 1/2, 1/4} and shifts v in {0, +-V_i/4} of the flows.
inline std::function<double(const Point&)> homogenized_profile(const FlowContext& c, const PlaneFrame& plane) {
  std::vector<Point> shifts{Point{}};
  for (int i = 0; i < plane.dim(); ++i) {
    shifts.push_back(0.25 * plane.vector(i));
    shifts.push_back(-0.25 * plane.vector(i));
  }
  const ScalarField w = c.w;
  const double p = c.p;
  return [w, p, shifts](const Point& omega) {
    double acc = 0.0;
    int count = 0;
    for (double sigma : {1.0, 0.5, 0.25}) {
      const double factor = p > 2.0 ? std::pow(sigma, p - 2.0) : 1.0;
      for (const auto& v : shifts) {
        acc += factor * w.sample(sigma * (0.5 * omega + v));
        ++count;
      }
    }
    const double mean = acc / count;
    return p > 2.0 ? std::pow(2.0, 2.0 - p) * mean : mean;
  };
}

inline void upper_bound(FlowContext& c, int k, const HomogeneityOptions& opts, HomogeneityReport& rep,
                        double zero_shortcut = -1.0) {
  const int n = c.n;
  const double p = c.p;
  const BallRule& rule = c.defect_rule();
  const auto& w = c.defect_values;

  struct Candidate {
    double score;
    HomogeneousModel model;
  };
  std::vector<Candidate> cands;

  HomogeneousModel zero;
  zero.kind = HomogeneousModel::Kind::zero;
  zero.p = p;
  zero.k = k;
  double zero_score = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) zero_score += rule.weights[i] * finite_abs(w[i]);
  cands.push_back({zero_score, zero});
  if (zero_score < zero_shortcut) {
    rep.upper = std::max(zero_score, rep.lower);
    rep.model = zero;
    rep.model.plane = PlaneFrame::zero(n);
    rep.plane = rep.model.plane;
    return;
  }

  // kernel-distance family, plane dimension m in [k, n - p]
  PlaneFrame best_kernel_plane;
  bool have_kernel_plane = false;
  double best_kernel_score = kInf;
  const auto& sv = search_values(c);
  for (int m = k; m <= n && m <= n - p + 1e-12; ++m) {
    const PlaneFrame plane = search_planes(
        n, m, opts.budget, c.seed + 7919u * static_cast<std::uint64_t>(m + 1),
        [&](const PlaneFrame& v) { return fit_kernel(c.search_rule(), sv, v, p).score; }, rep.planes_searched);
    const Fit f = fit_kernel(rule, w, plane, p);
    HomogeneousModel model;
    model.kind = HomogeneousModel::Kind::kernel;
    model.p = p;
    model.k = k;
    model.kernel_plane = plane;
    model.plane = first_vectors(plane, k);
    model.theta = f.theta;
    cands.push_back({f.score, model});
    if (f.score < best_kernel_score) {
      best_kernel_score = f.score;
      best_kernel_plane = plane;
      have_kernel_plane = true;
    }
  }

  // invariance plane for the homogenized model and the report
  PlaneFrame vk = PlaneFrame::zero(n);
  if (k > 0) {
    if (have_kernel_plane)
      vk = first_vectors(best_kernel_plane, k);
    else
      vk = search_planes(n, k, std::max(8, opts.budget / 4), c.seed + 31u * static_cast<std::uint64_t>(k),
                         [&](const PlaneFrame& v) { return translation_score(c, v); }, rep.planes_searched);
  }

  if (p >= 2.0 && k < n) {
    auto raw = homogenized_profile(c, vk);
    std::function<double(const Point&)> g = raw;
    if (p == 2.0) {
      // the p = 2 flow fixes h only when sup over the sphere of the profile is 0
      const PlaneFrame comp = vk.complement();
      const SphereRule dirs = make_sphere_rule(comp.dim(), 256, c.seed + 3u);
      double sup = kNegInf;
      for (const auto& t : dirs.nodes) sup = std::max(sup, raw(comp.embed(Point{}, t)));
      g = [raw, sup](const Point& omega) { return raw(omega) - sup; };
    }
    std::vector<double> base(rule.size()), offset(rule.size(), 0.0);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const Point perp = vk.project_perp(rule.nodes[i]);
      const double d = norm(perp);
      if (d == 0.0) {
        base[i] = kNegInf;
        continue;
      }
      const double gv = g((1.0 / d) * perp);
      if (p == 2.0) {
        base[i] = std::log(d);
        offset[i] = gv;
      } else {
        base[i] = std::pow(d, 2.0 - p) * gv;
      }
    }
    const Fit f = fit_scale(rule, w, base, offset);
    HomogeneousModel model;
    model.kind = HomogeneousModel::Kind::homogenized;
    model.p = p;
    model.k = k;
    model.plane = vk;
    model.theta = f.theta;
    model.profile = std::make_shared<const std::function<double(const Point&)>>(g);
    cands.push_back({f.score, model});
  }

  const double floor = rep.lower * (1.0 - 1e-9) - 1e-12;
  const Candidate* best = nullptr;
  for (const auto& cand : cands) {
    if (cand.score < floor) ++rep.below_lower;
    if (!best || cand.score < best->score) best = &cand;
  }
  rep.upper = std::max(best->score, rep.lower);
  rep.model = best->model;
  if (rep.model.kind == HomogeneousModel::Kind::zero) rep.model.plane = vk;
  rep.plane = rep.model.plane;
}

}  // namespace detail

/// Lower and upper bounds on inf_h ||u_{x,r} - h||_{L1(B_1)} over k-homogeneous h.
inline HomogeneityReport homogeneity_defect(const ScalarField& u, const Point& x, double r, int k, const Quadrature& quad,
                                            HomogeneityOptions opts = {}) {
  if (k < 0 || k > u.dim()) throw Error(ErrorCode::dimension, "homogeneity dimension k must be in [0,n]");
  if (opts.budget < 0) throw Error(ErrorCode::invalid_argument, "search budget must be nonnegative");
  detail::FlowContext ctx = detail::make_context(u, x, r, quad, opts);
  HomogeneityReport rep;
  detail::lower_bound(ctx, k, opts, rep);
  rep.plane = PlaneFrame::zero(u.dim());
  if (opts.budget == 0 || !opts.compute_upper) {
    rep.upper = kInf;
    return rep;
  }
  detail::upper_bound(ctx, k, opts, rep);
  return rep;
}

struct StratumReport {
  int k = 0;
  double eta = 0.0;
  double r = 0.0;
  double step = 0.0;
  std::vector<double> scales;
  /// Certified: lower >= eta for (k+1)-homogeneity at every scale.
  std::vector<Point> stratum;
  /// Certified: upper < eta at some scale.
  std::vector<Point> excluded;
  std::vector<Point> indeterminate;
  std::size_t lattice_points = 0;
};

/// Lattice points of the ball: center + step * Z^n.
inline std::vector<Point> ball_lattice(int n, const Ball& ball, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "grid step must be positive");
  const int m = static_cast<int>(std::floor(ball.radius / step + 1e-9));
  std::vector<Point> out;
  std::array<int, kMaxDim> idx{};
  for (int d = 0; d < n; ++d) idx[d] = -m;
  for (;;) {
    Point x = ball.center;
    for (int d = 0; d < n; ++d) x[d] += step * idx[d];
    if (distance(x, ball.center) <= ball.radius * (1.0 + 1e-12)) out.push_back(x);
    int d = 0;
    while (d < n && ++idx[d] > m) idx[d++] = -m;
    if (d == n) break;
  }
  return out;
}

/// Scales r, 2r, 4r, ... below 1.
inline std::vector<double> stratum_scales(double r) {
  std::vector<double> s;
  for (double t = r; t < 1.0; t *= 2.0) s.push_back(t);
  return s;
}

namespace detail {
enum class StratumStatus { member, excluded, indeterminate };

inline StratumStatus classify_point(const ScalarField& u, const Point& x, double eta, const std::vector<double>& scales,
                                    int k, const Quadrature& quad, HomogeneityOptions opts) {
  if (k >= u.dim()) return StratumStatus::member;
  opts.lower_target = eta;
  bool member = true;
  for (double s : scales) {
    if (!(s < u.room(x))) {
      member = false;
      continue;
    }
    FlowContext ctx = make_context(u, x, s, quad, opts);
    HomogeneityReport rep;
    lower_bound(ctx, k + 1, opts, rep);
    if (rep.lower >= eta) continue;
    // budget 0: no upper bound can exclude the point
    if (opts.budget == 0) return StratumStatus::indeterminate;
    member = false;
    upper_bound(ctx, k + 1, opts, rep, eta);
    if (rep.upper < eta) return StratumStatus::excluded;
  }
  return member ? StratumStatus::member : StratumStatus::indeterminate;
}
}  // namespace detail

/// Lattice approximation of S^k_{eta,r}(u): points not (k+1, eta, s, x)-homogeneous for all
/// scales s = r 2^i < 1, split into certified members, certified exclusions and the rest.
inline StratumReport stratum_set(const ScalarField& u, double eta, double r, int k, const Ball& search, double step,
                                 const Quadrature& quad, HomogeneityOptions opts = {}) {
  if (!(eta > 0.0)) throw Error(ErrorCode::invalid_argument, "eta must be positive");
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::scale, "stratum scale r must lie in (0,1)");
  if (k < 0) throw Error(ErrorCode::dimension, "stratum index k must be nonnegative");
  StratumReport rep;
  rep.k = k;
  rep.eta = eta;
  rep.r = r;
  rep.step = step;
  rep.scales = stratum_scales(r);
  const auto lattice = ball_lattice(u.dim(), search, step);
  rep.lattice_points = lattice.size();
  for (const auto& x : lattice) {
    switch (detail::classify_point(u, x, eta, rep.scales, k, quad, opts)) {
      case detail::StratumStatus::member: rep.stratum.push_back(x); break;
      case detail::StratumStatus::excluded: rep.excluded.push_back(x); break;
      case detail::StratumStatus::indeterminate: rep.indeterminate.push_back(x); break;
    }
  }
  return rep;
}

struct ConeSplittingReport {
  bool valid_input = false;
  std::string reason;
  /// Relative L1 defects on the test ball.
  double flow_defect_x1 = 0.0;
  double translation_defect_x1 = 0.0;
  double flow_defect_x2 = 0.0;
  double split_defect = 0.0;
  bool passed = false;
  /// span{x2 - x1, V^k}.
  PlaneFrame plane;
  double test_radius = 0.0;
};

namespace detail {
template <class F>
double ball_l1(int n, const Point& center, double radius, const BallRule& rule, F&& f) {
  double acc = 0.0;
  const double vol = std::pow(radius, n);
  for (std::size_t i = 0; i < rule.size(); ++i) acc += vol * rule.weights[i] * finite_abs(f(center + radius * rule.nodes[i]));
  return acc;
}

/// || h_{z,s}(.) - h(z + .) ||_{L1(B_rho)}.
inline double flow_invariance_defect(const ScalarField& h, const Point& z, double rho, const BallRule& rule,
                                     const Quadrature& quad) {
  const double p = h.p();
  const double s = 0.5 * rho;
  const int n = h.dim();
  const double m = p == 2.0 ? spherical_max(h, z, s, quad) : 0.0;
  const double hz = p < 2.0 ? h(z) : 0.0;
  return ball_l1(n, Point{}, rho, rule, [&](const Point& y) {
    const double scaled = h.sample(z + s * y);
    double flowed;
    if (p > 2.0)
      flowed = std::pow(s, p - 2.0) * scaled;
    else if (p == 2.0)
      flowed = scaled - m;
    else
      flowed = (scaled - hz) / std::pow(s, 2.0 - p);
    return flowed - h.sample(z + y);
  });
}

inline double shift_defect(const ScalarField& h, const Point& z, const Point& v, double rho, const BallRule& rule) {
  return ball_l1(h.dim(), Point{}, rho, rule, [&](const Point& y) { return h.sample(z + y + v) - h.sample(z + y); });
}
}  // namespace detail

/// Numerical cone splitting: h k-homogeneous at x1 along V and 0-homogeneous at
/// x2 outside x1 + V should be invariant along the unit direction of x2 - x1
/// orthogonal to V. The hypotheses are re-verified first; failures there make
/// the input invalid rather than the check.
inline ConeSplittingReport cone_splitting_check(const ScalarField& h, const Point& x1, const PlaneFrame& v, const Point& x2,
                                                double tolerance, const Quadrature& quad) {
  ConeSplittingReport rep;
  const int n = h.dim();
  if (v.ambient_dim() != n) throw Error(ErrorCode::dimension, "plane and field dimensions differ");
  const double room = std::min(h.room(x1), h.room(x2));
  if (!(room > 0.0)) throw Error(ErrorCode::domain, "cone points must lie inside the field domain");
  const double rho = std::min(1.0, 0.5 * room);
  rep.test_radius = rho;
  const BallRule rule = make_ball_rule(n, quad.sphere(n), 16);
  const double scale = std::max(detail::ball_l1(n, Point{}, rho, rule, [&](const Point& y) { return h.sample(x1 + y); }), 1e-300);

  const Point offset = v.project_perp(x2 - x1);
  if (norm(offset) < 1e-9 * std::max(1.0, norm(x2 - x1))) {
    rep.reason = "x2 lies in x1 + V";
    return rep;
  }
  std::vector<Point> span{offset};
  for (int i = 0; i < v.dim(); ++i) span.push_back(v.vector(i));
  rep.plane = PlaneFrame::from_vectors(n, span);

  rep.flow_defect_x1 = detail::flow_invariance_defect(h, x1, rho, rule, quad) / scale;
  for (int i = 0; i < v.dim(); ++i)
    rep.translation_defect_x1 = std::max(
        rep.translation_defect_x1, detail::shift_defect(h, x1, (0.25 * rho) * v.vector(i), 0.5 * rho, rule) / scale);
  rep.flow_defect_x2 = detail::flow_invariance_defect(h, x2, rho, rule, quad) / scale;
  if (rep.flow_defect_x1 > tolerance) {
    rep.reason = "h is not flow invariant at x1";
    return rep;
  }
  if (rep.translation_defect_x1 > tolerance) {
    rep.reason = "h is not translation invariant along V";
    return rep;
  }
  if (rep.flow_defect_x2 > tolerance) {
    rep.reason = "h is not 0-homogeneous at x2";
    return rep;
  }
  rep.valid_input = true;
  const Point e = (1.0 / norm(offset)) * offset;
  for (double t : {0.25, 0.5})
    rep.split_defect = std::max(rep.split_defect, detail::shift_defect(h, x1, (t * rho) * e, 0.5 * rho, rule) / scale);
  rep.passed = rep.split_defect <= tolerance;
  return rep;
}

}  // namespace qstrat
