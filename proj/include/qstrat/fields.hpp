#pragma once

// Scalar fields on balls of R^n, affine plane frames, restriction, grid backing and L1 distances.

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qstrat/core.hpp"
#include "qstrat/quadrature.hpp"

namespace qstrat {

/// A k-dimensional linear subspace of R^n held as an orthonormal frame.
class PlaneFrame {
 public:
  PlaneFrame() = default;

  /// Orthonormalizes the given spanning vectors (modified Gram-Schmidt, twice).
  static PlaneFrame from_vectors(int n, const std::vector<Point>& vectors) {
    if (n < 1 || n > kMaxDim) throw Error(ErrorCode::dimension, "plane ambient dimension must be in [1,4]");
    if (static_cast<int>(vectors.size()) > n) throw Error(ErrorCode::dimension, "plane dimension exceeds ambient dimension");
    PlaneFrame f;
    f.n_ = n;
    for (const Point& v0 : vectors) {
      Point v{};
      for (int i = 0; i < n; ++i) v[i] = v0[i];
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j < f.k_; ++j) v = v - dot(v, f.basis_[j]) * f.basis_[j];
      const double len = norm(v);
      if (len < 1e-10) throw Error(ErrorCode::invalid_argument, "plane spanning vectors are linearly dependent");
      f.basis_[f.k_++] = (1.0 / len) * v;
    }
    return f;
  }

  /// span{e_i : i in indices}.
  static PlaneFrame coordinate(int n, const std::vector<int>& indices) {
    std::vector<Point> vs;
    for (int i : indices) vs.push_back(unit(i));
    return from_vectors(n, vs);
  }

  static PlaneFrame zero(int n) { return from_vectors(n, {}); }

  int ambient_dim() const noexcept { return n_; }
  int dim() const noexcept { return k_; }
  const Point& vector(int i) const { return basis_.at(i); }

  /// x + sum_i t_i w_i for t in R^k.
  Point embed(const Point& base, const Point& t) const {
    Point x = base;
    for (int i = 0; i < k_; ++i) x = x + t[i] * basis_[i];
    return x;
  }

  Point project(const Point& x) const {
    Point y{};
    for (int i = 0; i < k_; ++i) y = y + dot(x, basis_[i]) * basis_[i];
    return y;
  }

  Point project_perp(const Point& x) const { return x - project(x); }

  double distance(const Point& x) const { return norm(project_perp(x)); }

  /// Orthonormal frame of the orthogonal complement.
  PlaneFrame complement() const {
    std::vector<Point> vs;
    PlaneFrame f = *this;
    for (int i = 0; i < n_ && f.k_ < n_; ++i) {
      Point e = unit(i);
      Point v = e;
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j < f.k_; ++j) v = v - dot(v, f.basis_[j]) * f.basis_[j];
      if (norm(v) > 0.3) {
        f.basis_[f.k_++] = (1.0 / norm(v)) * v;
        vs.push_back(f.basis_[f.k_ - 1]);
      }
    }
    return from_vectors(n_, vs);
  }

  /// Maximum deviation of the frame from orthonormality.
  double orthonormality_error() const {
    double e = 0.0;
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j) e = std::max(e, std::abs(dot(basis_[i], basis_[j]) - (i == j ? 1.0 : 0.0)));
    return e;
  }

 private:
  int n_ = 0;
  int k_ = 0;
  std::array<Point, kMaxDim> basis_{};
};

/// Principal angles between two subspaces, ascending, min(dim) of them.
inline std::vector<double> principal_angles(const PlaneFrame& a, const PlaneFrame& b) {
  const int ka = a.dim(), kb = b.dim();
  if (ka == 0 || kb == 0) return {};
  Eigen::MatrixXd m(ka, kb);
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) m(i, j) = dot(a.vector(i), b.vector(j));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  std::vector<double> angles;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    angles.push_back(std::acos(std::clamp(svd.singularValues()(i), -1.0, 1.0)));
  std::sort(angles.begin(), angles.end());
  return angles;
}

inline double max_principal_angle(const PlaneFrame& a, const PlaneFrame& b) {
  const auto angles = principal_angles(a, b);
  return angles.empty() ? 0.0 : angles.back();
}

/// Haar-distributed k-plane of R^n: orthonormalized Gaussian frame.
template <class Rng>
PlaneFrame random_plane(int n, int k, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    std::vector<Point> vs(k);
    for (auto& v : vs)
      for (int i = 0; i < n; ++i) v[i] = g(rng);
    try {
      return PlaneFrame::from_vectors(n, vs);
    } catch (const Error&) {
      // degenerate draw, retry
    }
  }
}

/// Affine singular locus base + V (a point when V is zero-dimensional).
struct SingularLocus {
  Point base{};
  PlaneFrame plane;

  double distance(const Point& x) const { return plane.distance(x - base); }
};

/// Uniform lattice samples with multilinear interpolation.
struct GridData {
  int n = 0;
  double h = 0.0;
  Ball ball;
  double p = 2.0;
  /// Lattice points are ball.center + h * (i - half) for i in [0, 2*half].
  int half = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> masked;

  int points_per_axis() const noexcept { return 2 * half + 1; }

  std::size_t index(const std::array<int, kMaxDim>& idx) const {
    std::size_t flat = 0;
    for (int d = 0; d < n; ++d) flat = flat * static_cast<std::size_t>(points_per_axis()) + static_cast<std::size_t>(idx[d]);
    return flat;
  }

  Point lattice_point(const std::array<int, kMaxDim>& idx) const {
    Point x = ball.center;
    for (int d = 0; d < n; ++d) x[d] += h * (idx[d] - half);
    return x;
  }

  double interpolate(const Point& x) const {
    std::array<int, kMaxDim> base{};
    std::array<double, kMaxDim> frac{};
    const int top = points_per_axis() - 1;
    for (int d = 0; d < n; ++d) {
      double s = (x[d] - ball.center[d]) / h + half;
      s = std::clamp(s, 0.0, static_cast<double>(top));
      int i = std::min(static_cast<int>(std::floor(s)), top - 1);
      base[d] = i;
      frac[d] = s - i;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << n); ++corner) {
      double w = 1.0;
      std::array<int, kMaxDim> idx = base;
      for (int d = 0; d < n; ++d) {
        if (corner & (1 << d)) {
          idx[d] += 1;
          w *= frac[d];
        } else {
          w *= 1.0 - frac[d];
        }
      }
      if (w != 0.0) acc += w * values[index(idx)];
    }
    return acc;
  }
};

/// A real-valued function on a ball of R^n (values in [-inf, inf)).
class ScalarField {
 public:
  using Evaluator = std::function<double(const Point&)>;

  ScalarField() = default;
  ScalarField(int dim, Ball domain, double p, Evaluator f, std::string label = {})
      : dim_(dim), domain_(domain), p_(p), f_(std::move(f)), label_(std::move(label)) {
    if (dim < 1 || dim > kMaxDim) throw Error(ErrorCode::dimension, "field dimension must be in [1,4]");
    if (!(domain.radius > 0.0)) throw Error(ErrorCode::domain, "field domain radius must be positive");
  }

  int dim() const noexcept { return dim_; }
  const Ball& domain() const noexcept { return domain_; }
  double p() const noexcept { return p_; }
  const std::string& label() const noexcept { return label_; }

  bool contains(const Point& x, double slack = 1e-9) const {
    return distance(x, domain_.center) <= domain_.radius * (1.0 + slack);
  }

  /// Largest radius rho with B_rho(x) inside the domain.
  double room(const Point& x) const { return domain_.radius - distance(x, domain_.center); }

  /// Unchecked evaluation.
  double operator()(const Point& x) const { return f_(x); }

  double evaluate(const Point& x) const {
    if (!contains(x)) throw Error(ErrorCode::domain, "evaluation point outside field domain");
    return f_(x);
  }

  /// Evaluation used by quadrature: points within 1e-6 of a declared singular
  /// locus, or with non-finite values, are resampled at a nearby point.
  double sample(const Point& x) const {
    bool near = false;
    for (const auto& locus : loci_)
      if (locus.distance(x) < 1e-6) {
        near = true;
        break;
      }
    if (!near) {
      const double v = f_(x);
      if (std::isfinite(v)) return v;
    }
    for (int attempt = 0; attempt < 2 * kMaxDim; ++attempt) {
      Point y = x;
      const double step = 4e-6 * (1 + attempt / dim_);
      y[attempt % dim_] += (attempt % 2 == 0 ? step : -step);
      y[(attempt + 1) % dim_] += 0.5 * step;
      const double v = f_(y);
      if (std::isfinite(v)) return v;
    }
    return f_(x);
  }

  void add_singular_locus(SingularLocus locus) { loci_.push_back(std::move(locus)); }
  const std::vector<SingularLocus>& singular_loci() const noexcept { return loci_; }

  std::shared_ptr<const GridData> grid() const noexcept { return grid_; }
  void set_grid(std::shared_ptr<const GridData> grid) { grid_ = std::move(grid); }
  void set_label(std::string label) { label_ = std::move(label); }

 private:
  int dim_ = 1;
  Ball domain_{};
  double p_ = 2.0;
  Evaluator f_;
  std::string label_;
  std::vector<SingularLocus> loci_;
  std::shared_ptr<const GridData> grid_;
};

/// u + a (same domain and loci).
inline ScalarField add_constant(const ScalarField& u, double a) {
  ScalarField v(u.dim(), u.domain(), u.p(), [u, a](const Point& x) { return u(x) + a; }, u.label());
  for (const auto& l : u.singular_loci()) v.add_singular_locus(l);
  return v;
}

/// a * u (same domain and loci).
inline ScalarField scale_field(const ScalarField& u, double a) {
  ScalarField v(u.dim(), u.domain(), u.p(), [u, a](const Point& x) { return a * u(x); }, u.label());
  for (const auto& l : u.singular_loci()) v.add_singular_locus(l);
  return v;
}

/// v(t) = u(x + W t) on the largest centered ball fitting in the domain of u.
inline ScalarField restrict_field(const ScalarField& u, const PlaneFrame& plane, const Point& x) {
  if (plane.ambient_dim() != u.dim()) throw Error(ErrorCode::dimension, "plane and field dimensions differ");
  if (plane.dim() < 1) throw Error(ErrorCode::dimension, "restriction needs a plane of dimension >= 1");
  if (!u.contains(x)) throw Error(ErrorCode::domain, "restriction base point outside field domain");
  const double rho = u.room(x);
  if (!(rho > 0.0)) throw Error(ErrorCode::domain, "restriction base point on the domain boundary");
  return ScalarField(plane.dim(), Ball{Point{}, rho}, u.p(),
                     [u, plane, x](const Point& t) { return u(plane.embed(x, t)); }, u.label() + "|W");
}

/// Average of f over B_radius(center) in R^n using the shell x sphere rule.
template <class F>
double ball_average(int n, const Ball& ball, const Quadrature& quad, F&& f) {
  const SphereRule& sphere = quad.sphere(n);
  const RadialRule& shells = quad.shells(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < shells.radii.size(); ++i) {
    const double rho = ball.radius * shells.radii[i];
    double shell = 0.0;
    for (std::size_t j = 0; j < sphere.size(); ++j) shell += sphere.weights[j] * f(ball.center + rho * sphere.nodes[j]);
    acc += shells.weights[i] * shell;
  }
  return acc;
}

struct L1Estimate {
  double value = 0.0;
  std::size_t samples = 0;
};

inline void require_inside(const ScalarField& u, const Ball& ball) {
  if (!(ball.radius > 0.0)) throw Error(ErrorCode::domain, "empty integration ball");
  if (distance(ball.center, u.domain().center) + ball.radius > u.domain().radius * (1.0 + 1e-9))
    throw Error(ErrorCode::domain, "integration ball not contained in field domain");
}

/// Quadrature estimate of the integral of |u - v| over the ball.
inline L1Estimate l1_distance(const ScalarField& u, const ScalarField& v, const Ball& ball, const Quadrature& quad) {
  if (u.dim() != v.dim()) throw Error(ErrorCode::dimension, "fields have different dimensions");
  require_inside(u, ball);
  require_inside(v, ball);
  const int n = u.dim();
  const double avg = ball_average(n, ball, quad, [&](const Point& y) {
    const double d = std::abs(u.sample(y) - v.sample(y));
    return std::isfinite(d) ? d : 0.0;
  });
  return {avg * unit_ball_volume(n) * std::pow(ball.radius, n), quad.ball_nodes(n)};
}

inline L1Estimate l1_norm(const ScalarField& u, const Ball& ball, const Quadrature& quad) {
  require_inside(u, ball);
  const int n = u.dim();
  const double avg = ball_average(n, ball, quad, [&](const Point& y) {
    const double d = std::abs(u.sample(y));
    return std::isfinite(d) ? d : 0.0;
  });
  return {avg * unit_ball_volume(n) * std::pow(ball.radius, n), quad.ball_nodes(n)};
}

/// Field backed by grid samples.
inline ScalarField grid_field(std::shared_ptr<const GridData> grid, std::string label = "grid") {
  ScalarField f(grid->n, grid->ball, grid->p, [grid](const Point& x) { return grid->interpolate(x); }, std::move(label));
  f.set_grid(grid);
  return f;
}

/// Grid CSV: header `n,h,c1..cn,radius,p`, one metadata row, header `x1..xn,value`,
/// then one lattice sample per line in row-major index order.
inline void write_grid_csv(const GridData& g, std::ostream& os) {
  os << "n,h";
  for (int d = 0; d < g.n; ++d) os << ",c" << d + 1;
  os << ",radius,p\n";
  os << std::setprecision(17) << g.n << ',' << g.h;
  for (int d = 0; d < g.n; ++d) os << ',' << g.ball.center[d];
  os << ',' << g.ball.radius << ',' << g.p << '\n';
  for (int d = 0; d < g.n; ++d) os << 'x' << d + 1 << ',';
  os << "value\n";
  const int m = g.points_per_axis();
  std::array<int, kMaxDim> idx{};
  const std::size_t total = g.values.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int d = g.n - 1; d >= 0; --d) {
      idx[d] = static_cast<int>(rem % m);
      rem /= m;
    }
    const Point x = g.lattice_point(idx);
    for (int d = 0; d < g.n; ++d) os << x[d] << ',';
    os << g.values[flat] << '\n';
  }
}

namespace detail {
inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() && s.find_first_not_of(" \t\r", pos) != std::string::npos)
      throw Error(ErrorCode::parse, "bad number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::parse, "bad number '" + s + "'");
  } catch (const std::out_of_range&) {
    throw Error(ErrorCode::parse, "number out of range '" + s + "'");
  }
}
}  // namespace detail

inline std::shared_ptr<GridData> read_grid_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("n,h", 0) != 0) throw Error(ErrorCode::parse, "grid CSV must start with 'n,h,...'");
  if (!std::getline(is, line)) throw Error(ErrorCode::parse, "grid CSV metadata row missing");
  auto meta = detail::split(line, ',');
  auto g = std::make_shared<GridData>();
  if (meta.empty()) throw Error(ErrorCode::parse, "empty metadata row");
  g->n = static_cast<int>(detail::parse_double(meta[0]));
  if (g->n < 1 || g->n > kMaxDim || static_cast<int>(meta.size()) != g->n + 4)
    throw Error(ErrorCode::parse, "grid CSV metadata row has wrong arity");
  g->h = detail::parse_double(meta[1]);
  for (int d = 0; d < g->n; ++d) g->ball.center[d] = detail::parse_double(meta[2 + d]);
  g->ball.radius = detail::parse_double(meta[2 + g->n]);
  g->p = detail::parse_double(meta[3 + g->n]);
  if (!(g->h > 0.0) || !(g->ball.radius > 0.0)) throw Error(ErrorCode::parse, "grid spacing and radius must be positive");
  g->half = static_cast<int>(std::ceil(g->ball.radius / g->h - 1e-9));
  const int m = g->points_per_axis();
  std::size_t total = 1;
  for (int d = 0; d < g->n; ++d) total *= static_cast<std::size_t>(m);
  g->values.assign(total, std::numeric_limits<double>::quiet_NaN());
  g->masked.assign(total, 0);
  if (!std::getline(is, line)) throw Error(ErrorCode::parse, "grid CSV sample header missing");
  std::size_t seen = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    auto cols = detail::split(line, ',');
    if (static_cast<int>(cols.size()) != g->n + 1) throw Error(ErrorCode::parse, "grid CSV sample row has wrong arity");
    std::array<int, kMaxDim> idx{};
    for (int d = 0; d < g->n; ++d) {
      const double x = detail::parse_double(cols[d]);
      const long i = std::lround((x - g->ball.center[d]) / g->h) + g->half;
      if (i < 0 || i >= m) throw Error(ErrorCode::parse, "grid CSV sample outside lattice");
      idx[d] = static_cast<int>(i);
    }
    g->values[g->index(idx)] = detail::parse_double(cols[g->n]);
    ++seen;
  }
  if (seen != total) throw Error(ErrorCode::parse, "grid CSV has " + std::to_string(seen) + " samples, expected " + std::to_string(total));
  return g;
}

}  // namespace qstrat
