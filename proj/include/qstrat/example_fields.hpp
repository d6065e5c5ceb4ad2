#pragma once

// Ground-truth fields with known singular structure.

#include <complex>
#include <memory>
#include <vector>

#include "qstrat/fields.hpp"
#include "qstrat/kernels.hpp"

namespace qstrat {

/// Real polynomial in up to four variables.
class Polynomial {
 public:
  struct Term {
    double coefficient = 0.0;
    std::array<int, kMaxDim> exponents{};
  };

  Polynomial() = default;
  explicit Polynomial(std::vector<Term> terms) : terms_(std::move(terms)) {}

  const std::vector<Term>& terms() const noexcept { return terms_; }

  int degree() const {
    int d = 0;
    for (const auto& t : terms_) {
      int s = 0;
      for (int e : t.exponents) s += e;
      if (t.coefficient != 0.0) d = std::max(d, s);
    }
    return d;
  }

  double operator()(const Point& x) const {
    double acc = 0.0;
    for (const auto& t : terms_) {
      double m = t.coefficient;
      for (int i = 0; i < kMaxDim; ++i)
        for (int e = 0; e < t.exponents[i]; ++e) m *= x[i];
      acc += m;
    }
    return acc;
  }

  /// Symbolic Laplacian in the first n variables (terms combined).
  Polynomial laplacian(int n) const {
    std::vector<Term> out;
    auto add = [&out](const Term& t) {
      for (auto& o : out)
        if (o.exponents == t.exponents) {
          o.coefficient += t.coefficient;
          return;
        }
      out.push_back(t);
    };
    for (const auto& t : terms_)
      for (int i = 0; i < n; ++i)
        if (t.exponents[i] >= 2) {
          Term d = t;
          d.coefficient *= t.exponents[i] * (t.exponents[i] - 1);
          d.exponents[i] -= 2;
          add(d);
        }
    return Polynomial(out);
  }

  bool is_zero(double tol = 1e-12) const {
    for (const auto& t : terms_)
      if (std::abs(t.coefficient) > tol) return false;
    return true;
  }

 private:
  std::vector<Term> terms_;
};

/// Complex polynomial in m variables z_j = x_{2j} + i x_{2j+1}.
struct ComplexPolynomial {
  struct Term {
    std::complex<double> coefficient;
    std::array<int, 2> exponents{};
  };
  int m = 1;
  std::vector<Term> terms;

  std::complex<double> operator()(const Point& x) const {
    std::array<std::complex<double>, 2> z{std::complex<double>(x[0], x[1]), std::complex<double>(x[2], x[3])};
    std::complex<double> acc = 0.0;
    for (const auto& t : terms) {
      std::complex<double> v = t.coefficient;
      for (int j = 0; j < m; ++j)
        for (int e = 0; e < t.exponents[j]; ++e) v *= z[j];
      acc += v;
    }
    return acc;
  }
};

inline constexpr double kDefaultDomainRadius = 2.0;

inline ScalarField constant_field(int n, double c, double p, Ball domain = {Point{}, kDefaultDomainRadius}) {
  return ScalarField(n, domain, p, [c](const Point&) { return c; }, c == 0.0 ? "zero" : "constant");
}

/// u(x) = sum_i w_i K_p(|x - x_i|), the model field with density w_i at x_i.
inline ScalarField riesz_sum(const std::vector<Point>& centers, const std::vector<double>& weights, double p, int n,
                             Ball domain = {Point{}, kDefaultDomainRadius}) {
  if (centers.size() != weights.size()) throw Error(ErrorCode::invalid_argument, "centers and weights differ in length");
  if (p > n) throw Error(ErrorCode::unsupported_characteristic, "K_p(|x|) is not subharmonic on R^n when p > n");
  if (p < 2.0) throw Error(ErrorCode::unsupported_characteristic, "riesz_sum needs p >= 2");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (weights[i] < 0.0) throw Error(ErrorCode::invalid_argument, "riesz_sum weights must be nonnegative");
    for (std::size_t j = 0; j < i; ++j)
      if (distance(centers[i], centers[j]) == 0.0) throw Error(ErrorCode::invalid_argument, "riesz_sum centers must be distinct");
  }
  const RieszKernel kernel(p);
  ScalarField u(n, domain, p,
                [centers, weights, kernel](const Point& x) {
                  double acc = 0.0;
                  for (std::size_t i = 0; i < centers.size(); ++i) {
                    const double d = distance(x, centers[i]);
                    if (d == 0.0) {
                      if (weights[i] > 0.0) return kNegInf;
                      continue;
                    }
                    acc += weights[i] * kernel(d);
                  }
                  return acc;
                },
                centers.empty() ? "zero" : "riesz_sum");
  for (std::size_t i = 0; i < centers.size(); ++i)
    if (weights[i] > 0.0) u.add_singular_locus({centers[i], PlaneFrame::zero(n)});
  return u;
}

/// u(x) = K_p(dist(x, V)) with dim V = n - p: exactly (n-p)-homogeneous along V.
inline ScalarField plane_kernel(const PlaneFrame& plane, double p, Ball domain = {Point{}, kDefaultDomainRadius}) {
  const int n = plane.ambient_dim();
  if (p < 2.0) throw Error(ErrorCode::unsupported_characteristic, "plane_kernel needs p >= 2");
  if (std::abs(plane.dim() - (n - p)) > 1e-12) throw Error(ErrorCode::dimension, "plane_kernel needs dim V = n - p");
  const RieszKernel kernel(p);
  ScalarField u(n, domain, p,
                [plane, kernel](const Point& x) {
                  const double d = plane.distance(x);
                  return d == 0.0 ? kNegInf : kernel(d);
                },
                "plane_kernel");
  u.add_singular_locus({Point{}, plane});
  return u;
}

/// u(z) = log|P(z)| on R^{2m} identified with C^m (p = 2 family).
inline ScalarField log_modulus(const ComplexPolynomial& poly, Ball domain = {Point{}, kDefaultDomainRadius}) {
  if (poly.m < 1 || poly.m > 2) throw Error(ErrorCode::dimension, "log_modulus supports m in {1,2}");
  bool nonzero = false;
  for (const auto& t : poly.terms)
    if (std::abs(t.coefficient) > 0.0) nonzero = true;
  if (!nonzero) throw Error(ErrorCode::invalid_argument, "log_modulus needs a nonzero polynomial");
  return ScalarField(2 * poly.m, domain, 2.0,
                     [poly](const Point& x) {
                       const double a = std::abs(poly(x));
                       return a == 0.0 ? kNegInf : std::log(a);
                     },
                     "log_modulus");
}

/// u = h + w K_p(|x - center|) with h a harmonic polynomial of degree <= 3.
inline ScalarField harmonic_plus_kernel(const Polynomial& h, const Point& center, double weight, double p, int n,
                                        Ball domain = {Point{}, kDefaultDomainRadius}) {
  if (h.degree() > 3) throw Error(ErrorCode::invalid_argument, "harmonic part must have degree <= 3");
  if (!h.laplacian(n).is_zero()) throw Error(ErrorCode::invalid_argument, "polynomial is not harmonic");
  if (weight < 0.0) throw Error(ErrorCode::invalid_argument, "kernel weight must be nonnegative");
  if (p > n || p < 2.0) throw Error(ErrorCode::unsupported_characteristic, "kernel needs 2 <= p <= n");
  const RieszKernel kernel(p);
  ScalarField u(n, domain, p,
                [h, center, weight, kernel](const Point& x) {
                  double v = h(x);
                  if (weight > 0.0) {
                    const double d = distance(x, center);
                    if (d == 0.0) return kNegInf;
                    v += weight * kernel(d);
                  }
                  return v;
                },
                "harmonic_plus_kernel");
  if (weight > 0.0) u.add_singular_locus({center, PlaneFrame::zero(n)});
  return u;
}

/// Largest lattice accepted by grid_sample.
inline constexpr double kGridCellGuard = 128.0;

/// Lattice samples of u over the ball; `resolution` is the number of cells across the diameter.
/// Lattice points outside the field domain are clipped to the domain; non-finite samples are
/// replaced by the value a quarter cell away and flagged in `masked`.
inline ScalarField grid_sample(const ScalarField& u, int resolution, const Ball& ball) {
  if (resolution < 8) throw Error(ErrorCode::resolution, "grid resolution must be >= 8 per axis");
  const int n = u.dim();
  if (std::pow(static_cast<double>(resolution), n) > std::pow(kGridCellGuard, n))
    throw Error(ErrorCode::memory_guard, "grid exceeds 128^n cells");
  auto g = std::make_shared<GridData>();
  g->n = n;
  g->ball = ball;
  g->p = u.p();
  g->h = 2.0 * ball.radius / resolution;
  g->half = (resolution + 1) / 2;
  const int m = g->points_per_axis();
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) total *= static_cast<std::size_t>(m);
  g->values.resize(total);
  g->masked.assign(total, 0);
  std::array<int, kMaxDim> idx{};
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int d = n - 1; d >= 0; --d) {
      idx[d] = static_cast<int>(rem % m);
      rem /= m;
    }
    Point x = g->lattice_point(idx);
    const Point rel = x - u.domain().center;
    const double len = norm(rel);
    if (len > u.domain().radius) x = u.domain().center + (u.domain().radius / len) * rel;
    double v = u(x);
    if (!std::isfinite(v)) {
      g->masked[flat] = 1;
      Point y = x;
      for (int d = 0; d < n; ++d) y[d] += 0.25 * g->h / std::sqrt(static_cast<double>(n));
      v = u(y);
      if (!std::isfinite(v)) v = -1.0 / std::numeric_limits<double>::epsilon();
    }
    g->values[flat] = v;
  }
  return grid_field(g, u.label() + "@grid");
}

}  // namespace qstrat
