#include <gtest/gtest.h>

#include <cmath>

#include "qstrat/example_fields.hpp"
#include "qstrat/flow.hpp"
#include "qstrat/means.hpp"

using namespace qstrat;

namespace {
const Quadrature& quad() {
  static const Quadrature q;
  return q;
}

ScalarField field(int n, std::function<double(const Point&)> f, double p = 2.0) {
  return ScalarField(n, Ball{Point{}, 2.0}, p, std::move(f));
}
}  // namespace

TEST(Quadrature, SphereWeightsSumToOne) {
  for (int n = 1; n <= 4; ++n) {
    double s = 0.0;
    for (double w : quad().sphere(n).weights) s += w;
    EXPECT_NEAR(s, 1.0, 1e-12);
    for (const auto& y : quad().sphere(n).nodes) EXPECT_NEAR(norm(y), 1.0, 1e-12);
  }
}

TEST(Quadrature, SphereMomentsMatchClosedForm) {
  // mean of y_1^2 over S^{n-1} is 1/n, of y_1^4 is 3/(n(n+2))
  for (int n = 2; n <= 4; ++n) {
    double m2 = 0.0, m4 = 0.0;
    const auto& rule = quad().sphere(n);
    for (std::size_t j = 0; j < rule.size(); ++j) {
      const double y = rule.nodes[j][0];
      m2 += rule.weights[j] * y * y;
      m4 += rule.weights[j] * y * y * y * y;
    }
    EXPECT_NEAR(m2, 1.0 / n, 1e-10);
    EXPECT_NEAR(m4, 3.0 / (n * (n + 2.0)), 1e-10);
  }
}

TEST(Quadrature, RandomRotationIsOrthogonal) {
  for (int n = 2; n <= 4; ++n) {
    const auto q = random_rotation(n, 42);
    const Eigen::MatrixXd e = q.transpose() * q - Eigen::MatrixXd::Identity(n, n);
    EXPECT_LT(e.norm(), 1e-12);
    EXPECT_NEAR(q.determinant(), 1.0, 1e-12);
  }
}

TEST(Means, HarmonicMeanValueProperty) {
  // x1^2 - x2^2 + 3 x1 x3 is harmonic in R^3
  const auto u = field(3, [](const Point& x) { return x[0] * x[0] - x[1] * x[1] + 3 * x[0] * x[2] + 1.0; });
  const Point c = make_point({0.2, -0.1, 0.3});
  const double ux = u(c);
  for (double r : {0.1, 0.5, 1.0}) {
    EXPECT_NEAR(spherical_mean(u, c, r, quad()), ux, 1e-10);
    EXPECT_NEAR(volume_mean(u, c, r, quad()), ux, 1e-10);
  }
}

TEST(Means, QuadraticMoments) {
  // S(|y|^2, 0, r) = r^2, V(|y|^2, 0, r) = n r^2 / (n + 2)
  for (int n = 1; n <= 4; ++n) {
    const auto u = field(n, [](const Point& x) { return dot(x, x); });
    EXPECT_NEAR(spherical_mean(u, Point{}, 0.7, quad()), 0.49, 1e-12);
    EXPECT_NEAR(volume_mean(u, Point{}, 0.7, quad()), n * 0.49 / (n + 2.0), 1e-10);
  }
}

TEST(Means, NewtonShellTheorem) {
  // S(K_n(|. - a|), 0, r) = K_n(max(r, |a|)) in R^n
  for (int n = 3; n <= 4; ++n) {
    const auto u = riesz_sum({make_point({0.3, 0.0, 0.0})}, {1.0}, n, n);
    const RieszKernel k(n);
    EXPECT_NEAR(spherical_mean(u, Point{}, 0.8, quad()), k(0.8), 2e-4);
    EXPECT_NEAR(spherical_mean(u, Point{}, 0.15, quad()), k(0.3), 1e-5 * std::abs(k(0.3)));
  }
}

TEST(Means, SphericalMaxOfLinear) {
  const auto u = field(3, [](const Point& x) { return 2 * x[0] - x[1] + 0.5 * x[2]; });
  const double expect = 0.4 * std::sqrt(4 + 1 + 0.25);
  EXPECT_NEAR(spherical_max(u, Point{}, 0.4, quad()), expect, 1e-8);
  EXPECT_LE(spherical_max(u, Point{}, 0.4, quad()), expect + 1e-12);
}

TEST(Means, SphericalMaxFindsInteriorPeak) {
  const auto u = field(2, [](const Point& x) { return -std::pow(x[0] - 0.13, 2) - std::pow(x[1] + 0.07, 2); });
  EXPECT_NEAR(spherical_max(u, Point{}, 0.5, quad()), 0.0, 1e-8);
}

TEST(Means, OrderingSVMForSubharmonic) {
  const auto u = riesz_sum({make_point({0.1, 0.2, 0.0, 0.0})}, {1.0}, 3.0, 4);
  const Point x = make_point({0.0, 0.0, 0.1, 0.0});
  for (double r : {0.1, 0.3, 0.6}) {
    const double v = volume_mean(u, x, r, quad());
    const double s = spherical_mean(u, x, r, quad());
    const double m = spherical_max(u, x, r, quad());
    EXPECT_LE(v, s + 1e-6);
    EXPECT_LE(s, m + 1e-9);
  }
}

TEST(Means, ProfileSortsAndRejectsOutsideBall) {
  const auto u = field(2, [](const Point& x) { return x[0]; });
  const auto f = profile(u, Point{}, {0.5, 0.1, 0.3}, Statistic::S, quad());
  EXPECT_EQ(f.radii().front(), 0.1);
  EXPECT_EQ(f.kind(), ProfileKind::S);
  EXPECT_THROW(spherical_mean(u, make_point({1.5, 0.0}), 0.6, quad()), Error);
  EXPECT_THROW(spherical_mean(u, Point{}, 0.0, quad()), Error);
}

TEST(Means, LaplacianMassOfFundamentalSolution) {
  for (int n = 2; n <= 4; ++n) {
    const auto u = riesz_sum({Point{}}, {1.0}, n, n);
    for (double r : {0.2, 0.5}) EXPECT_NEAR(laplacian_mass(u, Point{}, r, quad()).value, 1.0, 1e-4) << n;
  }
}

TEST(Means, LaplacianMassScalesLinearlyForK3InR4) {
  // S(r) = -1/r, K_4(r) = -1/r^2: dS/dK_4 = r/2
  const auto u = riesz_sum({Point{}}, {1.0}, 3.0, 4);
  const double a = laplacian_mass(u, Point{}, 0.2, quad()).value;
  const double b = laplacian_mass(u, Point{}, 0.4, quad()).value;
  EXPECT_NEAR(a, 0.1, 5e-4);
  EXPECT_NEAR(b / a, 2.0, 1e-3);
}

TEST(Means, LaplacianMassFlagsSuperharmonic) {
  const auto u = field(3, [](const Point& x) { return -dot(x, x); });
  const auto m = laplacian_mass(u, Point{}, 0.5, quad());
  EXPECT_TRUE(m.non_subharmonic);
  EXPECT_EQ(m.value, 0.0);
}

TEST(Flow, KernelIsFlowInvariant) {
  const auto u = riesz_sum({Point{}}, {1.0}, 3.0, 3);
  for (double r : {0.1, 0.5}) {
    const auto w = p_flow(u, Point{}, r, quad());
    for (const auto& y : {make_point({0.3, 0.1, 0.0}), make_point({-0.5, 0.5, 0.2})}) EXPECT_NEAR(w(y), u(y), 1e-12);
  }
  EXPECT_THROW(p_flow(u, Point{}, 2.5, quad()), Error);
}

TEST(Flow, LogFlowSubtractsMax) {
  const auto u = riesz_sum({Point{}}, {1.0}, 2.0, 2);
  const auto w = p_flow(u, Point{}, 0.25, quad());
  const Point y = make_point({0.6, 0.0});
  EXPECT_NEAR(w(y), std::log(0.6), 1e-9);
}
