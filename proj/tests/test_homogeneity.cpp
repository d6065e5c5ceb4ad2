#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "qstrat/example_fields.hpp"
#include "qstrat/homogeneity.hpp"

using namespace qstrat;

namespace {
const Quadrature& quad() {
  static const Quadrature q;
  return q;
}

HomogeneityOptions fast(int budget = 16) {
  HomogeneityOptions o;
  o.budget = budget;
  o.precise = false;
  return o;
}

/// Midpoint rule for the integral over B_1 in R^3 of f.
double ball_integral_3d(const std::function<double(const Point&)>& f, int m = 60) {
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double rho = (i + 0.5) / m;
    for (int j = 0; j < m; ++j) {
      const double z = -1.0 + (j + 0.5) * 2.0 / m;
      const double s = std::sqrt(1.0 - z * z);
      for (int l = 0; l < 2 * m; ++l) {
        const double phi = (l + 0.5) * std::numbers::pi / m;
        const Point y = make_point({rho * s * std::cos(phi), rho * s * std::sin(phi), rho * z});
        acc += f(y) * rho * rho;
      }
    }
  }
  // d(vol) = rho^2 d(rho) d(z) d(phi)
  return acc * (1.0 / m) * (2.0 / m) * (std::numbers::pi / m);
}
}  // namespace

TEST(HomogeneousModel, KernelModelIsFlowAndTranslationInvariant) {
  HomogeneousModel h;
  h.kind = HomogeneousModel::Kind::kernel;
  h.p = 3.0;
  h.k = 1;
  h.kernel_plane = PlaneFrame::coordinate(4, {3});
  h.plane = h.kernel_plane;
  h.theta = 1.3;
  const Point y = make_point({0.2, -0.1, 0.3, 0.4});
  for (double s : {0.5, 2.0}) EXPECT_NEAR(s * h(s * y), h(y), 1e-12);
  EXPECT_NEAR(h(y + 0.7 * unit(3)), h(y), 1e-12);
}

TEST(Homogeneity, ExactPlaneKernel) {
  const PlaneFrame v = PlaneFrame::coordinate(4, {3});
  const auto u = plane_kernel(v, 3.0);
  const auto rep = homogeneity_defect(u, make_point({0.0, 0.0, 0.0, 0.3}), 0.5, 1, quad());
  EXPECT_NEAR(rep.lower, 0.0, 1e-3);
  EXPECT_LE(rep.upper, 0.02);
  EXPECT_LE(rep.lower, rep.upper);
  EXPECT_EQ(rep.plane.dim(), 1);
  EXPECT_LE(max_principal_angle(rep.plane, v), 0.05);
}

TEST(Homogeneity, ExactLogPlaneKernel) {
  const PlaneFrame v = PlaneFrame::coordinate(3, {2});
  const auto u = plane_kernel(v, 2.0);
  const auto rep = homogeneity_defect(u, make_point({0.0, 0.0, -0.2}), 0.4, 1, quad());
  EXPECT_NEAR(rep.lower, 0.0, 1e-3);
  EXPECT_LE(rep.upper, 0.02);
  EXPECT_LE(max_principal_angle(rep.plane, v), 0.05);
}

TEST(Homogeneity, ZeroField) {
  const auto u = constant_field(3, 0.0, 3.0);
  for (int k = 0; k <= 3; ++k) {
    const auto rep = homogeneity_defect(u, make_point({0.1, 0.2, 0.0}), 0.5, k, quad(), fast());
    EXPECT_EQ(rep.lower, 0.0);
    EXPECT_EQ(rep.upper, 0.0);
  }
}

TEST(Homogeneity, KernelPairLowerBoundMatchesOracle) {
  const auto u = riesz_sum({Point{}, unit(0)}, {1.0, 1.0}, 3.0, 3);
  const double r = 0.9;
  // oracle: D(0) = int_{B_1} | 2^{-1} w(y/2) - w(y) |, w(y) = r u(r y)
  auto w = [&](const Point& y) { return r * u(r * y); };
  const double d0 = ball_integral_3d([&](const Point& y) { return std::abs(0.5 * w(0.5 * y) - w(y)); });
  const double expected = d0 / (1.0 + 4.0);
  const auto rep = homogeneity_defect(u, Point{}, r, 0, quad());
  EXPECT_GT(rep.lower, 0.0);
  EXPECT_NEAR(rep.lower, expected, 0.02 * expected);
  EXPECT_DOUBLE_EQ(rep.c0, 0.2);
  EXPECT_LE(rep.lower, rep.upper);
}

TEST(Homogeneity, SandwichOnPerturbedKernel) {
  // u = K_3 + eps x1^2 and the kernel itself is 0-homogeneous, so the true defect
  // is at most || eps (x1^2)_{0,r} ||_{L1(B_1)} = eps r^3 int y1^2 = eps r^3 |B_1| / 5
  const double eps = 0.5, r = 0.6;
  const auto u = ScalarField(3, Ball{Point{}, 2.0}, 3.0, [eps](const Point& x) {
    const double d = norm(x);
    return (d == 0.0 ? kNegInf : -1.0 / d) + eps * x[0] * x[0];
  });
  const double bound = eps * r * r * r * unit_ball_volume(3) / 5.0;
  const auto rep = homogeneity_defect(u, Point{}, r, 0, quad(), fast());
  EXPECT_LE(rep.lower, bound);
  EXPECT_LE(rep.upper, bound * 1.02);
  EXPECT_LE(rep.lower, rep.upper);
  EXPECT_GT(rep.lower, 0.0);
}

TEST(Homogeneity, BudgetZeroGivesLowerOnly) {
  const auto u = riesz_sum({Point{}}, {1.0}, 3.0, 3);
  HomogeneityOptions o = fast(0);
  const auto rep = homogeneity_defect(u, make_point({0.2, 0.0, 0.0}), 0.5, 1, quad(), o);
  EXPECT_TRUE(std::isinf(rep.upper));
  EXPECT_GE(rep.lower, 0.0);
}

TEST(Homogeneity, RejectsBadArguments) {
  const auto u = riesz_sum({Point{}}, {1.0}, 3.0, 3);
  EXPECT_THROW(homogeneity_defect(u, Point{}, 0.5, 4, quad()), Error);
  EXPECT_THROW(homogeneity_defect(u, Point{}, 2.5, 0, quad()), Error);
}

TEST(HomogeneityProperty, LowerBoundMonotoneInK) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coord(-0.3, 0.3), weight(0.5, 1.5);
  for (int trial = 0; trial < 4; ++trial) {
    const auto u = riesz_sum({make_point({coord(rng), coord(rng), coord(rng)}), make_point({0.6, 0.1, 0.0})},
                             {weight(rng), weight(rng)}, 3.0, 3);
    const Point x = make_point({coord(rng), coord(rng), coord(rng)});
    double prev = -1.0;
    for (int k = 0; k <= 3; ++k) {
      HomogeneityOptions o = fast();
      o.compute_upper = false;
      const auto rep = homogeneity_defect(u, x, 0.4, k, quad(), o);
      EXPECT_GE(rep.lower, prev) << "trial " << trial << " k " << k;
      prev = rep.lower;
    }
  }
}

TEST(HomogeneityProperty, SandwichOnRandomKernelSums) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> coord(-0.4, 0.4);
  for (int trial = 0; trial < 3; ++trial) {
    const auto u = riesz_sum({make_point({coord(rng), coord(rng), 0.0}), make_point({coord(rng), 0.5, 0.1})}, {1.0, 0.7},
                             3.0, 3);
    const auto rep = homogeneity_defect(u, Point{}, 0.5, trial % 2, quad(), fast());
    EXPECT_GE(rep.lower, 0.0);
    EXPECT_LE(rep.lower, rep.upper);
  }
}

TEST(Stratum, LatticeAndScales) {
  const auto s = stratum_scales(0.1);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_DOUBLE_EQ(s.back(), 0.8);
  const auto l = ball_lattice(2, Ball{Point{}, 1.0}, 0.5);
  EXPECT_EQ(l.size(), 13u);
  EXPECT_THROW(stratum_set(constant_field(2, 0.0, 2.0), 0.0, 0.1, 0, Ball{Point{}, 0.5}, 0.1, quad()), Error);
  EXPECT_THROW(stratum_set(constant_field(2, 0.0, 2.0), 0.1, 1.0, 0, Ball{Point{}, 0.5}, 0.1, quad()), Error);
}

TEST(Stratum, HarmonicFieldHasEmptyStrata) {
  const auto u = ScalarField(3, Ball{Point{}, 2.0}, 3.0, [](const Point& x) { return x[0] * x[0] - x[1] * x[1] + x[2]; });
  for (int k = 0; k < 3; ++k) {
    const auto rep = stratum_set(u, 0.05, 0.125, k, Ball{Point{}, 0.5}, 0.25, quad(), fast());
    EXPECT_TRUE(rep.stratum.empty()) << k;
  }
}

TEST(Stratum, SingleKernelCenter) {
  const auto u = riesz_sum({Point{}}, {1.0}, 3.0, 3);
  // the center keeps lower = c0 T_1 ~ 0.09 at every scale; smooth points flow to 0 linearly in s
  const auto rep = stratum_set(u, 0.05, 1.0 / 128, 0, Ball{Point{}, 0.5}, 0.25, quad(), fast());
  ASSERT_EQ(rep.stratum.size(), 1u);
  EXPECT_LE(norm(rep.stratum[0]), 0.25);
}

TEST(Stratum, PlaneKernelTopStratum) {
  const PlaneFrame v = PlaneFrame::coordinate(3, {2});
  const auto u = plane_kernel(v, 2.0);
  const Ball search{Point{}, 0.5};
  const double step = 0.25;
  const auto top = stratum_set(u, 0.01, 0.01, 1, search, step, quad(), fast());
  const auto below = stratum_set(u, 0.01, 0.01, 0, search, step, quad(), fast());
  std::size_t on_plane = 0;
  for (const auto& x : ball_lattice(3, search, step))
    if (v.distance(x) < 1e-12) {
      ++on_plane;
      EXPECT_NE(std::find(top.stratum.begin(), top.stratum.end(), x), top.stratum.end());
      EXPECT_EQ(std::find(below.stratum.begin(), below.stratum.end(), x), below.stratum.end());
      EXPECT_NE(std::find(below.excluded.begin(), below.excluded.end(), x), below.excluded.end());
    }
  EXPECT_EQ(on_plane, 5u);
  for (const auto& x : top.stratum) EXPECT_LE(v.distance(x), step);
  EXPECT_TRUE(below.stratum.empty());
}

TEST(StratumProperty, NestingAndEtaMonotonicity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-0.3, 0.3);
  const auto u = riesz_sum({make_point({coord(rng), coord(rng)}), make_point({0.25, 0.25})}, {1.0, 0.6}, 2.0, 2);
  const Ball search{Point{}, 0.5};
  auto as_set = [](const std::vector<Point>& v) { return std::set<Point>(v.begin(), v.end()); };
  std::vector<std::set<Point>> by_k;
  for (int k = 0; k <= 2; ++k) by_k.push_back(as_set(stratum_set(u, 0.05, 0.125, k, search, 0.125, quad(), fast()).stratum));
  for (int k = 0; k + 1 < static_cast<int>(by_k.size()); ++k)
    for (const auto& x : by_k[k]) EXPECT_TRUE(by_k[k + 1].count(x));
  const auto lo = as_set(stratum_set(u, 0.02, 0.125, 0, search, 0.125, quad(), fast()).stratum);
  for (const auto& x : by_k[0]) EXPECT_TRUE(lo.count(x));
}

TEST(ConeSplitting, PlaneKernelSplits) {
  // h = K_2(dist(., span{e3, e4})) in R^4, V^1 = span{e3}, x2 on e4
  const auto h = plane_kernel(PlaneFrame::coordinate(4, {2, 3}), 2.0);
  const auto rep = cone_splitting_check(h, Point{}, PlaneFrame::coordinate(4, {2}), make_point({0.0, 0.0, 0.0, 0.5}), 1e-3,
                                        quad());
  EXPECT_TRUE(rep.valid_input) << rep.reason;
  EXPECT_TRUE(rep.passed);
  EXPECT_LE(rep.split_defect, 1e-3);
  EXPECT_EQ(rep.plane.dim(), 2);
}

TEST(ConeSplitting, KernelIsNotHomogeneousOffCenter) {
  const auto h = riesz_sum({Point{}}, {1.0}, 3.0, 3);
  const auto rep = cone_splitting_check(h, Point{}, PlaneFrame::zero(3), unit(0), 1e-3, quad());
  EXPECT_FALSE(rep.valid_input);
  EXPECT_FALSE(rep.passed);
  EXPECT_GT(rep.flow_defect_x2, 1e-3);
}

TEST(ConeSplitting, AnisotropicConeInvariantAlongSplitDirection) {
  // h(x) = |x'|^{-1} g(x'/|x'|), x' = (x2, x3), g(w) = 1 + 0.5 w_1^2: translation invariant
  // along e1, so 0-homogeneous at e1/2 and the split direction is e1
  const auto h = ScalarField(3, Ball{Point{}, 2.0}, 3.0, [](const Point& x) {
    const double d = std::hypot(x[1], x[2]);
    if (d == 0.0) return kNegInf;
    const double w1 = x[1] / d;
    return -(1.0 + 0.5 * w1 * w1) / d;
  });
  // oracle: h(x + t e1) = h(x) evaluated directly
  const Point probe = make_point({0.1, 0.3, -0.2});
  EXPECT_DOUBLE_EQ(h(probe + 0.4 * unit(0)), h(probe));
  const auto rep = cone_splitting_check(h, Point{}, PlaneFrame::zero(3), 0.5 * unit(0), 1e-3, quad());
  EXPECT_TRUE(rep.valid_input) << rep.reason;
  EXPECT_TRUE(rep.passed);
  // the same cone is not invariant along e2
  const auto off = cone_splitting_check(h, Point{}, PlaneFrame::zero(3), 0.5 * unit(1), 1e-3, quad());
  EXPECT_FALSE(off.valid_input);
}
