#include <gtest/gtest.h>

#include <cmath>

#include "qstrat/kernels.hpp"

using namespace qstrat;

TEST(RieszKernel, NormalizationPerRegime) {
  EXPECT_DOUBLE_EQ(riesz_kernel(3.0, 2.0), -0.5);
  EXPECT_DOUBLE_EQ(riesz_kernel(4.0, 2.0), -0.25);
  EXPECT_DOUBLE_EQ(riesz_kernel(2.0, std::exp(1.5)), 1.5);
  EXPECT_DOUBLE_EQ(riesz_kernel(1.0, 3.0), 3.0);
  EXPECT_NEAR(riesz_kernel(1.5, 4.0), 2.0, 1e-15);
}

TEST(RieszKernel, StrictlyIncreasing) {
  for (double p : {1.0, 1.3, 2.0, 2.5, 3.0, 4.0}) {
    const RieszKernel k(p);
    double prev = k(0.01);
    for (double t = 0.02; t < 3.0; t += 0.01) {
      const double v = k(t);
      EXPECT_GT(v, prev) << "p=" << p << " t=" << t;
      EXPECT_GT(k.derivative(t), 0.0);
      prev = v;
    }
  }
}

TEST(RieszKernel, DerivativeMatchesFiniteDifference) {
  for (double p : {1.0, 1.5, 2.0, 3.0, 3.7}) {
    const RieszKernel k(p);
    for (double t : {0.1, 0.5, 1.0, 2.0}) {
      const double h = 1e-6 * t;
      EXPECT_NEAR(k.derivative(t), (k(t + h) - k(t - h)) / (2 * h), 1e-6 * std::abs(k.derivative(t)) + 1e-8);
    }
  }
}

TEST(RieszKernel, InverseRoundTrip) {
  for (double p : {1.0, 1.5, 2.0, 3.0, 4.0}) {
    const RieszKernel k(p);
    for (double t : {0.05, 0.3, 1.0, 1.7}) EXPECT_NEAR(k.inverse(k(t)), t, 1e-12);
  }
}

TEST(RieszKernel, RejectsBadInput) {
  EXPECT_THROW(RieszKernel(0.5), Error);
  EXPECT_THROW(riesz_kernel(3.0, 0.0), Error);
  EXPECT_THROW(riesz_kernel(3.0, -1.0), Error);
  try {
    riesz_kernel(3.0, 0.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::domain);
  }
}

TEST(RadialProfile, ValidatesRadii) {
  EXPECT_THROW(RadialProfile({0.5, 0.5}, {1, 2}, ProfileKind::S), Error);
  EXPECT_THROW(RadialProfile({0.0, 0.5}, {1, 2}, ProfileKind::S), Error);
  EXPECT_THROW(RadialProfile({0.1, 0.5}, {1}, ProfileKind::S), Error);
  EXPECT_NO_THROW(RadialProfile({0.1, 0.5}, {1, 2}, ProfileKind::M));
}

TEST(RadialProfile, KpQuotientOfKernelIsOne) {
  for (double p : {1.5, 2.0, 3.0}) {
    const RieszKernel k(p);
    std::vector<double> r{0.1, 0.2, 0.4, 0.8}, v;
    for (double s : r) v.push_back(2.5 * k(s) + 7.0);
    const RadialProfile f(r, v, ProfileKind::S);
    EXPECT_NEAR(kp_quotient(f, 0.1, 0.8, p), 2.5, 1e-12);
    EXPECT_NEAR(kp_quotient(f, 0.2, 0.4, p), 2.5, 1e-12);
    EXPECT_NEAR(kp_convexity_defect(f, p), 0.0, 1e-12);
    // interpolation is exact for affine functions of K_p
    EXPECT_NEAR(f.at(0.3, k), 2.5 * k(0.3) + 7.0, 1e-12);
    EXPECT_THROW(f.at(0.05, k), Error);
    EXPECT_THROW(f.at(0.9, k), Error);
  }
}

TEST(RadialProfile, ConvexityDefectDetectsConcavity) {
  // sqrt(K) with K = t for p = 1 is concave in K
  std::vector<double> r{0.1, 0.4, 0.9}, v;
  for (double s : r) v.push_back(std::sqrt(s));
  const RadialProfile f(r, v, ProfileKind::other);
  EXPECT_GT(kp_convexity_defect(f, 1.0), 0.01);
  const RadialProfile two({0.1, 0.2}, {0, 1}, ProfileKind::other);
  EXPECT_THROW(kp_convexity_defect(two, 1.0), Error);
}
