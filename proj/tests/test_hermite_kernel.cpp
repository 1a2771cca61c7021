#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hmx/far_sampler.hpp"
#include "hmx/hermite_kernel.hpp"
#include "hmx/rng.hpp"
#include "oracle/brute_force.hpp"

using namespace hmx;

namespace {

Point random_point(Rng& rng, int d, double r) {
  Point p(static_cast<std::size_t>(d));
  for (auto& v : p) v = rng.uniform(-r, r);
  return p;
}

Box random_box(Rng& rng, int d) {
  Box b;
  b.side = rng.log_uniform(0.01, 4.0);
  b.lo = random_point(rng, d, 6.0);
  return b;
}

}  // namespace

TEST(HermiteKernel, AlphaValues) {
  EXPECT_NEAR(alpha(1.0), (std::sqrt(2.0) - 1.0) / 2.0, 1e-16);
  EXPECT_NEAR(alpha(1.0), 0.2071067812, 1e-10);
  // small t: alpha ~ t/4, no cancellation
  EXPECT_NEAR(alpha(1e-10) / 2.5e-11, 1.0, 1e-12);
  for (double t : {1e-6, 0.1, 1.0, 10.0, 1e6}) EXPECT_NEAR(alpha(t), oracle::alpha(t), 1e-15 * std::max(1.0, alpha(t)));
  EXPECT_THROW(alpha(0.0), DomainError);
  EXPECT_THROW(alpha(-1.0), DomainError);
}

TEST(HermiteKernel, LogKernelMatchesDirectFormula) {
  const double x[] = {0.5}, y[] = {2.0};
  EXPECT_NEAR(log_hermite_kernel(x, y, 1.0), -2.92414, 1e-5);
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const int d = 1 + i % 3;
    const Point a = random_point(rng, d, 3.0), b = random_point(rng, d, 3.0);
    const double t = rng.log_uniform(0.05, 20.0);
    EXPECT_NEAR(log_hermite_kernel(a, b, t), std::log(oracle::hermite(a, b, t)), 1e-12 * (1 + std::abs(log_hermite_kernel(a, b, t))));
    EXPECT_LE(log_hermite_kernel(a, b, t), log_heat_kernel(a, b, t));
  }
}

TEST(HermiteKernel, UnrescaledKernelIsKAtSinh) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Point a = random_point(rng, 2, 3.0), b = random_point(rng, 2, 3.0);
    const double s = rng.log_uniform(0.01, 5.0);
    EXPECT_NEAR(log_unrescaled_kernel(a, b, s), log_hermite_kernel(a, b, std::sinh(2 * s)),
                1e-11 * (1 + std::abs(log_unrescaled_kernel(a, b, s))));
  }
}

TEST(HermiteKernel, SemigroupAndGroundState) {
  using boost::math::quadrature::gauss_kronrod;
  auto k = [](double x, double y, double s) {
    const double xs[] = {x}, ys[] = {y};
    return std::exp(log_unrescaled_kernel(xs, ys, s));
  };
  for (double s : {0.1, 0.7})
    for (double t : {0.25, 2.0})
      for (double x : {-1.0, 0.4}) {
        const double y = 1.3;
        const double got = gauss_kronrod<double, 61>::integrate([&](double z) { return k(x, z, s) * k(z, y, t); },
                                                               -20.0, 20.0, 15, 1e-13);
        EXPECT_NEAR(got / k(x, y, s + t), 1.0, 1e-9);
        const double gs =
            gauss_kronrod<double, 61>::integrate([&](double z) { return k(x, z, s) * std::exp(-z * z / 2); }, -20.0,
                                                 20.0, 15, 1e-13);
        EXPECT_NEAR(gs / (std::exp(-s) * std::exp(-x * x / 2)), 1.0, 1e-9);
      }
}

TEST(HermiteKernel, SlopeSignMatchesFiniteDifference) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Point a = random_point(rng, 2, 5.0), b = random_point(rng, 2, 5.0);
    const double t = rng.log_uniform(0.01, 50.0);
    const double h = 1e-6 * t;
    const double fd = log_hermite_kernel(a, b, t + h) - log_hermite_kernel(a, b, t - h);
    const double g = kernel_time_slope(a, b, t);
    if (std::abs(fd) > 1e-7 && std::abs(g) > 1e-6) {
      EXPECT_EQ(derivative_sign(a, b, t), fd > 0 ? 1 : -1);
    }
  }
}

TEST(HermiteKernel, RatiosMatchDifferences) {
  Rng rng(6);
  for (int i = 0; i < 300; ++i) {
    const Point a = random_point(rng, 2, 4.0), b = random_point(rng, 2, 4.0);
    const Point c = random_point(rng, 2, 4.0), e = random_point(rng, 2, 4.0);
    const double t1 = rng.log_uniform(0.1, 10.0), t2 = rng.log_uniform(0.1, 10.0);
    EXPECT_NEAR(log_kernel_time_ratio(a, b, t1, t2), log_hermite_kernel(a, b, t1) - log_hermite_kernel(a, b, t2), 1e-9);
    EXPECT_NEAR(log_kernel_point_ratio(a, b, c, e, t1), log_hermite_kernel(a, b, t1) - log_hermite_kernel(c, e, t1),
                1e-9);
  }
}

TEST(HermiteKernel, LogSumExpAgreesWithNaiveSum) {
  LogSumExp acc;
  double naive = 0;
  for (double v : {-3.0, 1.0, 0.5, -700.0, 2.0}) {
    acc.add(v);
    naive += std::exp(v);
  }
  EXPECT_NEAR(acc.value(), std::log(naive), 1e-14);
  LogSumExp tiny;
  tiny.add(-1e6);
  tiny.add(-1e6);
  EXPECT_NEAR(tiny.value(), -1e6 + std::log(2.0), 1e-9);
  EXPECT_EQ(LogSumExp{}.value(), -std::numeric_limits<double>::infinity());
}

TEST(TMax, GoldenValue) {
  const double x[] = {0.5}, y[] = {1e6};
  const TMaxResult r = t_max(x, y);
  EXPECT_NEAR(r.t_m, 618033.99, 0.01);
  EXPECT_NEAR(r.t_m / oracle::t_max({0.5}, {1e6}), 1.0, 1e-11);
  EXPECT_TRUE(r.analytic_bracket);
}

TEST(TMax, MatchesToms748OnRandomPairs) {
  Rng rng(8);
  for (int i = 0; i < 400; ++i) {
    const int d = 1 + i % 2;
    const Point a = random_point(rng, d, 10.0), b = random_point(rng, d, 10.0);
    const double ref = oracle::t_max(a, b);
    if (ref < 0) {
      EXPECT_THROW(t_max(a, b), NoInteriorMax);
      continue;
    }
    const TMaxResult r = t_max(a, b);
    EXPECT_NEAR(r.t_m / ref, 1.0, 1e-10);
    EXPECT_GT(kernel_time_slope(a, b, r.bracket.lo), 0.0);
    EXPECT_LE(kernel_time_slope(a, b, r.bracket.hi), 0.0);
    EXPECT_LE(r.t_m, squared_distance(a, b) / d * (1 + 1e-12));
  }
}

TEST(TMax, EqualPointsHaveNoInteriorMaximum) {
  const double x[] = {1.0, 2.0};
  EXPECT_THROW(t_max(x, x), NoInteriorMax);
}

TEST(TMax, FarPairLemmas) {
  Rng rng(9);
  for (int i = 0; i < 400; ++i) {
    const int d = 1 + i % 2;
    const int j = i % 4;
    const FarPair fp = sample_far_pair(rng, d, j);
    EXPECT_TRUE(outside_q0(d, fp.r.layer, fp.r_prime.layer));
    EXPECT_TRUE(fp.r.box().contains(fp.x));
    EXPECT_TRUE(fp.r_prime.box().contains(fp.y));
    const TMaxResult r = t_max(fp.x, fp.y, CubePair{fp.r, fp.r_prime});
    EXPECT_LE(t_max_lower_bound(fp.x, fp.y, j), r.t_m);
    const double m = *r.taylor_factor;
    EXPECT_GE(m, 2.0);
    EXPECT_LE(m, r.t_m / (16.0 * d * d));
    const double s = squared_norm(fp.x) + squared_norm(fp.y);
    EXPECT_NEAR(m, 8 * r.t_m * std::sqrt(std::ldexp(1.0, fp.r.layer + fp.r_prime.layer) / s), 1e-9 * m);
  }
}

TEST(KernelExtremum, MatchesActiveSetEnumeration) {
  Rng rng(10);
  for (int i = 0; i < 600; ++i) {
    const int d = 1 + i % 2;
    const Box a = random_box(rng, d), b = random_box(rng, d);
    const double t = rng.log_uniform(0.01, 100.0);
    const double sup = kernel_extremum(a, b, t, Extremum::sup);
    const double inf = kernel_extremum(a, b, t, Extremum::inf);
    EXPECT_NEAR(sup, oracle::log_kernel_sup(a, b, t), 1e-10 * (1 + std::abs(sup)));
    EXPECT_NEAR(inf, oracle::log_kernel_inf(a, b, t), 1e-10 * (1 + std::abs(inf)));
    // sampled interior points lie between the two
    for (int s = 0; s < 20; ++s) {
      Point x(a.lo), y(b.lo);
      for (int k = 0; k < d; ++k) {
        x[k] += a.side * rng.uniform();
        y[k] += b.side * rng.uniform();
      }
      const double v = log_hermite_kernel(x, y, t);
      EXPECT_LE(v, sup + 1e-10 * (1 + std::abs(sup)));
      EXPECT_GE(v, inf - 1e-10 * (1 + std::abs(inf)));
    }
    const KernelExtremum at = kernel_extremum_points(a, b, t, Extremum::sup);
    EXPECT_NEAR(log_hermite_kernel(at.x, at.y, t), sup, 1e-10 * (1 + std::abs(sup)));
  }
}
