#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "agentrisk/distributions.hpp"
#include "support/oracles.hpp"

using namespace agentrisk;

namespace {

ScalarMixture plus_minus_one() {
  return ScalarMixture({ScalarComponent::point_mass(-1.0), ScalarComponent::point_mass(1.0)},
                       {0.5, 0.5});
}

}  // namespace

TEST(CharFn, StandardGaussian) {
  const auto g = ScalarComponent::gaussian(0.0, 1.0);
  EXPECT_NEAR(g.char_fn(1.0).real(), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(g.char_fn(1.0).imag(), 0.0, 1e-15);
}

TEST(CharFn, OriginIsOne) {
  const ScalarMixture m({ScalarComponent::gaussian(1.5, 2.0), ScalarComponent::point_mass(-3.0)},
                        {0.25, 0.75});
  EXPECT_EQ(char_fn(m, 0.0), Complex(1.0, 0.0));
}

TEST(CharFn, PointMassMixture) {
  const auto v = char_fn(plus_minus_one(), std::numbers::pi);
  EXPECT_NEAR(v.real(), -1.0, 1e-15);
  EXPECT_NEAR(v.imag(), 0.0, 1e-15);
}

TEST(CharFn, SumOfIndependents) {
  const std::vector<ScalarMixture> two{ScalarComponent::gaussian(0, 1), ScalarComponent::gaussian(0, 1)};
  EXPECT_NEAR(std::abs(char_fn_sum(two, 0.0, 1.0) - std::exp(-1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(char_fn_sum({}, 2.0, 1.0) - std::exp(Complex(0, 2))), 0.0, 1e-15);
  const std::vector<ScalarMixture> one{ScalarComponent::point_mass(1.0)};
  EXPECT_NEAR(std::abs(char_fn_sum(one, 1.0, 2.0) - std::exp(Complex(0, 4))), 0.0, 1e-15);
}

TEST(CharFn, BoundedAndHermitianOnGrid) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3), v(0, 4), w(0.05, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ScalarComponent> comps;
    std::vector<double> weights;
    double total = 0;
    for (int k = 0; k < 3; ++k) {
      comps.push_back(k == 2 ? ScalarComponent::point_mass(u(rng)) : ScalarComponent::gaussian(u(rng), v(rng)));
      weights.push_back(w(rng));
      total += weights.back();
    }
    for (auto& x : weights) x /= total;
    weights.back() = 1.0 - weights[0] - weights[1];
    const ScalarMixture m(comps, weights);
    for (double t = -10; t <= 10; t += 0.25) {
      const Complex a = m.char_fn(t), b = m.char_fn(-t);
      EXPECT_LE(std::abs(a), 1.0 + 1e-12);
      EXPECT_NEAR(a.real(), b.real(), 1e-15);
      EXPECT_NEAR(a.imag(), -b.imag(), 1e-15);
    }
  }
}

TEST(TrigMoment, GaussianClosedForms) {
  for (double s2 : {0.1, 0.5, 1.0, 3.0}) {
    const ScalarMixture g = ScalarComponent::gaussian(0.0, s2);
    EXPECT_NEAR(trig_moment(g, 1, 0), std::exp(-s2 / 2), 1e-14);
    EXPECT_NEAR(trig_moment(g, 0, 1), 0.0, 1e-14);
    EXPECT_NEAR(trig_moment(g, 2, 0), (1 + std::exp(-2 * s2)) / 2, 1e-14);
  }
}

TEST(TrigMoment, MatchesQuadratureAgainstDensity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mu(-2, 2), sd(0.05, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const double m = mu(rng), s = sd(rng);
    const ScalarMixture g = ScalarComponent::gaussian(m, s * s);
    for (int p = 0; p <= 6; ++p) {
      for (int q = 0; p + q <= 6; ++q) {
        if (p + q == 0) continue;
        auto f = [&](double z) {
          const double x = m + s * z;
          return std::pow(std::cos(x), p) * std::pow(std::sin(x), q) * std::exp(-0.5 * z * z) /
                 std::sqrt(2 * std::numbers::pi);
        };
        const double ref =
            boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -12.0, 12.0, 25, 1e-14);
        EXPECT_NEAR(trig_moment(g, p, q), ref, 1e-10) << "m=" << p << " n=" << q;
      }
    }
  }
}

TEST(MixtureMoment, ScalarExamples) {
  EXPECT_DOUBLE_EQ(mixture_moment(plus_minus_one(), 2), 1.0);
  EXPECT_DOUBLE_EQ(mixture_moment(ScalarMixture(ScalarComponent::gaussian(1.0, 0.0)), 3), 1.0);
  const ScalarMixture m({ScalarComponent::gaussian(0, 1), ScalarComponent::gaussian(2, 1)}, {0.3, 0.7});
  EXPECT_NEAR(mixture_moment(m, 1), 1.4, 1e-15);
}

TEST(MixtureMoment, RejectsBadWeights) {
  EXPECT_THROW(ScalarMixture({ScalarComponent::gaussian(0, 1)}, {0.9}), ValidationError);
  EXPECT_THROW(ScalarMixture({}, {}), ValidationError);
  EXPECT_THROW(ScalarComponent::gaussian(0, -1), ValidationError);
}

TEST(MixtureMoment, LinearInWeights) {
  const Gaussian2D a(Vec2(1, -1), (Mat2() << 2, 0.3, 0.3, 1).finished());
  const Gaussian2D b(Vec2(-2, 0.5), (Mat2() << 0.5, -0.1, -0.1, 0.7).finished());
  const Gaussian2DMixture mix({a, b}, {0.25, 0.75});
  const MomentTable ma = gaussian2d_raw_moments(a, 6), mb = gaussian2d_raw_moments(b, 6);
  const MomentTable mm = mix.raw_moments(6);
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; i + j <= 6; ++j) EXPECT_EQ(mm(i, j), 0.25 * ma(i, j) + 0.75 * mb(i, j));
}

TEST(GaussianMoments, StandardNormal) {
  const auto m = gaussian2d_raw_moments(Gaussian2D(Vec2::Zero(), Mat2::Identity()), 4);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_NEAR(m(2, 0), 1.0, 1e-15);
  EXPECT_NEAR(m(4, 0), 3.0, 1e-15);
  EXPECT_NEAR(m(2, 2), 1.0, 1e-15);
  const auto s = gaussian2d_raw_moments(Gaussian2D(Vec2(1, 0), Mat2::Identity()), 2);
  EXPECT_NEAR(s(2, 0), 2.0, 1e-15);
}

TEST(GaussianMoments, MatchIsserlisOracle) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec2 mu(u(rng), u(rng));
    const Mat2 s = oracle::random_spd(rng, 0.01, 4.0);
    const auto m = gaussian2d_raw_moments(Gaussian2D(mu, s), kMaxMomentOrder);
    m.check_consistency();
    for (int a = 0; a <= kMaxMomentOrder; ++a) {
      for (int b = 0; a + b <= kMaxMomentOrder; ++b) {
        const double ref = oracle::gaussian_raw_moment(a, b, mu, s);
        // relative to the natural scale of the moment, since signed sums can cancel
        const double scale = oracle::gaussian_raw_moment(a + a % 2, b + b % 2,
                                                         mu.cwiseAbs(), s.cwiseAbs());
        EXPECT_NEAR(m(a, b), ref, 1e-9 * std::max(1.0, scale)) << a << "," << b;
      }
    }
  }
}

TEST(GaussianMoments, OrderCapIsEnforced) {
  const Gaussian2D g(Vec2::Zero(), Mat2::Identity());
  EXPECT_THROW(gaussian2d_raw_moments(g, kMaxMomentOrder + 1), ValidationError);
  const auto m = gaussian2d_raw_moments(g, 3);
  EXPECT_THROW(m(2, 2), ValidationError);
}

TEST(Gaussian2D, Validation) {
  EXPECT_THROW(Gaussian2D(Vec2::Zero(), (Mat2() << 1, 0.5, 0.4, 1).finished()), ValidationError);
  EXPECT_THROW(Gaussian2D(Vec2::Zero(), (Mat2() << 1, 2, 2, 1).finished()), ValidationError);
  EXPECT_NO_THROW(Gaussian2D::point_mass(Vec2(1, 2)));
}
