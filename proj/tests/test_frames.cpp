#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "agentrisk/frames.hpp"
#include "agentrisk/qfmvg.hpp"
#include "support/oracles.hpp"

using namespace agentrisk;

TEST(RotateForm, IsotropicUnchanged) {
  const auto r = rotate_form(Ellipsoid::identity(), 0.7);
  EXPECT_NEAR((r.matrix() - Mat2::Identity()).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(RotateForm, AxisSwapAndDiagonal) {
  const Ellipsoid q(Vec2(4, 1).asDiagonal());
  const auto a = rotate_form(q, std::numbers::pi / 2).matrix();
  EXPECT_NEAR(a(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(a(1, 1), 4.0, 1e-14);
  EXPECT_NEAR(a(0, 1), 0.0, 1e-14);
  // direct product R^T Q R at 45 degrees
  const double c = std::cos(std::numbers::pi / 4);
  Mat2 r;
  r << c, -c, c, c;
  const Mat2 ref = r.transpose() * q.matrix() * r;
  const auto b = rotate_form(q, std::numbers::pi / 4).matrix();
  EXPECT_NEAR((b - ref).cwiseAbs().maxCoeff(), 0.0, 1e-14);
  EXPECT_NEAR(b(0, 0), 2.5, 1e-14);
  EXPECT_NEAR(b(0, 1), -1.5, 1e-14);
}

TEST(RotateForm, AbsorptionIdentity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5), t(-10, 10);
  for (int i = 0; i < 100; ++i) {
    const Ellipsoid q(oracle::random_spd(rng, 0.1, 5));
    const double theta = t(rng);
    const Vec2 x(u(rng), u(rng));
    const Vec2 rx = rotation(theta) * x;
    EXPECT_NEAR(rotate_form(q, theta)(x), q(rx), 1e-12 * std::max(1.0, q(rx)));
  }
}

TEST(TranslateMoments, PointMassAtOffset) {
  const auto m = gaussian2d_raw_moments(Gaussian2D::point_mass(Vec2(3, 4)), 4);
  const auto t = translate_moments(m, Vec2(3, 4), 4);
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b) EXPECT_NEAR(t(a, b), a + b == 0 ? 1.0 : 0.0, 1e-12);
}

TEST(TranslateMoments, ZeroShiftIsIdentity) {
  const auto m = gaussian2d_raw_moments(Gaussian2D(Vec2(1, -2), (Mat2() << 2, .5, .5, 1).finished()), 6);
  const auto t = translate_moments(m, Vec2::Zero(), 6);
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; a + b <= 6; ++b) EXPECT_EQ(t(a, b), m(a, b));
}

TEST(TranslateMoments, CentersGaussian) {
  const auto m = gaussian2d_raw_moments(Gaussian2D(Vec2(1, 0), Mat2::Identity()), 2);
  const auto t = translate_moments(m, Vec2(1, 0), 2);
  EXPECT_NEAR(t(1, 0), 0, 1e-15);
  EXPECT_NEAR(t(0, 1), 0, 1e-15);
  EXPECT_NEAR(t(2, 0), 1, 1e-15);
  EXPECT_NEAR(t(0, 2), 1, 1e-15);
  EXPECT_NEAR(t(1, 1), 0, 1e-15);
}

TEST(TranslateMoments, MatchesShiftedGaussianExactly) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int i = 0; i < 20; ++i) {
    const Vec2 mu(u(rng), u(rng)), v(u(rng), u(rng));
    const Mat2 s = oracle::random_spd(rng, 0.05, 3);
    const auto t = translate_moments(gaussian2d_raw_moments(Gaussian2D(mu, s), 8), v, 8);
    for (int a = 0; a <= 8; ++a)
      for (int b = 0; a + b <= 8; ++b) {
        const double ref = oracle::gaussian_raw_moment(a, b, mu - v, s);
        const double scale = oracle::gaussian_raw_moment(a + a % 2, b + b % 2,
                                                         mu.cwiseAbs() + v.cwiseAbs(), s.cwiseAbs());
        EXPECT_NEAR(t(a, b), ref, 1e-10 * std::max(1.0, scale));
      }
  }
}

TEST(TranslateMoments, SampleMomentsOfShiftedSamples) {
  // moments of samples, translated == moments of translated samples (exact up to rounding)
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  std::vector<Vec2> pts(2000);
  for (auto& p : pts) p = Vec2(1 + n(rng), -2 + 0.5 * n(rng));
  const Vec2 v(0.7, -1.3);
  MomentTable raw(4), shifted(4);
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b) {
      double s = 0, s2 = 0;
      for (const auto& p : pts) {
        s += std::pow(p.x(), a) * std::pow(p.y(), b);
        s2 += std::pow(p.x() - v.x(), a) * std::pow(p.y() - v.y(), b);
      }
      raw(a, b) = s / pts.size();
      shifted(a, b) = s2 / pts.size();
    }
  raw(0, 0) = shifted(0, 0) = 1.0;
  const auto t = translate_moments(raw, v, 4);
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b) EXPECT_NEAR(t(a, b), shifted(a, b), 1e-9);
}

TEST(TranslateMoments, InsufficientOrderAlwaysErrors) {
  for (int n = 1; n <= kMaxMomentOrder; ++n) {
    const auto m = gaussian2d_raw_moments(Gaussian2D(Vec2(1, 1), Mat2::Identity()), n - 1);
    EXPECT_THROW(translate_moments(m, Vec2(1, 0), n), ValidationError);
  }
}

TEST(ToEgoFrame, IdentityPose) {
  const auto m = gaussian2d_raw_moments(Gaussian2D(Vec2(2, 1), Mat2::Identity()), 4);
  const Ellipsoid q(Vec2(4, 1).asDiagonal());
  const auto [t, qs] = to_ego_frame(m, EgoPose{}, q);
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b) EXPECT_EQ(t(a, b), m(a, b));
  EXPECT_NEAR((qs.matrix() - q.matrix()).norm(), 0, 1e-15);
}

TEST(ToEgoFrame, PointMassAtEgo) {
  const EgoPose ego{Vec2(5, -3), 1.1};
  const auto m = gaussian2d_raw_moments(Gaussian2D::point_mass(ego.position), 2);
  const auto [t, qs] = to_ego_frame(m, ego, Ellipsoid::identity());
  EXPECT_NEAR(t.mean().norm(), 0.0, 1e-14);
}

TEST(ToEgoFrame, CdfInEgoFrameMatchesMonteCarlo) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-2, 2), th(-3, 3);
  for (int trial = 0; trial < 3; ++trial) {
    const Vec2 mu(u(rng), u(rng));
    const Mat2 s = oracle::random_spd(rng, 0.2, 2.0);
    const Ellipsoid q(oracle::random_spd(rng, 0.3, 2.0));
    const EgoPose ego{Vec2(u(rng), u(rng)), th(rng)};
    const auto [g, qs] = to_ego_frame(Gaussian2D(mu, s), ego, q);
    const double p = imhof_cdf(spectral_reduce(qs, g.mean(), g.covariance(), 1.0), 1e-10).probability;
    oracle::GaussSampler sampler(mu, s, 1000 + trial);
    const Mat2 r = rotation(ego.theta);
    const auto mc = oracle::monte_carlo(1'000'000, sampler, [&](const Vec2& x) {
      return q(r * (x - ego.position)) <= 1.0 ? 1.0 : 0.0;
    });
    EXPECT_LE(std::abs(p - mc.mean), 3.0 * mc.std_error + 1e-12) << p << " vs " << mc.mean;
  }
}
