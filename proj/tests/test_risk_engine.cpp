#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "agentrisk/risk_engine.hpp"
#include "support/oracles.hpp"

using namespace agentrisk;

namespace {

MarginalRisk marginal(double p) { return mix_modes(0, {{1.0, p}}, MethodSpec{Method::imhof}); }

std::vector<MarginalRisk> marginals(std::initializer_list<double> ps) {
  std::vector<MarginalRisk> out;
  for (double p : ps) out.push_back(marginal(p));
  return out;
}

Gaussian2DMixture random_gmm(std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread), w(0.2, 1.0);
  std::vector<Gaussian2D> comps;
  std::vector<double> ws;
  for (int k = 0; k < 3; ++k) {
    comps.emplace_back(Vec2(u(rng), u(rng)), oracle::random_spd(rng, 0.05, 1.5));
    ws.push_back(w(rng));
  }
  const double s = ws[0] + ws[1] + ws[2];
  ws[0] /= s;
  ws[1] /= s;
  ws[2] = 1 - ws[0] - ws[1];
  return {comps, ws};
}

}  // namespace

TEST(ParseMethod, Names) {
  EXPECT_EQ(parse_method("imhof").name(), "imhof");
  EXPECT_EQ(parse_method("sos-d4").sos_degree, 4);
  EXPECT_EQ(parse_method("sos", 6).name(), "sos-d6");
  EXPECT_EQ(parse_method("chebyshev-halfspace").moment_order(), 2);
  EXPECT_EQ(parse_method("chebyshev-quad").moment_order(), 4);
  EXPECT_TRUE(parse_method("chebyshev-quad").is_upper_bound());
  EXPECT_FALSE(parse_method("mc").is_upper_bound());
  EXPECT_THROW(parse_method("sos-d3"), ValidationError);
  EXPECT_THROW(parse_method("sos", 8), ValidationError);
  EXPECT_THROW(parse_method("bogus"), ValidationError);
}

TEST(MarginalRisk, PointMassInside) {
  const Gaussian2DMixture step({Gaussian2D::point_mass(Vec2(0.1, 0.2))}, {1.0});
  for (const char* m : {"imhof", "ltz", "chebyshev-quad", "chebyshev-halfspace", "sos-d2"})
    EXPECT_EQ(marginal_risk(0, step, EgoPose{}, Ellipsoid::identity(), parse_method(m)).mixed, 1.0) << m;
}

TEST(MarginalRisk, WeightedAverage) {
  const auto r = mix_modes(0, {{1.0 / 3, 0.1}, {1.0 / 3, 0.2}, {1.0 / 3, 0.3}}, MethodSpec{Method::ltz});
  EXPECT_NEAR(r.mixed, 0.2, 1e-12);
  EXPECT_FALSE(r.is_upper_bound);
  EXPECT_EQ(r.method, "ltz");
}

TEST(MarginalRisk, MixedEqualsWeightedSum) {
  std::mt19937_64 rng(1);
  const Ellipsoid q(Vec2(0.5, 2.0).asDiagonal());
  for (int i = 0; i < 20; ++i) {
    const auto g = random_gmm(rng, 3);
    const EgoPose pose{Vec2(0.3, -0.2), 0.7};
    for (const char* m : {"imhof", "chebyshev-halfspace", "sos-d4"}) {
      const auto r = marginal_risk(i, g, pose, q, parse_method(m));
      double s = 0;
      for (const auto& pm : r.per_mode) s += pm.weight * pm.value;
      EXPECT_NEAR(r.mixed, s, 1e-12);
      EXPECT_GE(r.mixed, 0.0);
      EXPECT_LE(r.mixed, 1.0);
      EXPECT_EQ(r.t, i);
    }
  }
}

TEST(MarginalRisk, ImhofMatchesSampling) {
  std::mt19937_64 rng(2);
  const Ellipsoid q(Vec2(0.25, 1.0).asDiagonal());
  for (int i = 0; i < 5; ++i) {
    const auto g = random_gmm(rng, 2.5);
    const EgoPose pose{Vec2(0.5, 0.5), 0.3 * i};
    const double exact = marginal_risk(0, g, pose, q, parse_method("imhof"), {1e-10}).mixed;
    const auto mc = mc_position_risk({g}, {pose}, q, 1'000'000, 90 + i);
    EXPECT_LE(std::abs(exact - mc.per_step[0].probability), 3 * mc.per_step[0].std_error);
  }
}

// Rotation: the engine's ego-frame evaluation equals the ellipse probability
// of R(theta)(x - p) under the original form, from the independent quadrature.
TEST(MarginalRisk, EgoFrameMatchesDirectTransform) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-3, 3), u(-2, 2);
  for (int i = 0; i < 20; ++i) {
    const Ellipsoid q(oracle::random_spd(rng, 0.2, 3));
    const Gaussian2D g(Vec2(u(rng), u(rng)), oracle::random_spd(rng, 0.1, 1));
    const EgoPose pose{Vec2(u(rng), u(rng)), ang(rng)};
    const Mat2 r = rotation(pose.theta);
    const double ref = oracle::ellipse_probability(r.transpose() * q.matrix() * r, g.mean() - pose.position,
                                                   g.covariance(), 1.0);
    const auto m = marginal_risk(0, Gaussian2DMixture({g}, {1.0}), pose, q, parse_method("imhof"), {1e-10});
    EXPECT_NEAR(m.mixed, ref, 1e-9);
  }
}

TEST(TrajectoryRisk, Examples) {
  EXPECT_EQ(trajectory_risk(marginals({0, 0, 0})).total, 0.0);
  EXPECT_NEAR(trajectory_risk(marginals({0.5, 0.5})).total, 0.75, 1e-15);
  EXPECT_THROW(trajectory_risk({}), ValidationError);
}

TEST(TrajectoryRisk, ModePersistenceOrdering) {
  std::vector<MarginalRisk> m;
  for (int t = 0; t < 2; ++t) m.push_back(mix_modes(t, {{0.5, 0.0}, {0.5, 0.5}}, MethodSpec{Method::imhof}));
  EXPECT_NEAR(trajectory_risk(m, true).total, 0.375, 1e-15);
  EXPECT_NEAR(trajectory_risk(m, false).total, 0.4375, 1e-15);
}

TEST(TrajectoryRisk, ProductFormProperties) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 0.3);
  for (int i = 0; i < 100; ++i) {
    std::vector<MarginalRisk> m;
    for (int t = 0; t < 10; ++t) m.push_back(marginal(u(rng)));
    const auto r = trajectory_risk(m);
    double survive = 1;
    double mx = 0;
    for (const auto& x : m) {
      survive *= 1 - x.mixed;
      mx = std::max(mx, x.mixed);
    }
    EXPECT_NEAR(r.total, 1 - survive, 1e-12);
    EXPECT_GE(r.total, mx);
    auto shuffled = m;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_NEAR(trajectory_risk(shuffled).total, r.total, 1e-15);
    auto longer = m;
    longer.push_back(marginal(u(rng)));
    EXPECT_GE(trajectory_risk(longer).total, r.total);
  }
}

TEST(TrajectoryRisk, WeightRenormalizationLeavesMixedUnchanged) {
  const std::vector<Gaussian2D> comps{Gaussian2D(Vec2(1, 0), Mat2::Identity()), Gaussian2D(Vec2(0, 2), 0.3 * Mat2::Identity())};
  const double a = marginal_risk(0, Gaussian2DMixture(comps, {0.25, 0.75}), EgoPose{}, Ellipsoid::identity(),
                                 parse_method("imhof")).mixed;
  // same mixture written with a split duplicate component
  const double b = marginal_risk(0, Gaussian2DMixture({comps[0], comps[1], comps[1]}, {0.25, 0.375, 0.375}),
                                 EgoPose{}, Ellipsoid::identity(), parse_method("imhof")).mixed;
  EXPECT_NEAR(a, b, 1e-12);
}

TEST(MultiAgent, Examples) {
  auto with_total = [](double p) { return trajectory_risk(marginals({p})); };
  EXPECT_NEAR(multi_agent_bound({with_total(0.2)}), 0.2, 1e-15);
  EXPECT_EQ(multi_agent_bound({with_total(0.6), with_total(0.6)}), 1.0);
  EXPECT_NEAR(multi_agent_bound({with_total(0.1), with_total(0.05)}), 0.15, 1e-15);
}

TEST(MultiAgent, BoundsJointUnion) {
  // two independent agents with single-step Gaussian predictions
  const Gaussian2D a(Vec2(1.5, 0), 0.5 * Mat2::Identity()), b(Vec2(0, -1.2), 0.3 * Mat2::Identity());
  const Ellipsoid q = Ellipsoid::identity();
  const double pa = oracle::ellipse_probability(q.matrix(), a.mean(), a.covariance(), 1.0);
  const double pb = oracle::ellipse_probability(q.matrix(), b.mean(), b.covariance(), 1.0);
  AgentPrediction A{"a", PositionPrediction{false, {Gaussian2DMixture({a}, {1.0})}}};
  AgentPrediction B{"b", PositionPrediction{false, {Gaussian2DMixture({b}, {1.0})}}};
  const std::vector<EgoPose> ego(1);
  const double bound = multi_agent_bound({assess_agent(A, ego, q, parse_method("imhof")).risk,
                                          assess_agent(B, ego, q, parse_method("imhof")).risk});
  EXPECT_NEAR(bound, pa + pb, 1e-8);
  oracle::GaussSampler sa(a.mean(), a.covariance(), 1), sb(b.mean(), b.covariance(), 2);
  const auto joint = oracle::monte_carlo(1'000'000, [&] { return std::pair{sa(), sb()}; },
                                         [&](const std::pair<Vec2, Vec2>& s) {
                                           return (q(s.first) <= 1 || q(s.second) <= 1) ? 1.0 : 0.0;
                                         });
  EXPECT_GE(bound, joint.mean - 3 * joint.std_error);
  EXPECT_NEAR(joint.mean, 1 - (1 - pa) * (1 - pb), 4 * joint.std_error);
}

TEST(BoundStack, OrderedOnGaussianScenarios) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int i = 0; i < 40; ++i) {
    const Ellipsoid q(oracle::random_spd(rng, 0.3, 3));
    const Gaussian2D g(Vec2(u(rng), u(rng)), oracle::random_spd(rng, 0.05, 1.5));
    const EgoPose pose{};
    const EngineOptions opt{1e-10};
    const double exact = gaussian_mode_risk(g, pose, q, parse_method("imhof"), opt);
    const double s6 = gaussian_mode_risk(g, pose, q, parse_method("sos-d6"), opt);
    const double s4 = gaussian_mode_risk(g, pose, q, parse_method("sos-d4"), opt);
    const double s2 = gaussian_mode_risk(g, pose, q, parse_method("sos-d2"), opt);
    const double cq = gaussian_mode_risk(g, pose, q, parse_method("chebyshev-quad"), opt);
    EXPECT_LE(exact, s6 + 1e-6);
    EXPECT_LE(s6, s4 + 1e-6);
    EXPECT_LE(s4, s2 + 1e-6);
    EXPECT_NEAR(s2, cq, 1e-3);
  }
}

TEST(AssessAgent, ControlForm) {
  ControlPrediction p;
  p.initial = {0, 0, 2, 0};
  std::vector<EgoPose> ego;
  for (int t = 0; t < 10; ++t) {
    p.w_v.emplace_back(ScalarComponent::gaussian(0, 0.05));
    p.w_theta.emplace_back(ScalarComponent::gaussian(0, 0.01));
    ego.push_back({Vec2(2.0 * (t + 1), 1.5), 0});
  }
  const AgentPrediction agent{"car", p};
  const Ellipsoid q(Vec2(0.5, 1.0).asDiagonal());
  const auto hs = assess_agent(agent, ego, q, parse_method("chebyshev-halfspace"));
  const auto cq = assess_agent(agent, ego, q, parse_method("chebyshev-quad"));
  const auto s4 = assess_agent(agent, ego, q, parse_method("sos-d4"));
  const auto mc = assess_agent(agent, ego, q, parse_method("mc"), {1e-8, 12, 200000, 3});
  ASSERT_EQ(hs.risk.marginals.size(), 10u);
  for (int t = 0; t < 10; ++t) {
    const double p_mc = mc.risk.marginals[t].mixed, se = *mc.risk.marginals[t].std_error;
    EXPECT_GE(hs.risk.marginals[t].mixed, p_mc - 3 * se);
    EXPECT_GE(cq.risk.marginals[t].mixed, p_mc - 3 * se);
    EXPECT_GE(s4.risk.marginals[t].mixed, p_mc - 3 * se);
    EXPECT_TRUE(hs.risk.marginals[t].is_upper_bound);
  }
  ASSERT_TRUE(mc.mc_trajectory.has_value());
  EXPECT_THROW(assess_agent(agent, ego, q, parse_method("imhof")), ValidationError);
  EXPECT_THROW(assess_agent(agent, ego, q, parse_method("sos-d6")), ValidationError);
  ego.pop_back();
  EXPECT_THROW(assess_agent(agent, ego, q, parse_method("chebyshev-halfspace")), ValidationError);
}

TEST(AssessAgent, PersistentPositionModes) {
  const Gaussian2DMixture step({Gaussian2D::point_mass(Vec2::Zero()), Gaussian2D::point_mass(Vec2(10, 0))},
                               {0.5, 0.5});
  const AgentPrediction agent{"p", PositionPrediction{true, {step, step}}};
  const std::vector<EgoPose> ego(2);
  EXPECT_NEAR(assess_agent(agent, ego, Ellipsoid::identity(), parse_method("imhof")).risk.total, 0.5, 1e-15);
  const auto mc = assess_agent(agent, ego, Ellipsoid::identity(), parse_method("mc"), {1e-8, 12, 10000, 1});
  EXPECT_NEAR(mc.risk.total, 0.5, 0.02);
  EXPECT_NEAR(mc.mc_trajectory->probability, 0.5, 0.02);
}
