#pragma once

// Monte Carlo reference estimates of per-step and trajectory collision risk.

#include <cmath>
#include <cstdint>
#include <vector>

#include "agentrisk/distributions.hpp"
#include "agentrisk/dubins.hpp"
#include "agentrisk/frames.hpp"
#include "agentrisk/random.hpp"

namespace agentrisk {

struct McEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

struct McRiskResult {
  std::vector<McEstimate> per_step;
  McEstimate trajectory;  // union over steps, per sample
};

inline constexpr std::int64_t kMinMcSamples = 1000;

namespace detail {

inline McEstimate make_estimate(std::int64_t hits, std::int64_t n, std::uint64_t seed) {
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n, seed};
}

inline std::size_t pick(double u, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) {
    acc += w[k];
    if (u < acc) return k;
  }
  return w.size() - 1;
}

inline Mat2 sqrt_psd(const Mat2& s) {
  const Eigen::SelfAdjointEigenSolver<Mat2> e(s);
  return e.eigenvectors() * e.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * e.eigenvectors().transpose();
}

inline double sample_scalar(const ScalarMixture& m, double u, double z) {
  const ScalarComponent& c = m.components()[pick(u, m.weights())];
  return c.mean + std::sqrt(c.variance) * z;
}

struct EgoTest {
  Vec2 position;
  Mat2 q;  // rotated form
  bool inside(const Vec2& x) const {
    const Vec2 d = x - position;
    return d.dot(q * d) <= 1.0;
  }
};

inline std::vector<EgoTest> ego_tests(const std::vector<EgoPose>& ego, const Ellipsoid& q) {
  std::vector<EgoTest> out;
  for (const auto& e : ego) out.push_back({e.position, rotate_form(q, e.theta).matrix()});
  return out;
}

inline void check_samples(std::int64_t n) {
  if (n < kMinMcSamples)
    throw ValidationError("Monte Carlo needs at least " + std::to_string(kMinMcSamples) + " samples");
}

}  // namespace detail

/// Per-step mixtures sampled independently at every step, or with one mode
/// per sample held across the horizon when mode_persistence is set.
inline McRiskResult mc_position_risk(const std::vector<Gaussian2DMixture>& steps, const std::vector<EgoPose>& ego,
                                     const Ellipsoid& q, std::int64_t n, std::uint64_t seed,
                                     bool mode_persistence = false) {
  detail::check_samples(n);
  detail::require(!steps.empty(), "prediction horizon is empty");
  detail::require(steps.size() == ego.size(), "prediction and ego trajectory differ in length");
  if (mode_persistence)
    for (const auto& s : steps)
      detail::require(s.size() == steps.front().size(), "persistent modes need the same mode count at every step");
  const std::size_t T = steps.size();
  std::vector<std::vector<Mat2>> roots(T);
  for (std::size_t t = 0; t < T; ++t)
    for (const auto& c : steps[t].components()) roots[t].push_back(detail::sqrt_psd(c.covariance()));
  const auto tests = detail::ego_tests(ego, q);

  std::vector<std::int64_t> hits(T, 0);
  std::int64_t any_hits = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    std::size_t mode = 0;
    if (mode_persistence) {
      PhiloxStream ms(seed, static_cast<std::uint64_t>(i), 0xFFFFFFFFu);
      mode = detail::pick(ms.uniform(), steps.front().weights());
    }
    bool any = false;
    for (std::size_t t = 0; t < T; ++t) {
      PhiloxStream rs(seed, static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(t));
      const double u = rs.uniform();
      const std::size_t k = mode_persistence ? mode : detail::pick(u, steps[t].weights());
      const auto [z0, z1] = rs.normal_pair();
      const Vec2 x = steps[t].components()[k].mean() + roots[t][k] * Vec2(z0, z1);
      if (tests[t].inside(x)) {
        ++hits[t];
        any = true;
      }
    }
    any_hits += any;
  }
  McRiskResult out;
  for (std::size_t t = 0; t < T; ++t) out.per_step.push_back(detail::make_estimate(hits[t], n, seed));
  out.trajectory = detail::make_estimate(any_hits, n, seed);
  return out;
}

/// Particle rollout of the unicycle model; position after step t is tested
/// against ego pose t.
inline McRiskResult mc_control_risk(const ControlPrediction& pred, const std::vector<EgoPose>& ego,
                                    const Ellipsoid& q, std::int64_t n, std::uint64_t seed) {
  detail::check_samples(n);
  pred.validate();
  detail::require(pred.steps() >= 1, "prediction horizon is empty");
  detail::require(static_cast<std::size_t>(pred.steps()) == ego.size(),
                  "prediction and ego trajectory differ in length");
  const std::size_t T = ego.size();
  const auto tests = detail::ego_tests(ego, q);
  std::vector<std::int64_t> hits(T, 0);
  std::int64_t any_hits = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    double x = pred.initial.x, y = pred.initial.y, v = pred.initial.v, th = pred.initial.theta;
    bool any = false;
    for (std::size_t t = 0; t < T; ++t) {
      x += v * std::cos(th);
      y += v * std::sin(th);
      if (tests[t].inside(Vec2(x, y))) {
        ++hits[t];
        any = true;
      }
      PhiloxStream rs(seed, static_cast<std::uint64_t>(i), static_cast<std::uint32_t>(t));
      const double uv = rs.uniform(), ut = rs.uniform();
      const auto [z0, z1] = rs.normal_pair();
      v += detail::sample_scalar(pred.w_v[t], uv, z0);
      th += detail::sample_scalar(pred.w_theta[t], ut, z1);
    }
    any_hits += any;
  }
  McRiskResult out;
  for (std::size_t t = 0; t < T; ++t) out.per_step.push_back(detail::make_estimate(hits[t], n, seed));
  out.trajectory = detail::make_estimate(any_hits, n, seed);
  return out;
}

}  // namespace agentrisk
