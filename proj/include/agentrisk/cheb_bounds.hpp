#pragma once

// Moment-based upper bounds on P(Q(x) <= 1) from the one-tailed Chebyshev
// (Cantelli) inequality, on the quadratic form itself or on a tangent
// polytope around the ellipse.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "agentrisk/distributions.hpp"
#include "agentrisk/frames.hpp"

namespace agentrisk {

struct RiskBound {
  double value = 1.0;
  std::string method;
  int moments_used = 0;
  std::string diagnostics;
};

/// {x : a^T x + b <= 0}
struct HalfSpace {
  Vec2 a;
  double b = 0.0;
};

/// P(g <= 0) <= Var(g) / E[g^2] when E[g] > 0; 1 otherwise.
inline RiskBound cheb_one_tailed(double mean_g, double second_moment_g) {
  detail::require(std::isfinite(mean_g) && std::isfinite(second_moment_g), "moments must be finite");
  const double slack = 1e-12 * std::max(1.0, std::abs(second_moment_g));
  detail::require(second_moment_g >= mean_g * mean_g - slack,
                  "inconsistent moments: E[g^2] < E[g]^2");
  RiskBound r;
  r.method = "chebyshev";
  r.moments_used = 2;
  if (mean_g <= 0.0) {
    r.value = 1.0;
    r.diagnostics = "vacuous: E[g] <= 0";
    return r;
  }
  detail::require(second_moment_g > 0.0, "second moment must be positive");
  const double var = std::max(0.0, second_moment_g - mean_g * mean_g);
  r.value = std::clamp(var / second_moment_g, 0.0, 1.0);
  return r;
}

/// E[x^T Q x] = tr(Q Sigma) + mu^T Q mu.
inline double quad_form_mean(const Ellipsoid& q, const Vec2& mu, const Mat2& sigma) {
  return (q.matrix() * sigma).trace() + mu.dot(q.matrix() * mu);
}

inline double quad_form_mean(const Ellipsoid& q, const MomentTable& m) {
  const Mat2& Q = q.matrix();
  return Q(0, 0) * m(2, 0) + 2.0 * Q(0, 1) * m(1, 1) + Q(1, 1) * m(0, 2);
}

/// E[(x^T Q x)^2] = sum_{ijkl} Q_ij Q_kl E[x_i x_j x_k x_l].
inline double quad_form_second_moment(const Ellipsoid& q, const MomentTable& m) {
  if (m.max_order() < 4) {
    throw ValidationError("second moment of the quadratic form needs order-4 moments, table has " +
                          std::to_string(m.max_order()));
  }
  const Mat2& Q = q.matrix();
  double sum = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const int nx = (i == 0) + (j == 0) + (k == 0) + (l == 0);
          sum += Q(i, j) * Q(k, l) * m(nx, 4 - nx);
        }
  return sum;
}

/// Cantelli on g = Q(x) - 1.
inline RiskBound cheb_bound_quadratic(const Ellipsoid& q, const MomentTable& m) {
  const double eq = quad_form_mean(q, m);
  const double eq2 = quad_form_second_moment(q, m);
  RiskBound r = cheb_one_tailed(eq - 1.0, eq2 - 2.0 * eq + 1.0);
  r.method = "chebyshev-quad";
  r.moments_used = 4;
  return r;
}

/// n_h tangent lines to {x^T Q x = 1} at evenly spaced parameter angles.
inline std::vector<HalfSpace> ellipse_to_halfspaces(const Ellipsoid& q, int n_h) {
  detail::require(n_h >= 3, "need at least 3 half-spaces");
  const Eigen::SelfAdjointEigenSolver<Mat2> eig(q.matrix());
  const Mat2 inv_root =
      eig.eigenvectors() * eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
      eig.eigenvectors().transpose();
  std::vector<HalfSpace> out;
  out.reserve(static_cast<std::size_t>(n_h));
  for (int k = 0; k < n_h; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / n_h;
    const Vec2 p = inv_root * Vec2(std::cos(phi), std::sin(phi));
    out.push_back({q.matrix() * p, -1.0});  // (Qp)^T x <= 1 touches the ellipse at p
  }
  return out;
}

/// Minimum over faces of the Cantelli bound on P(a^T x + b <= 0), each
/// face being a superset of the polytope and hence of the ellipse.
/// Uses g = a^T x + b with E[g] = a^T mu + b and Var(g) = a^T Sigma a.
inline RiskBound cheb_bound_halfspace(const std::vector<HalfSpace>& faces, const Vec2& mu,
                                      const Mat2& sigma) {
  detail::require(!faces.empty(), "no half-spaces given");
  RiskBound best;
  best.value = 1.0;
  for (const auto& h : faces) {
    detail::require(h.a.norm() > 0.0, "half-space normal must be nonzero");
    const double mean = h.a.dot(mu) + h.b;
    const double var = std::max(0.0, h.a.dot(sigma * h.a));
    const RiskBound r = cheb_one_tailed(mean, var + mean * mean);
    best.value = std::min(best.value, r.value);
  }
  best.method = "chebyshev-halfspace";
  best.moments_used = 2;
  best.diagnostics = "faces=" + std::to_string(faces.size());
  return best;
}

inline RiskBound cheb_bound_halfspace(const std::vector<HalfSpace>& faces, const MomentTable& m) {
  return cheb_bound_halfspace(faces, m.mean(), m.covariance());
}

}  // namespace agentrisk
