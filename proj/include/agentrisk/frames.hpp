#pragma once

// Moving agent moments into the ego frame. Only the translation touches the
// moments; the rotation is absorbed into the ellipsoid matrix.

#include <cmath>
#include <utility>

#include "agentrisk/distributions.hpp"

namespace agentrisk {

/// Collision set {x : x^T Q x <= 1} with Q symmetric positive definite.
class Ellipsoid {
 public:
  explicit Ellipsoid(Mat2 q) : q_(std::move(q)) {
    detail::require(q_.allFinite(), "ellipsoid matrix must be finite");
    const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
    detail::require(std::abs(q_(0, 1) - q_(1, 0)) <= 1e-12 * scale,
                    "ellipsoid matrix must be symmetric");
    q_(1, 0) = q_(0, 1);
    const Eigen::SelfAdjointEigenSolver<Mat2> eig(q_, Eigen::EigenvaluesOnly);
    detail::require(eig.eigenvalues().minCoeff() > 0.0,
                    "ellipsoid matrix must be positive definite");
  }

  static Ellipsoid identity() { return Ellipsoid(Mat2::Identity()); }

  const Mat2& matrix() const { return q_; }
  double operator()(const Vec2& x) const { return x.dot(q_ * x); }

 private:
  Mat2 q_;
};

struct EgoPose {
  Vec2 position = Vec2::Zero();
  double theta = 0.0;  // radians
};

inline Mat2 rotation(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// Q* = R(theta)^T Q R(theta), so that x^T Q* x = (R x)^T Q (R x).
inline Ellipsoid rotate_form(const Ellipsoid& q, double theta) {
  const Mat2 r = rotation(theta);
  Mat2 out = r.transpose() * q.matrix() * r;
  out(1, 0) = out(0, 1) = 0.5 * (out(0, 1) + out(1, 0));
  return Ellipsoid(out);
}

/// Raw moments of (x - v) up to order n, by the binomial theorem applied
/// to each coordinate. Needs every input moment up to order n.
inline MomentTable translate_moments(const MomentTable& table, const Vec2& v, int n) {
  if (table.max_order() < n) {
    throw ValidationError("translating to order " + std::to_string(n) +
                          " needs moments up to order " + std::to_string(n) + ", table has " +
                          std::to_string(table.max_order()));
  }
  // Powers of -v.
  std::vector<double> px(static_cast<std::size_t>(n) + 1), py(static_cast<std::size_t>(n) + 1);
  px[0] = py[0] = 1.0;
  for (int k = 1; k <= n; ++k) {
    px[k] = px[k - 1] * -v.x();
    py[k] = py[k - 1] * -v.y();
  }
  MomentTable out(n);
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; a + b <= n; ++b) {
      if (a + b == 0) continue;
      double sum = 0.0;
      for (int i = 0; i <= a; ++i) {
        const double ci = detail::binomial(a, i) * px[a - i];
        for (int j = 0; j <= b; ++j) {
          sum += ci * detail::binomial(b, j) * py[b - j] * table(i, j);
        }
      }
      out(a, b) = sum;
    }
  }
  return out;
}

/// Agent moments and collision form in the frame of one planned ego pose.
inline std::pair<MomentTable, Ellipsoid> to_ego_frame(const MomentTable& agent_moments,
                                                      const EgoPose& ego, const Ellipsoid& q) {
  return {translate_moments(agent_moments, ego.position, agent_moments.max_order()),
          rotate_form(q, ego.theta)};
}

/// Gaussian counterpart of to_ego_frame: a translated Gaussian stays Gaussian.
inline std::pair<Gaussian2D, Ellipsoid> to_ego_frame(const Gaussian2D& agent, const EgoPose& ego,
                                                     const Ellipsoid& q) {
  return {Gaussian2D(agent.mean() - ego.position, agent.covariance()),
          rotate_form(q, ego.theta)};
}

}  // namespace agentrisk
