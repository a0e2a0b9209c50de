#pragma once

// Scalar and bivariate distributions used to describe agent predictions:
// Gaussian components, point masses and finite mixtures of them, together
// with their raw moments, characteristic functions and trigonometric
// moments E[cos^m(X) sin^n(X)].

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "agentrisk/error.hpp"
#include "agentrisk/math_util.hpp"

namespace agentrisk {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Complex = std::complex<double>;

/// Highest raw-moment order any table in the library is asked to hold.
/// A degree-6 SOS bound on a quadratic g(x) consumes order-12 position moments.
inline constexpr int kMaxMomentOrder = 12;

/// Gaussian or point-mass scalar random variable. A point mass is a
/// zero-variance component, so deterministic inputs need no special casing.
struct ScalarComponent {
  enum class Kind { gaussian, point_mass };

  Kind kind = Kind::point_mass;
  double mean = 0.0;
  double variance = 0.0;

  static ScalarComponent gaussian(double mean, double variance) {
    detail::require(std::isfinite(mean) && std::isfinite(variance),
                    "gaussian component must have finite parameters");
    detail::require(variance >= 0.0, "gaussian component variance must be >= 0");
    return {variance == 0.0 ? Kind::point_mass : Kind::gaussian, mean, variance};
  }

  static ScalarComponent point_mass(double value) {
    detail::require(std::isfinite(value), "point mass must be finite");
    return {Kind::point_mass, value, 0.0};
  }

  Complex char_fn(double t) const {
    return std::exp(Complex(-0.5 * variance * t * t, mean * t));
  }

  /// E[X^k] for k = 0..max_order.
  std::vector<double> raw_moments(int max_order) const {
    std::vector<double> m(static_cast<std::size_t>(max_order) + 1, 0.0);
    m[0] = 1.0;
    if (max_order >= 1) m[1] = mean;
    for (int k = 2; k <= max_order; ++k) {
      m[k] = mean * m[k - 1] + (k - 1) * variance * m[k - 2];
    }
    return m;
  }
};

/// Finite mixture of scalar components with Multinoulli weights.
class ScalarMixture {
 public:
  ScalarMixture(std::vector<ScalarComponent> components, std::vector<double> weights)
      : components_(std::move(components)), weights_(std::move(weights)) {
    validate();
  }

  // A single component is the degenerate one-mode mixture.
  ScalarMixture(const ScalarComponent& component)  // NOLINT(google-explicit-constructor)
      : components_{component}, weights_{1.0} {}

  const std::vector<ScalarComponent>& components() const { return components_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return components_.size(); }

  Complex char_fn(double t) const {
    Complex sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) sum += weights_[i] * components_[i].char_fn(t);
    return sum;
  }

  std::vector<double> raw_moments(int max_order) const {
    std::vector<double> m(static_cast<std::size_t>(max_order) + 1, 0.0);
    for (std::size_t i = 0; i < size(); ++i) {
      const auto mi = components_[i].raw_moments(max_order);
      for (int k = 0; k <= max_order; ++k) m[k] += weights_[i] * mi[k];
    }
    m[0] = 1.0;
    return m;
  }

 private:
  void validate() const {
    detail::require(!components_.empty(), "mixture needs at least one component");
    detail::require(components_.size() == weights_.size(),
                    "mixture weights and components differ in length");
    double total = 0.0;
    for (double w : weights_) {
      detail::require(std::isfinite(w) && w >= 0.0, "mixture weights must be nonnegative");
      total += w;
    }
    detail::require(std::abs(total - 1.0) <= 1e-12,
                    "mixture weights must sum to 1 (got " + std::to_string(total) + ")");
  }

  std::vector<ScalarComponent> components_;
  std::vector<double> weights_;
};

inline Complex char_fn(const ScalarMixture& dist, double t) { return dist.char_fn(t); }

/// Characteristic function of c + sum of mutually independent parts.
inline Complex char_fn_sum(std::span<const ScalarMixture> parts, double constant, double t) {
  Complex value = std::exp(Complex(0.0, t * constant));
  for (const auto& part : parts) value *= part.char_fn(t);
  return value;
}

/// E[cos^m(X) sin^n(X)] from a characteristic function evaluated at the
/// integers -(m+n)..(m+n). `cf` is any callable int -> Complex.
template <typename CharFn>
double trig_moment_from_cf(CharFn&& cf, int m, int n) {
  detail::require(m >= 0 && n >= 0, "trig moment orders must be nonnegative");
  if (m == 0 && n == 0) return 1.0;
  const int order = m + n;
  // Coefficient of e^{ikX} for k = -order..order, from
  // (e^{iX}+e^{-iX})^m (e^{iX}-e^{-iX})^n / (2^{m+n} i^n).
  std::vector<double> coeff(static_cast<std::size_t>(2 * order + 1), 0.0);
  for (int j = 0; j <= m; ++j) {
    for (int l = 0; l <= n; ++l) {
      const int k = order - 2 * j - 2 * l;
      const double sign = (l % 2 == 0) ? 1.0 : -1.0;
      coeff[k + order] += sign * detail::binomial(m, j) * detail::binomial(n, l);
    }
  }
  Complex sum = 0.0;
  for (int k = -order; k <= order; ++k) {
    const double c = coeff[k + order];
    if (c != 0.0) sum += c * cf(k);
  }
  // 1 / i^n
  static constexpr Complex kInvIPow[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  sum *= kInvIPow[n % 4] / std::ldexp(1.0, order);
  const double scale = std::max(1.0, std::abs(sum.real()));
  if (std::abs(sum.imag()) > 1e-10 * scale) {
    throw NumericalError("trig moment has imaginary residual " + std::to_string(sum.imag()));
  }
  return sum.real();
}

inline double trig_moment(const ScalarMixture& dist, int m, int n) {
  return trig_moment_from_cf([&](int k) { return dist.char_fn(static_cast<double>(k)); }, m,
                             n);
}

inline double mixture_moment(const ScalarMixture& dist, int n) {
  detail::require(n >= 0, "moment order must be nonnegative");
  return dist.raw_moments(n)[n];
}

/// Raw moments of X + Y for independent X, Y given their raw moments.
inline std::vector<double> convolve_moments(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j <= k; ++j) {
      s += detail::binomial(static_cast<int>(k), static_cast<int>(j)) * a[j] * b[k - j];
    }
    out[k] = s;
  }
  return out;
}

/// Raw moments E[x^a y^b] of a bivariate random vector, all a + b <= max_order.
/// Stored as a dense triangle; only raw (non-central) moments are kept.
class MomentTable {
 public:
  MomentTable() : MomentTable(0) {}
  explicit MomentTable(int max_order)
      : max_order_(max_order), values_(index_count(max_order), 0.0) {
    detail::require(max_order >= 0, "moment table order must be nonnegative");
    values_[0] = 1.0;
  }

  int max_order() const { return max_order_; }

  double operator()(int a, int b) const { return values_[checked_index(a, b)]; }
  double& operator()(int a, int b) { return values_[checked_index(a, b)]; }

  Vec2 mean() const {
    detail::require(max_order_ >= 1, "mean requires order-1 moments");
    return {(*this)(1, 0), (*this)(0, 1)};
  }

  Mat2 covariance() const {
    detail::require(max_order_ >= 2, "covariance requires order-2 moments");
    const Vec2 mu = mean();
    Mat2 cov;
    cov(0, 0) = (*this)(2, 0) - mu.x() * mu.x();
    cov(1, 1) = (*this)(0, 2) - mu.y() * mu.y();
    cov(0, 1) = cov(1, 0) = (*this)(1, 1) - mu.x() * mu.y();
    return cov;
  }

  /// Same moments truncated to a lower order.
  MomentTable truncated(int order) const {
    detail::require(order <= max_order_, "cannot truncate a moment table upward");
    MomentTable out(order);
    for (int a = 0; a <= order; ++a)
      for (int b = 0; a + b <= order; ++b) out(a, b) = (*this)(a, b);
    return out;
  }

  /// Checks the invariants every table of real moments satisfies.
  void check_consistency(double tol = 1e-9) const {
    detail::require(values_[0] == 1.0, "zeroth moment must equal 1");
    for (int a = 0; a <= max_order_; ++a) {
      for (int b = 0; a + b <= max_order_; ++b) {
        detail::require(std::isfinite((*this)(a, b)), "moment table holds a non-finite value");
        if (a % 2 == 0 && b % 2 == 0) {
          detail::require((*this)(a, b) >= -tol * std::max(1.0, std::abs((*this)(a, b))),
                          "even moment is negative");
        }
      }
    }
    if (max_order_ >= 2) {
      const Mat2 cov = covariance();
      const double scale = std::max({1.0, (*this)(2, 0), (*this)(0, 2)});
      detail::require(cov(0, 0) >= -tol * scale && cov(1, 1) >= -tol * scale,
                      "second moment below squared mean");
    }
  }

  static std::size_t index_count(int order) {
    return static_cast<std::size_t>((order + 1) * (order + 2) / 2);
  }

 private:
  std::size_t checked_index(int a, int b) const {
    if (a < 0 || b < 0 || a + b > max_order_) {
      throw ValidationError("moment index (" + std::to_string(a) + "," + std::to_string(b) +
                            ") outside table of order " + std::to_string(max_order_));
    }
    const int d = a + b;
    return static_cast<std::size_t>(d * (d + 1) / 2 + b);
  }

  int max_order_;
  std::vector<double> values_;
};

/// Bivariate Gaussian; a zero covariance is a point mass.
class Gaussian2D {
 public:
  Gaussian2D(Vec2 mean, Mat2 covariance) : mean_(std::move(mean)), cov_(std::move(covariance)) {
    detail::require(mean_.allFinite() && cov_.allFinite(), "gaussian parameters must be finite");
    const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    detail::require(std::abs(cov_(0, 1) - cov_(1, 0)) <= 1e-12 * scale,
                    "covariance must be symmetric");
    cov_(1, 0) = cov_(0, 1);
    const Eigen::SelfAdjointEigenSolver<Mat2> eig(cov_, Eigen::EigenvaluesOnly);
    detail::require(eig.eigenvalues().minCoeff() >= -1e-12 * scale,
                    "covariance must be positive semidefinite");
  }

  static Gaussian2D point_mass(const Vec2& at) { return {at, Mat2::Zero()}; }

  const Vec2& mean() const { return mean_; }
  const Mat2& covariance() const { return cov_; }

 private:
  Vec2 mean_;
  Mat2 cov_;
};

/// Exact raw moments of a bivariate Gaussian by Stein's identity:
/// E[x f] = mu_x E[f] + s_xx E[df/dx] + s_xy E[df/dy].
inline MomentTable gaussian2d_raw_moments(const Gaussian2D& g, int max_order) {
  detail::require(max_order >= 0 && max_order <= kMaxMomentOrder,
                  "gaussian moment order must be in [0, " + std::to_string(kMaxMomentOrder) +
                      "]");
  const Vec2& mu = g.mean();
  const Mat2& s = g.covariance();
  MomentTable m(max_order);
  for (int d = 1; d <= max_order; ++d) {
    for (int a = 0; a <= d; ++a) {
      const int b = d - a;
      double value;
      if (a > 0) {
        value = mu.x() * m(a - 1, b);
        if (a >= 2) value += (a - 1) * s(0, 0) * m(a - 2, b);
        if (b >= 1) value += b * s(0, 1) * m(a - 1, b - 1);
      } else {
        value = mu.y() * m(0, b - 1);
        if (b >= 2) value += (b - 1) * s(1, 1) * m(0, b - 2);
      }
      m(a, b) = value;
    }
  }
  return m;
}

/// Finite mixture of bivariate Gaussians.
class Gaussian2DMixture {
 public:
  Gaussian2DMixture(std::vector<Gaussian2D> components, std::vector<double> weights)
      : components_(std::move(components)), weights_(std::move(weights)) {
    detail::require(!components_.empty(), "mixture needs at least one component");
    detail::require(components_.size() == weights_.size(),
                    "mixture weights and components differ in length");
    double total = 0.0;
    for (double w : weights_) {
      detail::require(std::isfinite(w) && w >= 0.0, "mixture weights must be nonnegative");
      total += w;
    }
    detail::require(std::abs(total - 1.0) <= 1e-12,
                    "mixture weights must sum to 1 (got " + std::to_string(total) + ")");
  }

  const std::vector<Gaussian2D>& components() const { return components_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return components_.size(); }

  MomentTable raw_moments(int max_order) const {
    MomentTable out(max_order);
    for (std::size_t i = 0; i < size(); ++i) {
      const MomentTable mi = gaussian2d_raw_moments(components_[i], max_order);
      for (int a = 0; a <= max_order; ++a)
        for (int b = 0; a + b <= max_order; ++b) {
          if (a + b > 0) out(a, b) += weights_[i] * mi(a, b);
        }
    }
    return out;
  }

 private:
  std::vector<Gaussian2D> components_;
  std::vector<double> weights_;
};

inline double mixture_moment(const Gaussian2DMixture& dist, int a, int b) {
  return dist.raw_moments(a + b)(a, b);
}

}  // namespace agentrisk
