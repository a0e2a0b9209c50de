#pragma once

// CDF of x^T Q x for Gaussian x. Two routes: Imhof's inversion of the
// characteristic function (with an error bound) and the Liu-Tang-Zhang
// noncentral chi-square surrogate.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "agentrisk/distributions.hpp"
#include "agentrisk/frames.hpp"
#include "agentrisk/special.hpp"

namespace agentrisk {

/// P(x^T Q x <= q) == P(sum_r lambda_r chi2_1(delta2_r) <= threshold).
struct SpectralForm {
  std::vector<double> lambda;  // descending
  std::vector<double> delta2;
  double threshold = 0.0;
};

enum class CdfMethod { imhof, ltz, point_mass };

inline const char* to_string(CdfMethod m) {
  switch (m) {
    case CdfMethod::imhof: return "imhof";
    case CdfMethod::ltz: return "ltz";
    case CdfMethod::point_mass: return "point_mass";
  }
  return "?";
}

struct CdfResult {
  double probability = 0.0;
  std::optional<double> error_bound;  // Imhof only
  CdfMethod method = CdfMethod::imhof;
  std::string diagnostics;
};

inline SpectralForm spectral_reduce(const Ellipsoid& q, const Vec2& mu, const Mat2& sigma,
                                    double threshold) {
  detail::require(sigma.allFinite() && mu.allFinite(), "mean and covariance must be finite");
  detail::require(std::abs(sigma(0, 1) - sigma(1, 0)) <= 1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff()),
                  "covariance must be symmetric");
  Mat2 s = sigma;
  s(1, 0) = s(0, 1);
  const Eigen::SelfAdjointEigenSolver<Mat2> se(s);
  detail::require(se.eigenvalues().minCoeff() >= -1e-9, "covariance must be positive semidefinite");
  const Vec2 sq = se.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Mat2 root = se.eigenvectors() * sq.asDiagonal() * se.eigenvectors().transpose();

  Mat2 a = root * q.matrix() * root;
  a(1, 0) = a(0, 1);
  const Eigen::SelfAdjointEigenSolver<Mat2> ae(a);
  const Vec2 b = ae.eigenvectors().transpose() * (root * (q.matrix() * mu));

  // residual of mu outside the range of Sigma is deterministic
  double offset = mu.dot(q.matrix() * mu);
  const double lmax = std::max(ae.eigenvalues().maxCoeff(), 0.0);
  SpectralForm form;
  for (int r = 1; r >= 0; --r) {  // Eigen sorts ascending
    double l = ae.eigenvalues()(r);
    double d2 = 0.0;
    if (l > 1e-14 * lmax && l > 0.0) {
      d2 = (b(r) / l) * (b(r) / l);
      offset -= b(r) * b(r) / l;
    } else {
      l = 0.0;
    }
    form.lambda.push_back(l);
    form.delta2.push_back(d2);
  }
  form.threshold = threshold - offset;
  return form;
}

namespace detail {

struct ImhofIntegrand {
  std::vector<double> lambda;  // positive entries only
  std::vector<double> delta2;
  double x = 0.0;

  double theta(double u) const {
    double t = 0.0;
    for (std::size_t r = 0; r < lambda.size(); ++r) {
      const double lu = lambda[r] * u;
      t += std::atan(lu) + delta2[r] * lu / (1.0 + lu * lu);
    }
    return 0.5 * t - 0.5 * x * u;
  }
  double log_rho(double u) const {
    double s = 0.0;
    for (std::size_t r = 0; r < lambda.size(); ++r) {
      const double w = lambda[r] * lambda[r] * u * u;
      s += 0.25 * std::log1p(w) + 0.5 * delta2[r] * w / (1.0 + w);
    }
    return s;
  }
  double operator()(double u) const {
    if (u <= 0.0) {
      // limit u -> 0 of sin(theta)/(u rho) is theta'(0)
      double t = 0.0;
      for (std::size_t r = 0; r < lambda.size(); ++r) t += lambda[r] * (1.0 + delta2[r]);
      return 0.5 * t - 0.5 * x;
    }
    return std::sin(theta(u)) * std::exp(-log_rho(u)) / u;
  }

  // Imhof's bound on the neglected tail of the integral beyond U.
  double imhof_tail(double u) const {
    const double k = 0.5 * static_cast<double>(lambda.size());
    double log_t = std::log(k) + k * std::log(u);
    for (std::size_t r = 0; r < lambda.size(); ++r) {
      const double w = lambda[r] * lambda[r] * u * u;
      log_t += 0.5 * std::log(lambda[r]) + 0.5 * delta2[r] * w / (1.0 + w);
    }
    return std::exp(-log_t);
  }

  // Two integrations by parts of the tail: returns {correction, remainder bound}.
  std::pair<double, double> tail_expansion(double u) const {
    double dtheta = -0.5 * x, ddtheta = 0.0, dlog_rho = 0.0;
    for (std::size_t r = 0; r < lambda.size(); ++r) {
      const double l = lambda[r];
      const double w = l * l * u * u;
      const double opw = 1.0 + w;
      dtheta += 0.5 * (l / opw + delta2[r] * l * (1.0 - w) / (opw * opw));
      ddtheta += 0.5 * (-2.0 * l * l * l * u / (opw * opw) +
                        delta2[r] * l * (w - 3.0) / (opw * opw * opw) * 2.0 * l * l * u);
      dlog_rho += 0.5 * l * l * u / opw + delta2[r] * l * l * u / (opw * opw);
    }
    const double h = std::exp(-log_rho(u)) / u;
    const double dh = -h * (1.0 / u + dlog_rho);
    const double phi1 = h / dtheta;
    const double dphi1 = dh / dtheta - h * ddtheta / (dtheta * dtheta);
    const double phi2 = dphi1 / dtheta;
    const double th = theta(u);
    return {std::cos(th) * phi1 - std::sin(th) * phi2, 2.0 * std::abs(phi2)};
  }

  // Where the asymptotic expansion is trusted: every lambda*U beyond the
  // inflection of the noncentral terms and the phase speed close to -x/2.
  bool tail_regime(double u) const {
    double eps = 0.0;
    for (std::size_t r = 0; r < lambda.size(); ++r) {
      if (lambda[r] * u < 2.0) return false;
      eps += 0.5 * (1.0 + delta2[r]) / (lambda[r] * u * u);
    }
    return eps <= 0.25 * x;
  }
};

}  // namespace detail

inline CdfResult imhof_cdf(const SpectralForm& form, double tol = 1e-10) {
  detail::require(tol > 0.0 && tol <= 0.1, "imhof tolerance must lie in (0, 0.1]");
  detail::require(form.lambda.size() == form.delta2.size(), "spectral form size mismatch");
  CdfResult res;
  res.method = CdfMethod::imhof;
  res.error_bound = 0.0;

  detail::ImhofIntegrand f;
  f.x = form.threshold;
  for (std::size_t r = 0; r < form.lambda.size(); ++r) {
    detail::require(form.lambda[r] >= 0.0, "imhof route expects a nonnegative form");
    detail::require(form.delta2[r] >= 0.0, "noncentrality must be nonnegative");
    if (form.lambda[r] > 0.0) {
      f.lambda.push_back(form.lambda[r]);
      f.delta2.push_back(form.delta2[r]);
    }
  }
  if (f.lambda.empty()) {
    res.probability = form.threshold >= 0.0 ? 1.0 : 0.0;
    res.diagnostics = "deterministic form";
    return res;
  }
  if (form.threshold <= 0.0) {
    res.probability = 0.0;
    return res;
  }

  constexpr double pi = std::numbers::pi;
  // Aim for tol/2 overall so results at tol and tol/2 never differ by more than tol.
  const double trunc_budget = 0.25 * tol * pi;  // in units of the integral
  const double quad_budget = 0.25 * tol * pi;

  // Truncation point from Imhof's bound (bisection in log U).
  double lo = 1e-8, hi = 1e-8;
  while (f.imhof_tail(hi) > trunc_budget) {
    hi *= 2.0;
    if (hi > 1e300) throw NumericalError("imhof truncation point not found");
  }
  for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-6; ++it) {
    const double mid = std::sqrt(lo * hi);
    (f.imhof_tail(mid) > trunc_budget ? lo : hi) = mid;
  }
  double upper = hi;
  double correction = 0.0;
  double trunc_err = f.imhof_tail(hi);

  // Asymptotic tail usually allows a much shorter range.
  double u = 1e-3;
  for (std::size_t r = 0; r < f.lambda.size(); ++r) u = std::max(u, 2.0 / f.lambda[r]);
  while (!f.tail_regime(u) && u < upper) u *= 1.25;
  for (; u < upper; u *= 1.25) {
    const auto [corr, rem] = f.tail_expansion(u);
    if (rem <= trunc_budget) {
      upper = u;
      correction = corr;
      trunc_err = rem;
      break;
    }
  }

  // Panel width follows a bound on the local phase speed |theta'(u)|.
  auto speed = [&](double u) {
    double v = 0.5 * f.x;
    for (std::size_t r = 0; r < f.lambda.size(); ++r) {
      const double lu = f.lambda[r] * u;
      v += 0.5 * f.lambda[r] * (1.0 + f.delta2[r]) / (1.0 + lu * lu);
    }
    return v;
  };
  const double max_width = 4.0 * pi / f.x;

  struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  auto eval = [&](double a, double b) {
    double err = 0.0;
    const double v =
        boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 0, 0.0, &err);
    return Panel{a, b, v, err};
  };

  std::priority_queue<Panel> panels;
  double total = 0.0, total_err = 0.0;
  std::size_t count = 0;
  for (double a = 0.0; a < upper;) {
    const double width = std::clamp(pi / speed(a), 1e-12, max_width);
    const double b = std::min(upper, a + width);
    Panel p = eval(a, b);
    total += p.value;
    total_err += p.error;
    panels.push(p);
    a = b;
    if (++count > 2'000'000) throw NumericalError("imhof quadrature: too many panels");
  }
  constexpr int kMaxSplits = 200'000;
  int splits = 0;
  while (total_err > quad_budget) {
    if (++splits > kMaxSplits) throw NumericalError("imhof quadrature did not converge");
    const Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = eval(worst.a, mid);
    const Panel right = eval(mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }

  const double prob = 0.5 - (total + correction) / pi;
  const double bound = (trunc_err + total_err) / pi;
  res.probability = std::clamp(prob, 0.0, 1.0);
  res.error_bound = bound;
  if (!std::isfinite(prob)) throw NumericalError("imhof integral is not finite");
  return res;
}

inline CdfResult ltz_cdf(const SpectralForm& form) {
  detail::require(form.lambda.size() == form.delta2.size(), "spectral form size mismatch");
  double c[5] = {0, 0, 0, 0, 0};
  bool any = false;
  for (std::size_t r = 0; r < form.lambda.size(); ++r) {
    const double l = form.lambda[r];
    detail::require(form.delta2[r] >= 0.0, "noncentrality must be nonnegative");
    if (l != 0.0) any = true;
    double lk = 1.0;
    for (int k = 1; k <= 4; ++k) {
      lk *= l;
      c[k] += lk * (1.0 + k * form.delta2[r]);
    }
  }
  detail::require(any, "ltz needs at least one nonzero eigenvalue");

  const double s1 = c[3] / std::pow(c[2], 1.5);
  const double s2 = c[4] / (c[2] * c[2]);
  const double mu_q = c[1];
  const double sigma_q = std::sqrt(2.0 * c[2]);
  const double t_star = (form.threshold - mu_q) / sigma_q;

  double a, delta, l;
  CdfResult res;
  res.method = CdfMethod::ltz;
  if (s1 * s1 > s2) {
    a = 1.0 / (s1 - std::sqrt(s1 * s1 - s2));
    delta = s1 * a * a * a - a * a;
    l = a * a - 2.0 * delta;
    res.diagnostics = "branch=noncentral";
  } else {
    a = 1.0 / s1;
    delta = 0.0;
    l = c[2] * c[2] * c[2] / (c[3] * c[3]);
    res.diagnostics = "branch=central";
  }
  const double mu_x = l + delta;
  const double sigma_x = std::sqrt(2.0) * a;
  const double point = t_star * sigma_x + mu_x;
  // absolute accuracy far below the approximation's own error
  res.probability = noncentral_chi2_cdf(point, l, std::max(0.0, delta), 1e-16);
  return res;
}

enum class QfMethod { imhof, ltz };

/// Convenience wrapper: reduce and evaluate, with the point-mass shortcut.
inline CdfResult quadratic_form_cdf(const Ellipsoid& q, const Gaussian2D& g, double threshold,
                                    QfMethod method, double tol = 1e-6) {
  if (g.covariance().cwiseAbs().maxCoeff() == 0.0) {
    CdfResult r;
    r.method = CdfMethod::point_mass;
    r.probability = q(g.mean()) <= threshold ? 1.0 : 0.0;
    r.error_bound = 0.0;
    return r;
  }
  const SpectralForm form = spectral_reduce(q, g.mean(), g.covariance(), threshold);
  return method == QfMethod::imhof ? imhof_cdf(form, tol) : ltz_cdf(form);
}

}  // namespace agentrisk
