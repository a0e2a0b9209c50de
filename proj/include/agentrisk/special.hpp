#pragma once

#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "agentrisk/error.hpp"

namespace agentrisk {

/// CDF of a noncentral chi-square with `df` degrees of freedom and
/// noncentrality `ncp`, as a Poisson(ncp/2) mixture of central chi-squares.
/// Summation starts at the Poisson mode and walks outwards until the
/// remaining Poisson mass (bounded geometrically) is negligible.
/// A positive abs_tol also stops once the remainder is below it, and returns 0
/// outright when a Chernoff bound puts the whole lower tail below it.
inline double noncentral_chi2_cdf(double x, double df, double ncp, double abs_tol = 0.0) {
  detail::require(df > 0.0 && std::isfinite(df), "chi-square degrees of freedom must be positive");
  detail::require(ncp >= 0.0 && std::isfinite(ncp), "noncentrality must be nonnegative");
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double y = 0.5 * x;
  const double half_df = 0.5 * df;
  if (ncp == 0.0) return boost::math::gamma_p(half_df, y);
  if (abs_tol > 0.0 && x < df + ncp) {
    // P(X <= x) <= exp(s x) E[exp(-s X)], minimised at 1 + 2s = u
    const double u = (df + std::sqrt(df * df + 4.0 * x * ncp)) / (2.0 * x);
    if (u > 1.0) {
      const double s = 0.5 * (u - 1.0);
      if (s * x - half_df * std::log(u) - ncp * s / u < std::log(abs_tol)) return 0.0;
    }
  }

  const double lam = 0.5 * ncp;
  constexpr double kEps = 1e-17;
  constexpr int kMaxTerms = 1'000'000;

  const int j0 = static_cast<int>(std::floor(lam));
  const double log_p0 = -lam + j0 * std::log(lam) - std::lgamma(j0 + 1.0);
  const double p0 = std::exp(log_p0);
  const double cdf0 = boost::math::gamma_p(half_df + j0, y);
  double sum = p0 * cdf0;

  // upward: P(a, y) is decreasing in a, evaluated directly to avoid the
  // cancellation of the subtractive recurrence.
  double p = p0;
  for (int j = j0 + 1; j < j0 + kMaxTerms; ++j) {
    p *= lam / j;
    const double cdf = boost::math::gamma_p(half_df + j, y);
    sum += p * cdf;
    const double r = lam / (j + 1.0);
    const double rest = p * cdf * r / (1.0 - r);
    if (rest <= kEps * sum || (r < 1.0 && rest <= abs_tol) || (p == 0.0 && j > lam)) break;
  }

  // downward: P(a, y) = P(a + 1, y) + y^a e^{-y} / Gamma(a + 1), all terms positive.
  p = p0;
  double cdf = cdf0;
  for (int j = j0 - 1; j >= 0; --j) {
    p *= (j + 1.0) / lam;
    const double a = half_df + j;
    cdf += boost::math::gamma_p_derivative(a + 1.0, y);
    sum += p * cdf;
    const double r = j / lam;
    if (r < 1.0 && p * r / (1.0 - r) <= std::max(kEps * sum, abs_tol)) break;
  }
  if (!std::isfinite(sum)) throw NumericalError("noncentral chi-square series diverged");
  return std::min(1.0, std::max(0.0, sum));
}

}  // namespace agentrisk
